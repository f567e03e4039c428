#include <cstdio>
#include <fstream>

#include "fidbound/io.hpp"
#include "test_support.hpp"

using namespace fidbound;
using namespace fidbound::io;

namespace {

std::string message_of(const std::string &text) {
  try {
    parse_document(text);
  } catch (const DocumentError &e) {
    return e.what();
  }
  return {};
}

} // namespace

TEST(ParseDocument, MinimalQubit) {
  const auto doc = parse_document(R"({"dimension": 2, "states": [[[1, 0], [0, 0]], [[0.6, 0], [0, 0.8]]]})");
  EXPECT_EQ(doc.set.dim(), 2);
  ASSERT_EQ(doc.set.size(), 2);
  EXPECT_EQ(doc.set[1](1), cplx(0, 0.8));
  EXPECT_FALSE(doc.epsilons.has_value());
  EXPECT_TRUE(doc.warnings.empty());
}

TEST(ParseDocument, OptionalFields) {
  const auto doc = parse_document(R"({
    "dimension": 2,
    "states": [[[1, 0], [0, 0]], [[0, 0], [1, 0]], [[0.7071067811865476, 0], [0.7071067811865476, 0]],
               [[0.7071067811865476, 0], [-0.7071067811865476, 0]]],
    "epsilons": [0.01, 0.01, 0.02, 0.02],
    "u": [0.0, 0.0, 0.01, 0.01],
    "labels": ["z+", "z-", "x+", "x-"],
    "mub_partition": [[0, 1], [2, 3]]
  })");
  EXPECT_EQ(doc.epsilons->at(2), 0.02);
  EXPECT_EQ(doc.u->at(3), 0.01);
  EXPECT_EQ(doc.set.labels()[2], "x+");
  EXPECT_EQ(doc.mub_partition->second, (std::vector<int>{2, 3}));
}

TEST(ParseDocument, RenormalizesSmallDrift) {
  const auto doc = parse_document(R"({"dimension": 2, "states": [[[1.0000005, 0], [0, 0]]]})");
  ASSERT_EQ(doc.warnings.size(), 1u);
  EXPECT_NE(doc.warnings[0].find("re-normalized"), std::string::npos);
  EXPECT_NEAR(doc.set[0].amplitudes().norm(), 1.0, 1e-15);
}

TEST(ParseDocument, RejectsBadNorm) {
  const std::string m = message_of(R"({"dimension": 2, "states": [[[0.9, 0], [0, 0]]]})");
  EXPECT_NE(m.find("\"states\"[0]"), std::string::npos) << m;
  EXPECT_NE(m.find("norm"), std::string::npos);
}

TEST(ParseDocument, ReportsLineAndField) {
  const std::string syntax = message_of("{\n  \"dimension\": 2,\n  \"states\": [[[1, 0], [0, 0]],\n}");
  EXPECT_NE(syntax.find("line 4"), std::string::npos) << syntax;

  EXPECT_NE(message_of(R"({"states": []})").find("dimension"), std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2})").find("states"), std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2, "states": [[[1, 0]]]})").find("expected 2 amplitudes"), std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2, "states": [[[1, 0], [0]]]})").find("[re, im]"), std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2, "states": [[[1, 0], [0, "x"]]]})").find("[1][1]"), std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2, "states": [[[1, 0], [0, 0]]], "epsilons": [0.1, 0.2]})")
                .find("\"epsilons\""),
            std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2, "states": [[[1, 0], [0, 0]]], "epsilons": [1.5]})").find("[0, 1]"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 2, "states": [[[1, 0], [0, 0]]], "mub_partition": [[0], [3]]})")
                .find("out of range"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"dimension": 40, "states": []})").find("dimension"), std::string::npos);
  EXPECT_NE(message_of("[1, 2]").find("object"), std::string::npos);
}

TEST(Serialize, RoundTripKeepsAmplitudes) {
  StateSetDocument doc = make_document(make_haar_random_set(5, 7, 3), std::vector<double>(7, 1e-3));
  doc.u = std::vector<double>(7, 2.5e-4);
  const auto back = parse_document(serialize_document(doc));
  ASSERT_EQ(back.set.size(), 7);
  for (int k = 0; k < 7; ++k)
    for (int i = 0; i < 5; ++i) {
      // shortest round-trip output reproduces the doubles exactly
      EXPECT_EQ(back.set[k](i), doc.set[k](i));
      EXPECT_LE(std::abs(back.set[k](i) - doc.set[k](i)), 1e-15 * std::abs(doc.set[k](i)));
    }
  EXPECT_EQ(*back.epsilons, *doc.epsilons);
  EXPECT_EQ(*back.u, *doc.u);
  EXPECT_TRUE(back.warnings.empty());
}

TEST(Serialize, RoundTripNamedSets) {
  for (const auto &s : {make_simplex(4), make_fourier_basis(3), make_qubit_sic()}) {
    const auto back = parse_document(serialize_document(make_document(s)));
    EXPECT_EQ(back.set.labels(), s.labels());
    EXPECT_EQ(max_abs(back.set.columns() - s.columns()), 0.0);
  }
}

TEST(LoadDocument, PrefixesPath) {
  const std::string path = ::testing::TempDir() + "fidbound_bad.json";
  {
    std::ofstream out(path);
    out << R"({"dimension": 2, "states": [[[0.5, 0], [0, 0]]]})";
  }
  try {
    load_document(path);
    FAIL() << "expected DocumentError";
  } catch (const DocumentError &e) {
    EXPECT_EQ(std::string(e.what()).rfind(path, 0), 0u);
  }
  std::remove(path.c_str());
  EXPECT_THROW(load_document(path), DocumentError);
}
