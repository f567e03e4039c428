// fidbound: process-fidelity bounds from per-state fidelity data.
//
// Exit codes: 0 success, 1 check-set on a non-identifying set, 2 input error,
// 3 method not applicable to the input, 4 solver failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fidbound/fidbound.hpp"

namespace {

using namespace fidbound;

enum Exit { ok = 0, not_identifying = 1, input_error = 2, inapplicable = 3, solver_failure = 4 };

struct Globals {
  double tol = 1e-7;
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  int threads = 1;
};

class Output {
public:
  explicit Output(const std::string &path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw io::DocumentError("cannot open output file " + path);
    }
  }
  std::ostream &stream() { return file_.is_open() ? static_cast<std::ostream &>(file_) : std::cout; }

private:
  std::ofstream file_;
};

std::string num(double v, int digits = 15) { return format_double(v, digits); }

sdp::SolveSettings solver_settings(const Globals &g) {
  sdp::SolveSettings s;
  s.tol = g.tol;
  return s;
}

io::StateSetDocument load(const std::string &path, const Globals &g) {
  io::StateSetDocument doc = io::load_document(path);
  if (!g.quiet)
    for (const auto &w : doc.warnings) std::cerr << "warning: " << w << "\n";
  return doc;
}

const std::vector<double> &require_eps(const io::StateSetDocument &doc) {
  if (!doc.epsilons) throw io::DocumentError("document has no \"epsilons\" field");
  return *doc.epsilons;
}

// ---------------------------------------------------------------- check-set

int check_set(const std::string &input, const Globals &g) {
  const auto doc = load(input, g);
  const StateSet &set = doc.set;
  const auto id = identifies_unitaries(set);
  const auto povm = is_symmetric_povm(set);
  Output out(g.out);
  auto &os = out.stream();
  os << "dimension: " << set.dim() << "\n";
  os << "states: " << set.size() << "\n";
  os << "spanning: " << (id.spanning ? "true" : "false") << " (rank " << id.rank << ")\n";
  os << "connected: " << (id.connected ? "true" : "false") << "\n";
  if (!id.connected) {
    os << "components:";
    for (const auto &c : id.components) {
      os << " {";
      for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
      os << "}";
    }
    os << "\n";
  }
  os << "identifying: " << (id.identifies ? "true" : "false") << "\n";
  if (!id.identifies) os << "reason: " << id.reason << "\n";
  os << "commutant_dimension: " << commutant_dimension(set) << "\n";
  os << "symmetric_povm: " << (povm.symmetric ? "true" : "false") << "\n";
  os << "c: " << num(povm.measured_c, 12) << "\n";
  os << "c_expected: " << num(povm.expected_c, 12) << "\n";
  if (povm.trivial) os << "symmetric_povm_note: trivial (orthonormal basis, c = 0)\n";
  if (!id.duplicates.empty()) {
    os << "duplicates:";
    for (const auto &[a, b] : id.duplicates) os << " (" << a << "," << b << ")";
    os << "\n";
  }
  return id.identifies ? ok : not_identifying;
}

// ---------------------------------------------------------------- bound

struct HofmannInputs {
  double f1_lower, f2_lower;
  double f1_upper, f2_upper;
  bool upper_from_u;
};

StateSet basis_from(const StateSet &set, const std::vector<int> &idx, const char *which) {
  const StateSet b = set.subset(idx);
  if (!is_orthonormal_basis(b))
    throw InapplicableError(std::string("hofmann: ") + which + " subset of \"mub_partition\" is not an orthonormal basis");
  return b;
}

HofmannInputs hofmann_inputs(const io::StateSetDocument &doc) {
  if (!doc.mub_partition) throw InapplicableError("hofmann: document has no \"mub_partition\"");
  const auto &eps = require_eps(doc);
  basis_from(doc.set, doc.mub_partition->first, "first");
  basis_from(doc.set, doc.mub_partition->second, "second");
  auto mean_fid = [](const std::vector<double> &v, const std::vector<int> &idx) {
    double s = 0.0;
    for (int k : idx) s += v[static_cast<std::size_t>(k)];
    return 1.0 - s / static_cast<double>(idx.size());
  };
  HofmannInputs h{};
  h.f1_lower = mean_fid(eps, doc.mub_partition->first);
  h.f2_lower = mean_fid(eps, doc.mub_partition->second);
  h.upper_from_u = doc.u.has_value();
  const auto &up = doc.u ? *doc.u : eps;
  h.f1_upper = mean_fid(up, doc.mub_partition->first);
  h.f2_upper = mean_fid(up, doc.mub_partition->second);
  return h;
}

BoundCertificate hofmann_certificate(const io::StateSetDocument &doc) {
  const auto h = hofmann_inputs(doc);
  BoundCertificate cert = hofmann_bounds(h.f1_lower, h.f2_lower);
  cert.upper = std::min(h.f1_upper, h.f2_upper);
  cert.inputs_digest = inputs_digest(doc.set, require_eps(doc), doc.u ? std::span<const double>(*doc.u)
                                                                       : std::span<const double>());
  cert.metadata["F1"] = num(h.f1_lower);
  cert.metadata["F2"] = num(h.f2_lower);
  if (!h.upper_from_u) cert.metadata["upper_note"] = "no \"u\" given; epsilons taken as measured infidelities";
  return cert;
}

BoundCertificate compute_bound(const std::string &method, const io::StateSetDocument &doc, const Globals &g,
                               const SpanningSelection &selection) {
  const auto &eps = require_eps(doc);
  if (method == "thm2" || method == "sqrt-eps") return lower_bound_small_eps(doc.set, std::span(eps), selection);
  if (method == "thm3" || method == "symmetric-povm") {
    if (doc.u) return symmetric_povm_bounds(doc.set, eps, std::span<const double>(*doc.u));
    return symmetric_povm_bounds(doc.set, eps);
  }
  if (method == "hofmann") return hofmann_certificate(doc);
  if (method == "sdp-min") return sdp::f_min(doc.set, eps, solver_settings(g));
  if (method == "sdp-max") {
    auto cert = sdp::f_max(doc.set, doc.u ? *doc.u : eps, solver_settings(g));
    cert.metadata["constraint"] = doc.u ? "u" : "epsilons";
    return cert;
  }
  throw io::DocumentError("unknown method " + method);
}

void print_certificate(std::ostream &os, const BoundCertificate &c) {
  os << "method: " << method_name(c.method) << "\n";
  os << "lower: " << (c.lower ? num(*c.lower) : "none") << "\n";
  os << "upper: " << (c.upper ? num(*c.upper) : "none") << "\n";
  os << "asymptotic: " << (c.asymptotic ? "true" : "false") << "\n";
  os << "inputs_digest: " << c.inputs_digest << "\n";
  for (const auto &[k, v] : c.metadata) os << k << ": " << v << "\n";
}

std::string certificate_json(const BoundCertificate &c) {
  nlohmann::json j;
  j["method"] = std::string(method_name(c.method));
  j["lower"] = c.lower ? nlohmann::json(*c.lower) : nlohmann::json(nullptr);
  j["upper"] = c.upper ? nlohmann::json(*c.upper) : nlohmann::json(nullptr);
  j["asymptotic"] = c.asymptotic;
  j["inputs_digest"] = c.inputs_digest;
  j["metadata"] = c.metadata;
  return j.dump(2);
}

int bound(const std::string &input, const std::string &method, const std::string &format,
          const SpanningSelection &selection, const Globals &g) {
  const auto doc = load(input, g);
  require_eps(doc);
  Output out(g.out);
  auto &os = out.stream();
  if (method != "all") {
    const auto cert = compute_bound(method, doc, g, selection);
    if (format == "json")
      os << certificate_json(cert) << "\n";
    else
      print_certificate(os, cert);
    return ok;
  }
  // comparison table; inapplicable methods are listed with the reason
  const std::vector<std::string> methods = {"thm2", "thm3", "hofmann", "sdp-min", "sdp-max"};
  nlohmann::json all = nlohmann::json::array();
  char line[256];
  if (format != "json") {
    std::snprintf(line, sizeof line, "%-16s %-18s %-18s %s\n", "method", "lower", "upper", "note");
    os << line;
  }
  bool solver_failed = false;
  for (const auto &m : methods) {
    try {
      const auto cert = compute_bound(m, doc, g, selection);
      if (format == "json") {
        all.push_back(nlohmann::json::parse(certificate_json(cert)));
      } else {
        std::string note = cert.asymptotic ? "asymptotic" : "";
        std::snprintf(line, sizeof line, "%-16s %-18s %-18s %s\n", std::string(method_name(cert.method)).c_str(),
                      cert.lower ? num(*cert.lower, 12).c_str() : "-", cert.upper ? num(*cert.upper, 12).c_str() : "-",
                      note.c_str());
        os << line;
      }
    } catch (const InapplicableError &e) {
      if (format == "json")
        all.push_back({{"method", m}, {"inapplicable", e.what()}});
      else {
        std::snprintf(line, sizeof line, "%-16s %-18s %-18s %s\n", m.c_str(), "-", "-", e.what());
        os << line;
      }
    } catch (const ConditioningError &e) {
      if (format == "json")
        all.push_back({{"method", m}, {"inapplicable", e.what()}});
      else {
        std::snprintf(line, sizeof line, "%-16s %-18s %-18s %s\n", m.c_str(), "-", "-", e.what());
        os << line;
      }
    } catch (const SolverError &e) {
      solver_failed = true;
      if (format == "json")
        all.push_back({{"method", m}, {"solver_failure", e.what()}});
      else {
        std::snprintf(line, sizeof line, "%-16s %-18s %-18s %s\n", m.c_str(), "-", "-", e.what());
        os << line;
      }
    }
  }
  if (format == "json") os << all.dump(2) << "\n";
  return solver_failed ? solver_failure : ok;
}

// ---------------------------------------------------------------- sweep

std::vector<double> linear_grid(double start, double stop, int steps) {
  if (steps < 1) throw io::DocumentError("--eps-steps must be >= 1 (empty grid)");
  if (!(start >= 0.0 && stop <= 1.0 && start <= stop))
    throw io::DocumentError("epsilon grid must satisfy 0 <= start <= stop <= 1");
  if (steps == 1) return {start};
  std::vector<double> g;
  for (int i = 0; i < steps; ++i) g.push_back(start + (stop - start) * i / (steps - 1));
  return g;
}

int sweep(const std::string &input, double start, double stop, int steps, const Globals &g) {
  const auto grid = linear_grid(start, stop, steps);
  const auto doc = load(input, g);
  const auto rows = sdp::sweep(doc.set, grid, solver_settings(g), g.threads);
  Output out(g.out);
  auto &os = out.stream();
  os << "epsilon,f_min,solver_status,gap\n";
  bool all_ok = true;
  for (const auto &r : rows) {
    os << num(r.eps, 17) << "," << num(r.f_min, 17) << "," << sdp::status_name(r.status) << "," << num(r.gap, 6)
       << "\n";
    all_ok = all_ok && r.status == sdp::Status::optimal;
  }
  if (!all_ok && !g.quiet) std::cerr << "warning: some grid points did not solve to optimality\n";
  return ok;
}

// ---------------------------------------------------------------- simulate

int simulate(const std::string &channel_name, const std::string &input, int dim, std::optional<double> eps,
             std::optional<double> q, bool mubs, const Globals &g) {
  std::optional<io::StateSetDocument> doc;
  if (!input.empty()) doc = load(input, g);
  const StateSet set = doc ? doc->set : make_simplex(dim);
  const int d = set.dim();

  KrausChannel channel = KrausChannel::identity(d);
  std::string params;
  if (channel_name == "depolarizing") {
    if (q && eps) throw io::DocumentError("give either --q or --eps for the depolarizing channel, not both");
    if (!q && !eps) throw io::DocumentError("depolarizing channel needs --q or --eps");
    const double qq = q ? *q : d * *eps / (d - 1.0);
    channel = depolarizing(d, qq);
    params = "q=" + num(qq, 12);
  } else if (channel_name == "min-channel") {
    if (!eps) throw io::DocumentError("min-channel needs --eps");
    channel = min_fidelity_channel(set, *eps);
    params = "eps=" + num(*eps, 12) + " p=" + num(min_fidelity_mixing(d, set.size(), *eps), 12);
  } else if (channel_name == "xy-dephasing") {
    if (d != 2) throw io::DocumentError("xy-dephasing is defined for d = 2 only");
    if (!eps) throw io::DocumentError("xy-dephasing needs --eps");
    channel = xy_dephasing(*eps);
    params = "eps=" + num(*eps, 12);
  } else {
    throw io::DocumentError("unknown channel " + channel_name);
  }

  const ChoiMatrix choi = choi_from_kraus(channel);
  const double f = process_fidelity(choi);
  Output out(g.out);
  auto &os = out.stream();
  os << "channel: " << channel_name << " (" << params << ")\n";
  os << "dimension: " << d << "\n";
  std::vector<double> infid;
  for (int k = 0; k < set.size(); ++k) {
    const double fk = state_fidelity(choi, set[k]);
    infid.push_back(std::max(0.0, 1.0 - fk));
    os << "state_fidelity[" << k << "]: " << num(fk, 15) << "\n";
  }
  os << "process_fidelity: " << num(f, 15) << "\n";
  os << "average_fidelity: " << num(average_fidelity(f, d), 15) << "\n";

  std::optional<double> thm3_lower;
  if (set.size() > d && is_symmetric_povm(set).symmetric) {
    const auto cert = symmetric_povm_bounds(set, infid, std::span<const double>(infid));
    thm3_lower = *cert.lower;
    os << "symmetric_povm_lower: " << num(*cert.lower, 15) << "\n";
    os << "symmetric_povm_upper: " << num(*cert.upper, 15) << "\n";
  }

  std::optional<std::pair<StateSet, StateSet>> bases;
  if (doc && doc->mub_partition)
    bases.emplace(basis_from(set, doc->mub_partition->first, "first"),
                  basis_from(set, doc->mub_partition->second, "second"));
  else if (mubs)
    bases.emplace(make_computational_basis(d), make_fourier_basis(d));
  if (bases) {
    const double f1 = classical_fidelity(channel, bases->first);
    const double f2 = classical_fidelity(channel, bases->second);
    const auto h = hofmann_bounds(f1, f2);
    os << "F1: " << num(f1, 15) << "\n";
    os << "F2: " << num(f2, 15) << "\n";
    os << "hofmann_lower: " << num(*h.lower, 15) << "\n";
    os << "hofmann_upper: " << num(*h.upper, 15) << "\n";
    if (thm3_lower && channel_name == "min-channel")
      os << "hofmann_upper_minus_symmetric_povm_lower: " << num(*h.upper - *thm3_lower, 6) << "\n";
  }
  return ok;
}

// ---------------------------------------------------------------- fig1

int fig1(int dim, int num_sets, const Globals &g) {
  if (dim < 2 || dim > 8) throw io::DocumentError("--dim must lie in [2, 8]");
  if (num_sets < 1) throw io::DocumentError("--num-sets must be >= 1");
  std::mt19937_64 master(g.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(num_sets));
  for (auto &s : seeds) s = master();

  struct Row {
    std::uint64_t seed;
    double C = 0.0, a = 0.0;
    std::string status = "ok";
  };
  const sdp::SolveSettings settings = solver_settings(g);
  const auto rows = sdp::parallel_map(num_sets, g.threads, [&](int i) {
    Row r;
    r.seed = seeds[static_cast<std::size_t>(i)];
    try {
      const StateSet set = make_haar_random_set(dim, dim, r.seed);
      r.C = sqrt_eps_coefficient(set).C;
      r.a = sdp::fit_sqrt_coefficient(set, settings).coefficient;
    } catch (const SolverError &) {
      r.status = "solver-failure";
    } catch (const Error &) {
      r.status = "not-identifying";
    }
    return r;
  });

  Output out(g.out);
  auto &os = out.stream();
  os << "set,seed,C,fitted_a,ratio,status\n";
  std::vector<double> ratios;
  int violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &r = rows[i];
    const bool good = r.status == "ok";
    const double ratio = good ? r.C / r.a : std::nan("");
    if (good) {
      ratios.push_back(ratio);
      if (r.a > r.C) ++violations;
    }
    os << i << "," << r.seed << "," << (good ? num(r.C, 15) : "") << "," << (good ? num(r.a, 15) : "") << ","
       << (good ? num(ratio, 15) : "") << "," << r.status << "\n";
  }
  if (!g.quiet && !ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    std::cerr << "sets: " << rows.size() << ", solved: " << ratios.size() << ", fitted_a > C: " << violations
              << ", median ratio: " << num(ratios[ratios.size() / 2], 6) << " (min " << num(ratios.front(), 6)
              << ", max " << num(ratios.back(), 6) << ")\n";
  }
  return ok;
}

// ---------------------------------------------------------------- generate

int generate(const std::string &kind, int dim, int num, std::optional<double> eps, const Globals &g) {
  io::StateSetDocument doc;
  if (kind == "simplex")
    doc.set = make_simplex(dim);
  else if (kind == "computational")
    doc.set = make_computational_basis(dim);
  else if (kind == "fourier")
    doc.set = make_fourier_basis(dim);
  else if (kind == "basis-rotated")
    doc.set = make_basis_plus_totally_rotated(dim);
  else if (kind == "haar")
    doc.set = make_haar_random_set(dim, num > 0 ? num : dim, g.seed);
  else if (kind == "sic") {
    if (dim != 2) throw io::DocumentError("sic is available for d = 2 only");
    doc.set = make_qubit_sic();
  } else if (kind == "mub") {
    const StateSet basis = make_computational_basis(dim);
    const StateSet fourier = make_fourier_basis(dim);
    std::vector<PureState> states = basis.states();
    for (const auto &s : fourier.states()) states.push_back(s);
    doc.set = StateSet(dim, std::move(states));
    std::vector<int> a(static_cast<std::size_t>(dim)), b(static_cast<std::size_t>(dim));
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), dim);
    doc.mub_partition = std::pair{a, b};
  } else {
    throw io::DocumentError("unknown set kind " + kind);
  }
  if (eps) doc.epsilons = std::vector<double>(static_cast<std::size_t>(doc.set.size()), *eps);
  Output out(g.out);
  out.stream() << io::serialize_document(doc);
  return ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Process-fidelity bounds from per-state fidelity data"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol", g.tol, "SDP solver tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Write output to this file instead of stdout");
  app.add_flag("--quiet", g.quiet, "Suppress warnings and summaries on stderr");
  app.add_option("--threads", g.threads, "Worker threads for sweep and fig1")->check(CLI::PositiveNumber);

  std::string input;
  auto *check = app.add_subcommand("check-set", "Identifiability and symmetric-POVM report");
  check->add_option("--input", input, "State-set document")->required();

  std::string method = "all", format = "text", selection_mode = "greedy";
  int trials = 32;
  auto *bnd = app.add_subcommand("bound", "Fidelity bound certificates");
  bnd->add_option("--input", input, "State-set document with epsilons")->required();
  bnd->add_option("--method", method, "thm2 | thm3 | hofmann | sdp-min | sdp-max | all")
      ->check(CLI::IsMember({"thm2", "thm3", "sqrt-eps", "symmetric-povm", "hofmann", "sdp-min", "sdp-max", "all"}));
  bnd->add_option("--format", format, "text | json")->check(CLI::IsMember({"text", "json"}));
  bnd->add_option("--selection", selection_mode, "Spanning subset for thm2: greedy | random")
      ->check(CLI::IsMember({"greedy", "random"}));
  bnd->add_option("--trials", trials, "Random spanning subsets tried with --selection random");

  double start = 0.0, stop = 0.02;
  int steps = 5;
  auto *swp = app.add_subcommand("sweep", "F_min over a constant-epsilon grid (CSV)");
  swp->add_option("--input", input, "State-set document")->required();
  swp->add_option("--eps-start", start, "First grid value");
  swp->add_option("--eps-stop", stop, "Last grid value");
  swp->add_option("--eps-steps", steps, "Number of grid points");

  std::string channel;
  int dim = 2;
  std::optional<double> eps, q;
  bool mubs = false;
  auto *sim = app.add_subcommand("simulate", "Fidelities of a model channel");
  sim->add_option("--channel", channel, "depolarizing | min-channel | xy-dephasing")
      ->required()
      ->check(CLI::IsMember({"depolarizing", "min-channel", "xy-dephasing"}));
  sim->add_option("--input", input, "State-set document (default: simplex of --dim)");
  sim->add_option("--dim", dim, "Dimension when no input is given");
  sim->add_option("--eps", eps, "State infidelity parameter");
  sim->add_option("--q", q, "Depolarizing strength");
  sim->add_flag("--mubs", mubs, "Also report classical fidelities on the computational and Fourier bases");

  int num_sets = 10;
  auto *f1 = app.add_subcommand("fig1", "Fitted sqrt(eps) coefficient versus C for Haar-random sets (CSV)");
  f1->add_option("--dim", dim, "Dimension (2..8)");
  f1->add_option("--num-sets", num_sets, "Number of random sets");

  std::string kind;
  int num = 0;
  auto *gen = app.add_subcommand("generate", "Write a state-set document");
  gen->add_option("--kind", kind, "simplex | computational | fourier | basis-rotated | haar | sic | mub")->required();
  gen->add_option("--dim", dim, "Dimension");
  gen->add_option("--num", num, "Number of states for haar (default: dim)");
  gen->add_option("--eps", eps, "Constant epsilon to attach");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return input_error;
  }

  try {
    if (*check) return check_set(input, g);
    if (*bnd) {
      SpanningSelection sel =
          selection_mode == "random" ? SpanningSelection::random(trials, g.seed) : SpanningSelection::greedy();
      return bound(input, method, format, sel, g);
    }
    if (*swp) return sweep(input, start, stop, steps, g);
    if (*sim) return simulate(channel, input, dim, eps, q, mubs, g);
    if (*f1) return fig1(dim, num_sets, g);
    if (*gen) return generate(kind, dim, num, eps, g);
  } catch (const InapplicableError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return inapplicable;
  } catch (const ConditioningError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return inapplicable;
  } catch (const SolverError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return solver_failure;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return input_error;
  }
  return input_error;
}
