#pragma once

#include "fidbound/analytic_bounds.hpp"
#include "fidbound/certificate.hpp"
#include "fidbound/channels.hpp"
#include "fidbound/choi.hpp"
#include "fidbound/core.hpp"
#include "fidbound/errors.hpp"
#include "fidbound/io.hpp"
#include "fidbound/sdp/conic.hpp"
#include "fidbound/sdp/fidelity_sdp.hpp"
#include "fidbound/state_sets.hpp"
