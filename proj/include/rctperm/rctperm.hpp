#pragma once

// Umbrella header for the whole library.

#include "rctperm/estimators.hpp"
#include "rctperm/experiment.hpp"
#include "rctperm/instances.hpp"
#include "rctperm/io.hpp"
#include "rctperm/model.hpp"
#include "rctperm/oracle.hpp"
#include "rctperm/policy.hpp"
#include "rctperm/rng.hpp"
#include "rctperm/schemas.hpp"
#include "rctperm/sim.hpp"
#include "rctperm/trial.hpp"
