#pragma once

// Umbrella header: the whole laboratory in one include.

#include "amplification.hpp"
#include "checks.hpp"
#include "common.hpp"
#include "detectors.hpp"
#include "dynamics.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "ontology.hpp"
#include "pointer.hpp"
#include "random.hpp"
#include "rng.hpp"
#include "run.hpp"
#include "state.hpp"
