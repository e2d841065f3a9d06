#pragma once

// Umbrella header.
#include "eqsc/linalg.hpp"
#include "eqsc/polynomial.hpp"
#include "eqsc/group_action.hpp"
#include "eqsc/hamiltonian.hpp"
#include "eqsc/models.hpp"
#include "eqsc/flow.hpp"
#include "eqsc/orbits.hpp"
#include "eqsc/phase.hpp"
#include "eqsc/test_functions.hpp"
#include "eqsc/weyl.hpp"
#include "eqsc/gutzwiller.hpp"
#include "eqsc/quantization.hpp"
#include "eqsc/config.hpp"
#include "eqsc/cli.hpp"
