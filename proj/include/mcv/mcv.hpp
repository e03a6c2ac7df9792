#pragma once

// Numerical core. The scenario/sweep/report headers additionally need yaml-cpp.
#include "mcv/grid.hpp"
#include "mcv/interface.hpp"
#include "mcv/shell.hpp"
#include "mcv/field.hpp"
#include "mcv/index.hpp"
#include "mcv/norms.hpp"
#include "mcv/solver.hpp"
#include "mcv/identities.hpp"
