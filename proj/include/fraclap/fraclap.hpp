#pragma once

// Umbrella header.

#include "core.hpp"
#include "specfun.hpp"
#include "grid.hpp"
#include "fracops.hpp"
#include "bank.hpp"
#include "spaces.hpp"
#include "harmonics.hpp"
#include "basis.hpp"
#include "varmin.hpp"
#include "galerkin.hpp"
#include "boundary.hpp"
#include "expr.hpp"

namespace fraclap {
inline constexpr const char* version = "0.1.0";
}
