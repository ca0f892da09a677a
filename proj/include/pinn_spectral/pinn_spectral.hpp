#pragma once

// Numerical core. serialization.hpp, io.hpp and experiments.hpp additionally
// need nlohmann/json on the include path.

#include "error.hpp"
#include "geometry.hpp"
#include "gpr.hpp"
#include "kernels.hpp"
#include "linalg.hpp"
#include "nie.hpp"
#include "operators.hpp"
#include "parallel.hpp"
#include "problems.hpp"
#include "spectral.hpp"
#include "stencils.hpp"
#include "types.hpp"
