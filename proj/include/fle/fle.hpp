#pragma once

#include "fle/errors.hpp"
#include "fle/extended_real.hpp"
#include "fle/special.hpp"
#include "fle/quadrature.hpp"
#include "fle/radial.hpp"
#include "fle/exponents.hpp"
#include "fle/fraclap.hpp"
#include "fle/spline.hpp"
#include "fle/grid.hpp"
#include "fle/extension.hpp"
#include "fle/monotonicity.hpp"
#include "fle/io.hpp"
#include "fle/verify.hpp"
