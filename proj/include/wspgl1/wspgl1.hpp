#pragma once

#include "errors.hpp"
#include "linop.hpp"
#include "norms.hpp"
#include "spg_lasso.hpp"
#include "drivers.hpp"
#include "baselines.hpp"
#include "harness.hpp"
