#pragma once

//! Umbrella header: Bayes errors, vicinity-convolved distributions, and
//! certified-robustness bounds for 2-D classification distributions.

#include "rbound/bayes.hpp"
#include "rbound/bounds.hpp"
#include "rbound/calibrate.hpp"
#include "rbound/convolution.hpp"
#include "rbound/correctness.hpp"
#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/grid.hpp"
#include "rbound/render.hpp"
#include "rbound/sampling.hpp"
#include "rbound/version.hpp"
#include "rbound/vicinity.hpp"
