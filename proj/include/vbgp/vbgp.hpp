#pragma once

#include "vbgp/bessel.hpp"
#include "vbgp/error.hpp"
#include "vbgp/experiments.hpp"
#include "vbgp/gp_core.hpp"
#include "vbgp/kernels.hpp"
#include "vbgp/metrics.hpp"
#include "vbgp/parallel.hpp"
#include "vbgp/quadrature.hpp"
#include "vbgp/random.hpp"
#include "vbgp/spectral.hpp"
#include "vbgp/svgp.hpp"
#include "vbgp/theory_checks.hpp"
