#pragma once

/// \file dgcg.hpp
/// Umbrella header.

#include "dgcg/quadrature.hpp"
#include "dgcg/problem.hpp"
#include "dgcg/tridiagonal.hpp"
#include "dgcg/spatial_fem.hpp"
#include "dgcg/time_dg.hpp"
#include "dgcg/reconstruction.hpp"
#include "dgcg/estimators.hpp"
#include "dgcg/bounds.hpp"
#include "dgcg/verify.hpp"
#include "dgcg/pipeline.hpp"
