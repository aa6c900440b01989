#pragma once

#include <vector>

#include "ufno/grid.hpp"

namespace ufno {

/// Piecewise cubic through (x_i, y_i) with natural boundary conditions
/// (second derivative zero at both end knots). Segment i covers
/// [x_i, x_{i+1}] and evaluates as a + b*t + c*t^2 + d*t^3 with t = x - x_i.
struct SplineCoeffs {
  std::vector<double> knots_x;
  std::vector<double> a, b, c, d; // one entry per segment
  bool degraded_to_linear = false; // set when fitted through only 2 points

  std::size_t segment_count() const { return a.size(); }
};

/// Fits the natural cubic spline through the given knots. The tridiagonal
/// system for the interior second derivatives is solved exactly with the
/// Thomas algorithm. With exactly 2 points the fit degrades to the straight
/// line and sets degraded_to_linear.
SplineCoeffs fit_spline(const std::vector<double>& xs, const std::vector<double>& ys);

/// Evaluates the owning segment's cubic. x must lie within the knot range
/// (a relative slack of 1e-9 of the span is tolerated at the ends).
double eval_spline(const SplineCoeffs& coeffs, double x);

/// Separable spline downsampling: fit-and-evaluate along x, then y, then z,
/// from source cell centers onto target cell centers. Axes whose extent
/// count is unchanged are passed through untouched. Requires target dims <=
/// source dims per axis and matching physical extents.
ScalarField downsample(const ScalarField& field, const Grid3& target);

/// As above, then re-zeroes cells that are solid in `target_mask` (spline
/// smearing would otherwise leak nonzero values into buildings).
ScalarField downsample(const ScalarField& field, const Grid3& target,
                       const BuildingMask& target_mask);

/// Projects a mask onto another grid covering the same domain: a target cell
/// is solid iff the source cell containing its center is solid.
BuildingMask resample_mask(const BuildingMask& mask, const Grid3& target);

} // namespace ufno
