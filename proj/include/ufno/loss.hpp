#pragma once

#include <cmath>
#include <cstddef>

#include "ufno/grid.hpp"
#include "ufno/tensor.hpp"

namespace ufno {

/// Average layer-wise relative error between prediction u and truth v over an
/// X*Y*Z volume: per z-slice, the ratio of the L2 norm of the error to the L2
/// norm of the truth, averaged over slices. Slices whose truth norm is zero
/// carry no information and are excluded from the average; it is an error for
/// every slice to be zero.
template <typename T>
double layerwise_relative_loss(const T* u, const T* v, std::size_t X, std::size_t Y,
                               std::size_t Z) {
  const std::size_t plane = X * Y;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t z = 0; z < Z; ++z) {
    const T* uz = u + z * plane;
    const T* vz = v + z * plane;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = double(uz[i]) - double(vz[i]);
      num += d * d;
      den += double(vz[i]) * double(vz[i]);
    }
    if (den == 0.0) continue;
    total += std::sqrt(num / den);
    ++used;
  }
  if (used == 0) fail(ErrorCode::invalid_argument, "loss: every z-layer of the truth has zero norm");
  return total / double(used);
}

/// Loss plus its gradient with respect to u. Layers with zero truth norm
/// contribute zero gradient; a layer with exactly zero error sits at the
/// (subdifferentiable) minimum and also contributes zero.
template <typename T>
double layerwise_relative_loss_grad(const T* u, const T* v, std::size_t X, std::size_t Y,
                                    std::size_t Z, T* grad_u) {
  const std::size_t plane = X * Y;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t z = 0; z < Z; ++z) {
    const T* vz = v + z * plane;
    double den = 0.0;
    for (std::size_t i = 0; i < plane; ++i) den += double(vz[i]) * double(vz[i]);
    if (den != 0.0) ++used;
  }
  if (used == 0) fail(ErrorCode::invalid_argument, "loss: every z-layer of the truth has zero norm");
  const double inv_used = 1.0 / double(used);

  for (std::size_t z = 0; z < Z; ++z) {
    const T* uz = u + z * plane;
    const T* vz = v + z * plane;
    T* gz = grad_u + z * plane;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = double(uz[i]) - double(vz[i]);
      num += d * d;
      den += double(vz[i]) * double(vz[i]);
    }
    if (den == 0.0 || num == 0.0) {
      // Excluded layer, or a layer already at its minimum: no gradient.
      for (std::size_t i = 0; i < plane; ++i) gz[i] = T(0);
      continue;
    }
    total += std::sqrt(num / den);
    const double scale = inv_used / std::sqrt(num * den);
    for (std::size_t i = 0; i < plane; ++i)
      gz[i] = T(scale * (double(uz[i]) - double(vz[i])));
  }
  return total * inv_used;
}

double layerwise_relative_loss(const ScalarField& u, const ScalarField& v);

} // namespace ufno
