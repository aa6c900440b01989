#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "ufno/error.hpp"

namespace ufno {

/// Dense channel-major 4D tensor over a 3D grid: values[c][z][y][x] with x
/// fastest, matching ScalarField ordering within each channel.
template <typename T>
struct Tensor {
  std::size_t c = 0, x = 0, y = 0, z = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(std::size_t c_, std::size_t x_, std::size_t y_, std::size_t z_)
      : c(c_), x(x_), y(y_), z(z_), v(c_ * x_ * y_ * z_, T(0)) {}

  std::size_t cell_count() const { return x * y * z; }
  std::size_t size() const { return v.size(); }
  T* channel(std::size_t ci) { return v.data() + ci * cell_count(); }
  const T* channel(std::size_t ci) const { return v.data() + ci * cell_count(); }

  bool same_shape(const Tensor& o) const { return c == o.c && x == o.x && y == o.y && z == o.z; }
  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

/// Half-spectrum complex companion of Tensor: extents {c, x, y, z/2+1} with
/// interleaved (re, im) pairs, kx fastest.
template <typename T>
struct ComplexTensor {
  std::size_t c = 0, x = 0, y = 0, zh = 0;
  std::vector<T> v; // interleaved, size 2*c*x*y*zh

  ComplexTensor() = default;
  ComplexTensor(std::size_t c_, std::size_t x_, std::size_t y_, std::size_t zh_)
      : c(c_), x(x_), y(y_), zh(zh_), v(2 * c_ * x_ * y_ * zh_, T(0)) {}

  std::size_t bin_count() const { return x * y * zh; }
  T* channel(std::size_t ci) { return v.data() + 2 * ci * bin_count(); }
  const T* channel(std::size_t ci) const { return v.data() + 2 * ci * bin_count(); }
};

} // namespace ufno
