#pragma once

// Brute-force O(N^2) reference DFT used as the oracle for the fast transforms.
// Plain sums against the e^{-2 pi i sum(x_j k_j / s_j)} kernel, nothing shared
// with the implementation under test.

#include <complex>
#include <numbers>
#include <vector>

#include "ufno/tensor.hpp"

namespace oracle {

// Full complex forward DFT of one real channel; bins indexed [kz][ky][kx].
inline std::vector<std::complex<double>> dft3(const double* f, std::size_t X, std::size_t Y,
                                              std::size_t Z) {
  std::vector<std::complex<double>> F(X * Y * Z);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t kz = 0; kz < Z; ++kz)
    for (std::size_t ky = 0; ky < Y; ++ky)
      for (std::size_t kx = 0; kx < X; ++kx) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t z = 0; z < Z; ++z)
          for (std::size_t y = 0; y < Y; ++y)
            for (std::size_t x = 0; x < X; ++x) {
              const double phase = -two_pi * (double(x * kx) / double(X) +
                                              double(y * ky) / double(Y) +
                                              double(z * kz) / double(Z));
              acc += f[(z * Y + y) * X + x] * std::complex<double>(std::cos(phase), std::sin(phase));
            }
        F[(kz * Y + ky) * X + kx] = acc;
      }
  return F;
}

// Normalized inverse DFT of a full complex spectrum; returns complex samples.
inline std::vector<std::complex<double>> idft3(const std::vector<std::complex<double>>& F,
                                               std::size_t X, std::size_t Y, std::size_t Z) {
  std::vector<std::complex<double>> f(X * Y * Z);
  const double two_pi = 2.0 * std::numbers::pi;
  const double scale = 1.0 / double(X * Y * Z);
  for (std::size_t z = 0; z < Z; ++z)
    for (std::size_t y = 0; y < Y; ++y)
      for (std::size_t x = 0; x < X; ++x) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t kz = 0; kz < Z; ++kz)
          for (std::size_t ky = 0; ky < Y; ++ky)
            for (std::size_t kx = 0; kx < X; ++kx) {
              const double phase = two_pi * (double(x * kx) / double(X) +
                                             double(y * ky) / double(Y) +
                                             double(z * kz) / double(Z));
              acc += F[(kz * Y + ky) * X + kx] *
                     std::complex<double>(std::cos(phase), std::sin(phase));
            }
        f[(z * Y + y) * X + x] = acc * scale;
      }
  return f;
}

} // namespace oracle
