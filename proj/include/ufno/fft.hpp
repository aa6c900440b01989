#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "ufno/tensor.hpp"

namespace ufno::fft {

/// Complex 1D DFT plan of fixed length n, executed in place on split re/im
/// arrays batched over `lanes` contiguous lanes (layout [n][lanes]).
/// Forward uses the e^{-2*pi*i*jk/n} kernel and no normalization; inverse uses
/// the conjugate kernel and no normalization (callers apply 1/n).
/// Powers of two run an iterative radix-2; other lengths use Bluestein's
/// chirp-z algorithm over an internal power-of-two plan.
/// Butterflies run at the plan's scalar precision T: double for the analysis
/// and gradient-check paths, f32 for the production inference/training path.
template <typename T>
class Cfft1d {
public:
  explicit Cfft1d(std::size_t n);

  std::size_t size() const { return n_; }
  void exec(T* re, T* im, std::size_t lanes, bool inverse) const;

private:
  void exec_pow2(T* re, T* im, std::size_t lanes, bool inverse) const;
  void exec_bluestein(T* re, T* im, std::size_t lanes, bool inverse) const;

  std::size_t n_ = 0;
  bool pow2_ = false;
  std::vector<std::size_t> bitrev_;
  std::vector<T> tw_re_, tw_im_; // e^{-2 pi i j / n}, j < n/2

  // Bluestein state: chirp a_k = e^{-i pi k^2 / n} and the forward transform
  // of the circular kernel conj(a) at padded length m_.
  std::size_t m_ = 0;
  std::unique_ptr<Cfft1d<T>> inner_;
  std::vector<T> chirp_re_, chirp_im_;
  std::vector<T> filt_re_, filt_im_;
};

/// Packed corner-block spectrum used by the spectral convolution: the four
/// low-frequency blocks over (kx sign, ky sign) with kz restricted to the low
/// half-spectrum. Layout: [block(4)][kz<m][ky<m][kx<m][channel], interleaved
/// (re, im). Block b maps local (kx,ky) to global bins
///   kx_g = (b & 1) ? X - m + kx : kx,   ky_g = (b & 2) ? Y - m + ky : ky.
template <typename T>
struct SpecBlocks {
  std::size_t channels = 0, m = 0;
  std::vector<T> v;

  SpecBlocks() = default;
  SpecBlocks(std::size_t c, std::size_t modes)
      : channels(c), m(modes), v(4 * modes * modes * modes * c * 2, T(0)) {}

  std::size_t mode_count() const { return 4 * m * m * m; }
  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

/// 3D real-input transform machinery for one grid shape, at the scalar
/// precision of its storage type. Per-channel calls are independent and
/// reuse the plan's scratch buffers.
template <typename T>
class Fft3 {
public:
  Fft3(std::size_t x, std::size_t y, std::size_t z);

  std::size_t x() const { return x_; }
  std::size_t y() const { return y_; }
  std::size_t z() const { return z_; }
  std::size_t zh() const { return z_ / 2 + 1; }

  /// Full forward: in = [z][y][x] reals -> spec = [kz][ky][kx] interleaved,
  /// kz < z/2+1. Unnormalized (matches the plain DFT sum).
  void forward(const T* in, T* spec);

  /// Full inverse with 1/(XYZ): spec -> [z][y][x] reals. Non-Hermitian
  /// content in the kz=0 / kz=Nyquist planes contributes its real projection,
  /// so inverse(forward(f)) == f for any real f.
  void inverse(const T* spec, T* out);

  /// Forward restricted to the retained corner blocks of one channel.
  /// Requires m <= min(x,y,z)/2.
  void forward_truncated(const T* in, std::size_t m, SpecBlocks<T>& out, std::size_t channel);

  /// Inverse of a spectrum that is zero outside the retained corner blocks.
  void inverse_padded(const SpecBlocks<T>& blocks, std::size_t channel, T* out);

  void check_modes(std::size_t m) const;

private:
  // Stage pipeline over the split scratch planes a_re_/a_im_ ([kz][ky][kx]).
  void stage_y_forward(std::size_t planes);
  void stage_x_forward_full();
  void stage_x_inverse_full();
  void stage_y_inverse(std::size_t planes);
  // z inverse consumes plane rows [0, src_planes) (zero / Hermitian-mirrored
  // beyond) and writes real output scaled by 1/(XYZ).
  void stage_z_inverse(std::size_t src_planes, T* out);

  std::size_t x_, y_, z_;
  Cfft1d<T> px_, py_, pz_;
  std::vector<T> a_re_, a_im_;   // [zh][y][x] stage buffer
  std::vector<T> ln_re_, ln_im_; // line scratch [n][lanes]
};

extern template class Cfft1d<float>;
extern template class Cfft1d<double>;
extern template class Fft3<float>;
extern template class Fft3<double>;

/// Standalone full transforms (plan built per call; fine for analysis paths).
template <typename T>
ComplexTensor<T> rfft3(const Tensor<T>& in);
template <typename T>
Tensor<T> irfft3(const ComplexTensor<T>& spec, std::size_t z_extent);

} // namespace ufno::fft
