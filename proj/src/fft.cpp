#include "ufno/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ufno::fft {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

} // namespace

template <typename T>
Cfft1d<T>::Cfft1d(std::size_t n) : n_(n) {
  if (n_ == 0) fail(ErrorCode::invalid_argument, "fft: zero length");
  pow2_ = is_pow2(n_);
  if (pow2_) {
    bitrev_.resize(n_);
    std::size_t bits = 0;
    while ((std::size_t(1) << bits) < n_) ++bits;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t(1) << b)) r |= std::size_t(1) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    tw_re_.resize(n_ / 2);
    tw_im_.resize(n_ / 2);
    for (std::size_t j = 0; j < n_ / 2; ++j) {
      const double ang = -2.0 * kPi * double(j) / double(n_);
      tw_re_[j] = T(std::cos(ang));
      tw_im_[j] = T(std::sin(ang));
    }
    return;
  }

  // Bluestein setup. The chirp angle uses k^2 mod 2n to stay well conditioned.
  m_ = next_pow2(2 * n_ - 1);
  inner_ = std::make_unique<Cfft1d<T>>(m_);
  chirp_re_.resize(n_);
  chirp_im_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t q = (k * k) % (2 * n_);
    const double ang = -kPi * double(q) / double(n_);
    chirp_re_[k] = T(std::cos(ang));
    chirp_im_[k] = T(std::sin(ang));
  }
  std::vector<T> vr(m_, T(0)), vi(m_, T(0));
  vr[0] = chirp_re_[0];
  vi[0] = -chirp_im_[0];
  for (std::size_t j = 1; j < n_; ++j) {
    vr[j] = vr[m_ - j] = chirp_re_[j];
    vi[j] = vi[m_ - j] = -chirp_im_[j];
  }
  inner_->exec(vr.data(), vi.data(), 1, false);
  filt_re_ = std::move(vr);
  filt_im_ = std::move(vi);
}

template <typename T>
void Cfft1d<T>::exec(T* re, T* im, std::size_t lanes, bool inverse) const {
  if (n_ == 1) return;
  if (pow2_)
    exec_pow2(re, im, lanes, inverse);
  else
    exec_bluestein(re, im, lanes, inverse);
}

template <typename T>
void Cfft1d<T>::exec_pow2(T* re, T* im, std::size_t lanes, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j = bitrev_[i];
    if (i < j) {
      T* ra = re + i * lanes;
      T* rb = re + j * lanes;
      T* ia = im + i * lanes;
      T* ib = im + j * lanes;
      for (std::size_t l = 0; l < lanes; ++l) {
        std::swap(ra[l], rb[l]);
        std::swap(ia[l], ib[l]);
      }
    }
  }
  const T sign = inverse ? T(-1) : T(1);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t t = 0; t < half; ++t) {
        const T wr = tw_re_[t * step];
        const T wi = sign * tw_im_[t * step];
        T* pr = re + (start + t) * lanes;
        T* pi = im + (start + t) * lanes;
        T* qr = re + (start + t + half) * lanes;
        T* qi = im + (start + t + half) * lanes;
        for (std::size_t l = 0; l < lanes; ++l) {
          const T vr = qr[l] * wr - qi[l] * wi;
          const T vi = qr[l] * wi + qi[l] * wr;
          qr[l] = pr[l] - vr;
          qi[l] = pi[l] - vi;
          pr[l] += vr;
          pi[l] += vi;
        }
      }
    }
  }
}

template <typename T>
void Cfft1d<T>::exec_bluestein(T* re, T* im, std::size_t lanes, bool inverse) const {
  // inverse-DFT(x) = conj(forward-DFT(conj(x))), both unnormalized.
  if (inverse)
    for (std::size_t i = 0; i < n_ * lanes; ++i) im[i] = -im[i];

  std::vector<T> ur(m_ * lanes, T(0)), ui(m_ * lanes, T(0));
  for (std::size_t j = 0; j < n_; ++j) {
    const T ar = chirp_re_[j], ai = chirp_im_[j];
    const T* xr = re + j * lanes;
    const T* xi = im + j * lanes;
    T* tr = ur.data() + j * lanes;
    T* ti = ui.data() + j * lanes;
    for (std::size_t l = 0; l < lanes; ++l) {
      tr[l] = xr[l] * ar - xi[l] * ai;
      ti[l] = xr[l] * ai + xi[l] * ar;
    }
  }
  inner_->exec(ur.data(), ui.data(), lanes, false);
  for (std::size_t j = 0; j < m_; ++j) {
    const T fr = filt_re_[j], fi = filt_im_[j];
    T* tr = ur.data() + j * lanes;
    T* ti = ui.data() + j * lanes;
    for (std::size_t l = 0; l < lanes; ++l) {
      const T r = tr[l] * fr - ti[l] * fi;
      const T i = tr[l] * fi + ti[l] * fr;
      tr[l] = r;
      ti[l] = i;
    }
  }
  inner_->exec(ur.data(), ui.data(), lanes, true);
  const T scale = T(1.0 / double(m_));
  for (std::size_t k = 0; k < n_; ++k) {
    const T ar = chirp_re_[k], ai = chirp_im_[k];
    const T* tr = ur.data() + k * lanes;
    const T* ti = ui.data() + k * lanes;
    T* xr = re + k * lanes;
    T* xi = im + k * lanes;
    for (std::size_t l = 0; l < lanes; ++l) {
      const T r = tr[l] * scale;
      const T i = ti[l] * scale;
      xr[l] = r * ar - i * ai;
      xi[l] = r * ai + i * ar;
    }
  }

  if (inverse)
    for (std::size_t i = 0; i < n_ * lanes; ++i) im[i] = -im[i];
}

template <typename T>
Fft3<T>::Fft3(std::size_t x, std::size_t y, std::size_t z)
    : x_(x), y_(y), z_(z), px_(x), py_(y), pz_(z) {
  if (x < 2 || y < 2 || z < 2) fail(ErrorCode::invalid_argument, "fft3: extents must be >= 2");
  a_re_.resize(zh() * y_ * x_);
  a_im_.resize(zh() * y_ * x_);
  const std::size_t line = std::max(z_ * x_, std::max(x_ * y_, y_ * x_));
  ln_re_.resize(line);
  ln_im_.resize(line);
}

template <typename T>
void Fft3<T>::check_modes(std::size_t m) const {
  if (m < 1) fail(ErrorCode::invalid_argument, "modes must be >= 1");
  if (m > x_ / 2 || m > y_ / 2 || m > z_ / 2)
    fail(ErrorCode::invalid_argument,
         "modes " + std::to_string(m) + " exceed the Nyquist index of grid " + std::to_string(x_) +
             "x" + std::to_string(y_) + "x" + std::to_string(z_));
}

template <typename T>
void Fft3<T>::stage_y_forward(std::size_t planes) {
  for (std::size_t kz = 0; kz < planes; ++kz)
    py_.exec(a_re_.data() + kz * y_ * x_, a_im_.data() + kz * y_ * x_, x_, false);
}

template <typename T>
void Fft3<T>::stage_x_forward_full() {
  for (std::size_t kz = 0; kz < zh(); ++kz) {
    T* pre = a_re_.data() + kz * y_ * x_;
    T* pim = a_im_.data() + kz * y_ * x_;
    for (std::size_t xi = 0; xi < x_; ++xi)
      for (std::size_t yi = 0; yi < y_; ++yi) {
        ln_re_[xi * y_ + yi] = pre[yi * x_ + xi];
        ln_im_[xi * y_ + yi] = pim[yi * x_ + xi];
      }
    px_.exec(ln_re_.data(), ln_im_.data(), y_, false);
    for (std::size_t yi = 0; yi < y_; ++yi)
      for (std::size_t xi = 0; xi < x_; ++xi) {
        pre[yi * x_ + xi] = ln_re_[xi * y_ + yi];
        pim[yi * x_ + xi] = ln_im_[xi * y_ + yi];
      }
  }
}

template <typename T>
void Fft3<T>::stage_x_inverse_full() {
  for (std::size_t kz = 0; kz < zh(); ++kz) {
    T* pre = a_re_.data() + kz * y_ * x_;
    T* pim = a_im_.data() + kz * y_ * x_;
    for (std::size_t xi = 0; xi < x_; ++xi)
      for (std::size_t yi = 0; yi < y_; ++yi) {
        ln_re_[xi * y_ + yi] = pre[yi * x_ + xi];
        ln_im_[xi * y_ + yi] = pim[yi * x_ + xi];
      }
    px_.exec(ln_re_.data(), ln_im_.data(), y_, true);
    for (std::size_t yi = 0; yi < y_; ++yi)
      for (std::size_t xi = 0; xi < x_; ++xi) {
        pre[yi * x_ + xi] = ln_re_[xi * y_ + yi];
        pim[yi * x_ + xi] = ln_im_[xi * y_ + yi];
      }
  }
}

template <typename T>
void Fft3<T>::stage_y_inverse(std::size_t planes) {
  for (std::size_t kz = 0; kz < planes; ++kz)
    py_.exec(a_re_.data() + kz * y_ * x_, a_im_.data() + kz * y_ * x_, x_, true);
}

template <typename T>
void Fft3<T>::stage_z_inverse(std::size_t src_planes, T* out) {
  const T scale = T(1.0 / (double(x_) * double(y_) * double(z_)));
  for (std::size_t yi = 0; yi < y_; ++yi) {
    for (std::size_t kz = 0; kz < z_; ++kz) {
      T* lr = ln_re_.data() + kz * x_;
      T* li = ln_im_.data() + kz * x_;
      if (kz < src_planes) {
        const T* pr = a_re_.data() + (kz * y_ + yi) * x_;
        const T* pi = a_im_.data() + (kz * y_ + yi) * x_;
        for (std::size_t xi = 0; xi < x_; ++xi) {
          lr[xi] = pr[xi];
          li[xi] = pi[xi];
        }
      } else if (z_ - kz < src_planes) {
        // Hermitian mirror of the stored low half.
        const std::size_t mz = z_ - kz;
        const T* pr = a_re_.data() + (mz * y_ + yi) * x_;
        const T* pi = a_im_.data() + (mz * y_ + yi) * x_;
        for (std::size_t xi = 0; xi < x_; ++xi) {
          lr[xi] = pr[xi];
          li[xi] = -pi[xi];
        }
      } else {
        for (std::size_t xi = 0; xi < x_; ++xi) lr[xi] = li[xi] = T(0);
      }
    }
    pz_.exec(ln_re_.data(), ln_im_.data(), x_, true);
    for (std::size_t zi = 0; zi < z_; ++zi) {
      const T* lr = ln_re_.data() + zi * x_;
      T* dst = out + (zi * y_ + yi) * x_;
      for (std::size_t xi = 0; xi < x_; ++xi) dst[xi] = lr[xi] * scale;
    }
  }
}

template <typename T>
void Fft3<T>::forward(const T* in, T* spec) {
  // z stage: gather (z, x) slabs per y, transform, keep the low half-spectrum.
  for (std::size_t yi = 0; yi < y_; ++yi) {
    for (std::size_t zi = 0; zi < z_; ++zi) {
      const T* src = in + (zi * y_ + yi) * x_;
      T* lr = ln_re_.data() + zi * x_;
      T* li = ln_im_.data() + zi * x_;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        lr[xi] = src[xi];
        li[xi] = T(0);
      }
    }
    pz_.exec(ln_re_.data(), ln_im_.data(), x_, false);
    for (std::size_t kz = 0; kz < zh(); ++kz) {
      T* pr = a_re_.data() + (kz * y_ + yi) * x_;
      T* pi = a_im_.data() + (kz * y_ + yi) * x_;
      const T* lr = ln_re_.data() + kz * x_;
      const T* li = ln_im_.data() + kz * x_;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        pr[xi] = lr[xi];
        pi[xi] = li[xi];
      }
    }
  }
  stage_y_forward(zh());
  stage_x_forward_full();
  const std::size_t bins = zh() * y_ * x_;
  for (std::size_t b = 0; b < bins; ++b) {
    spec[2 * b] = a_re_[b];
    spec[2 * b + 1] = a_im_[b];
  }
}

template <typename T>
void Fft3<T>::inverse(const T* spec, T* out) {
  const std::size_t bins = zh() * y_ * x_;
  for (std::size_t b = 0; b < bins; ++b) {
    a_re_[b] = spec[2 * b];
    a_im_[b] = spec[2 * b + 1];
  }
  stage_x_inverse_full();
  stage_y_inverse(zh());
  stage_z_inverse(zh(), out);
}

template <typename T>
void Fft3<T>::forward_truncated(const T* in, std::size_t m, SpecBlocks<T>& blocks,
                                std::size_t channel) {
  check_modes(m);
  for (std::size_t yi = 0; yi < y_; ++yi) {
    for (std::size_t zi = 0; zi < z_; ++zi) {
      const T* src = in + (zi * y_ + yi) * x_;
      T* lr = ln_re_.data() + zi * x_;
      T* li = ln_im_.data() + zi * x_;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        lr[xi] = src[xi];
        li[xi] = T(0);
      }
    }
    pz_.exec(ln_re_.data(), ln_im_.data(), x_, false);
    for (std::size_t kz = 0; kz < m; ++kz) {
      T* pr = a_re_.data() + (kz * y_ + yi) * x_;
      T* pi = a_im_.data() + (kz * y_ + yi) * x_;
      const T* lr = ln_re_.data() + kz * x_;
      const T* li = ln_im_.data() + kz * x_;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        pr[xi] = lr[xi];
        pi[xi] = li[xi];
      }
    }
  }
  stage_y_forward(m);

  // x stage only on the 2m retained ky rows of each retained kz plane.
  const std::size_t rows = 2 * m;
  const std::size_t C = blocks.channels;
  for (std::size_t kz = 0; kz < m; ++kz) {
    const T* pre = a_re_.data() + kz * y_ * x_;
    const T* pim = a_im_.data() + kz * y_ * x_;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t ky = (r < m) ? r : y_ - 2 * m + r;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        ln_re_[xi * rows + r] = pre[ky * x_ + xi];
        ln_im_[xi * rows + r] = pim[ky * x_ + xi];
      }
    }
    px_.exec(ln_re_.data(), ln_im_.data(), rows, false);
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t ky = 0; ky < m; ++ky)
        for (std::size_t kx = 0; kx < m; ++kx) {
          const std::size_t gx = (b & 1) ? x_ - m + kx : kx;
          const std::size_t r = (b & 2) ? m + ky : ky;
          const std::size_t mode = ((b * m + kz) * m + ky) * m + kx;
          blocks.v[(mode * C + channel) * 2] = ln_re_[gx * rows + r];
          blocks.v[(mode * C + channel) * 2 + 1] = ln_im_[gx * rows + r];
        }
  }
}

template <typename T>
void Fft3<T>::inverse_padded(const SpecBlocks<T>& blocks, std::size_t channel, T* out) {
  const std::size_t m = blocks.m;
  check_modes(m);
  const std::size_t C = blocks.channels;
  std::fill(a_re_.begin(), a_re_.begin() + std::ptrdiff_t(m * y_ * x_), T(0));
  std::fill(a_im_.begin(), a_im_.begin() + std::ptrdiff_t(m * y_ * x_), T(0));
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t kz = 0; kz < m; ++kz)
      for (std::size_t ky = 0; ky < m; ++ky)
        for (std::size_t kx = 0; kx < m; ++kx) {
          const std::size_t gx = (b & 1) ? x_ - m + kx : kx;
          const std::size_t gy = (b & 2) ? y_ - m + ky : ky;
          const std::size_t mode = ((b * m + kz) * m + ky) * m + kx;
          a_re_[(kz * y_ + gy) * x_ + gx] = blocks.v[(mode * C + channel) * 2];
          a_im_[(kz * y_ + gy) * x_ + gx] = blocks.v[(mode * C + channel) * 2 + 1];
        }

  const std::size_t rows = 2 * m;
  for (std::size_t kz = 0; kz < m; ++kz) {
    T* pre = a_re_.data() + kz * y_ * x_;
    T* pim = a_im_.data() + kz * y_ * x_;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t ky = (r < m) ? r : y_ - 2 * m + r;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        ln_re_[xi * rows + r] = pre[ky * x_ + xi];
        ln_im_[xi * rows + r] = pim[ky * x_ + xi];
      }
    }
    px_.exec(ln_re_.data(), ln_im_.data(), rows, true);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t ky = (r < m) ? r : y_ - 2 * m + r;
      for (std::size_t xi = 0; xi < x_; ++xi) {
        pre[ky * x_ + xi] = ln_re_[xi * rows + r];
        pim[ky * x_ + xi] = ln_im_[xi * rows + r];
      }
    }
  }
  stage_y_inverse(m);
  stage_z_inverse(m, out);
}

template class Cfft1d<float>;
template class Cfft1d<double>;
template class Fft3<float>;
template class Fft3<double>;

template <typename T>
ComplexTensor<T> rfft3(const Tensor<T>& in) {
  Fft3<T> plan(in.x, in.y, in.z);
  ComplexTensor<T> spec(in.c, in.x, in.y, plan.zh());
  for (std::size_t ci = 0; ci < in.c; ++ci) plan.forward(in.channel(ci), spec.channel(ci));
  return spec;
}

template <typename T>
Tensor<T> irfft3(const ComplexTensor<T>& spec, std::size_t z_extent) {
  if (spec.zh != z_extent / 2 + 1)
    fail(ErrorCode::invalid_argument, "irfft3: half-spectrum extent does not match z extent");
  Fft3<T> plan(spec.x, spec.y, z_extent);
  Tensor<T> out(spec.c, spec.x, spec.y, z_extent);
  for (std::size_t ci = 0; ci < spec.c; ++ci) plan.inverse(spec.channel(ci), out.channel(ci));
  return out;
}

template ComplexTensor<float> rfft3<float>(const Tensor<float>&);
template ComplexTensor<double> rfft3<double>(const Tensor<double>&);
template Tensor<float> irfft3<float>(const ComplexTensor<float>&, std::size_t);
template Tensor<double> irfft3<double>(const ComplexTensor<double>&, std::size_t);

} // namespace ufno::fft
