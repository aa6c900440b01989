#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ufno/fastmath.hpp"
#include "ufno/fft.hpp"
#include "ufno/rng.hpp"
#include "ufno/tensor.hpp"

namespace ufno {

enum class Activation { gelu, relu };

Activation parse_activation(const std::string& name);

/// Architecture hyperparameters. `modes` is the per-axis retained frequency
/// count of the spectral path; `width` the hidden channel count.
struct FnoConfig {
  std::uint32_t modes = 8;
  std::uint32_t width = 20;
  std::uint32_t layers = 4;
  std::uint32_t in_channels = 5;
  std::uint32_t out_channels = 1;
  std::string activation = "gelu";

  void validate() const;
  /// The model accepts any grid whose Nyquist index per axis is >= modes.
  void check_grid(std::size_t x, std::size_t y, std::size_t z) const;

  bool operator==(const FnoConfig&) const = default;
};

/// Exact count of trainable scalars (complex entries count as two).
std::uint64_t param_count(const FnoConfig& cfg);

template <typename T>
struct FnoLayerParams {
  // Spectral channel-mixing weights over the retained corner blocks:
  // [(mode * dv + l) * dv + j] complex, mode as in fft::SpecBlocks.
  std::vector<T> spec_w;
  std::vector<T> w; // pointwise dv x dv, [l * dv + j]
  std::vector<T> b; // dv
};

template <typename T>
struct FnoParameters {
  FnoConfig config;
  std::vector<T> lift_w; // [d * in_channels + a]
  std::vector<T> lift_b; // [d]
  std::vector<FnoLayerParams<T>> layers;
  std::vector<T> proj_w; // [o * dv + d]
  std::vector<T> proj_b; // [o]
};

/// Applies fn(name, vector) to every parameter blob in a fixed order (the
/// order is part of the checkpoint and optimizer-state contracts).
template <typename T, typename F>
void for_each_blob(FnoParameters<T>& p, F&& fn) {
  fn("lift_w", p.lift_w);
  fn("lift_b", p.lift_b);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string tag = "layer" + std::to_string(l);
    fn(tag + "_spec_w", p.layers[l].spec_w);
    fn(tag + "_w", p.layers[l].w);
    fn(tag + "_b", p.layers[l].b);
  }
  fn("proj_w", p.proj_w);
  fn("proj_b", p.proj_b);
}

template <typename T, typename F>
void for_each_blob(const FnoParameters<T>& p, F&& fn) {
  for_each_blob(const_cast<FnoParameters<T>&>(p),
                [&](const std::string& name, std::vector<T>& v) {
                  fn(name, const_cast<const std::vector<T>&>(v));
                });
}

template <typename T>
FnoParameters<T> zero_parameters(const FnoConfig& cfg) {
  cfg.validate();
  const std::size_t dv = cfg.width, m = cfg.modes;
  FnoParameters<T> p;
  p.config = cfg;
  p.lift_w.assign(std::size_t(dv) * cfg.in_channels, T(0));
  p.lift_b.assign(dv, T(0));
  p.layers.resize(cfg.layers);
  for (auto& layer : p.layers) {
    layer.spec_w.assign(4 * m * m * m * dv * dv * 2, T(0));
    layer.w.assign(dv * dv, T(0));
    layer.b.assign(dv, T(0));
  }
  p.proj_w.assign(std::size_t(cfg.out_channels) * dv, T(0));
  p.proj_b.assign(cfg.out_channels, T(0));
  return p;
}

/// Seeded initialization: uniform fan-in scaling for the pointwise maps and
/// 1/dv^2-scaled uniform complex entries for the spectral weights.
template <typename T>
FnoParameters<T> init_parameters(const FnoConfig& cfg, std::uint64_t seed) {
  FnoParameters<T> p = zero_parameters<T>(cfg);
  Rng rng(seed);
  auto uniform_fill = [&](std::vector<T>& v, double bound) {
    for (auto& e : v) e = T(rng.next_uniform(-bound, bound));
  };
  const double lift_bound = std::sqrt(1.0 / cfg.in_channels);
  uniform_fill(p.lift_w, lift_bound);
  uniform_fill(p.lift_b, lift_bound);
  const double dv_bound = std::sqrt(1.0 / cfg.width);
  const double spec_scale = 1.0 / (double(cfg.width) * double(cfg.width));
  for (auto& layer : p.layers) {
    for (auto& e : layer.spec_w) e = T(rng.next_uniform(0.0, spec_scale));
    uniform_fill(layer.w, dv_bound);
    uniform_fill(layer.b, dv_bound);
  }
  uniform_fill(p.proj_w, dv_bound);
  uniform_fill(p.proj_b, dv_bound);
  return p;
}

/// Per-grid scratch: FFT plan, packed spectra, and channel tensors, reused
/// across layers and samples. One workspace per grid shape.
template <typename T>
struct FnoWorkspace {
  FnoWorkspace(const FnoConfig& cfg, std::size_t x, std::size_t y, std::size_t z)
      : plan(x, y, z),
        vhat(cfg.width, cfg.modes),
        chat(cfg.width, cfg.modes),
        kv(cfg.width, x, y, z),
        ping(cfg.width, x, y, z),
        pong(cfg.width, x, y, z),
        row(x * y * z) {
    cfg.validate();
    cfg.check_grid(x, y, z);
  }

  fft::Fft3<T> plan;
  fft::SpecBlocks<T> vhat, chat;
  Tensor<T> kv, ping, pong;
  std::vector<T> row;
};

/// Intermediates captured during forward for the reverse pass.
template <typename T>
struct FnoTape {
  std::vector<Tensor<T>> layer_in;        // v_t entering each Fourier layer
  std::vector<fft::SpecBlocks<T>> vhat;   // retained spectrum of each v_t
  std::vector<Tensor<T>> pre;             // pre-activation W v + b + K v
  std::vector<std::vector<T>> tanh_u;     // gelu inner tanh per layer
  Tensor<T> last;                          // v_L entering the projection
};

namespace detail {

constexpr double kGeluAlpha = 0.7978845608028653558799; // sqrt(2/pi)
constexpr double kGeluBeta = 0.044715;

template <typename T>
inline void pointwise_matmul(const T* w, const T* bias, const Tensor<T>& in, Tensor<T>& out,
                             std::vector<T>& row, const Tensor<T>* extra = nullptr) {
  const std::size_t n = in.cell_count();
  const std::size_t cin = in.c, cout = out.c;
  // Cell blocks keep the accumulator row cache-resident.
  constexpr std::size_t kChunk = 2048;
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t len = std::min(kChunk, n - base);
    for (std::size_t l = 0; l < cout; ++l) {
      const T b = bias ? bias[l] : T(0);
      for (std::size_t i = 0; i < len; ++i) row[i] = b;
      for (std::size_t j = 0; j < cin; ++j) {
        const T wij = w[l * cin + j];
        const T* src = in.channel(j) + base;
        for (std::size_t i = 0; i < len; ++i) row[i] += wij * src[i];
      }
      T* dst = out.channel(l) + base;
      if (extra) {
        const T* e = extra->channel(l) + base;
        for (std::size_t i = 0; i < len; ++i) dst[i] = row[i] + e[i];
      } else {
        for (std::size_t i = 0; i < len; ++i) dst[i] = row[i];
      }
    }
  }
}

/// chat[mode] = R[mode] * vhat[mode] for every retained mode (complex matvec
/// over channels, double accumulation).
template <typename T>
inline void apply_spectral_weights(const std::vector<T>& spec_w, const fft::SpecBlocks<T>& vhat,
                                   fft::SpecBlocks<T>& chat) {
  const std::size_t dv = vhat.channels;
  const std::size_t modes = vhat.mode_count();
  // Per mode: split the input spectrum once, then run each output row with
  // two independent accumulator pairs (fixed summation order, extra ILP).
  std::vector<T> xr_buf(dv), xi_buf(dv);
  T* xr_s = xr_buf.data();
  T* xi_s = xi_buf.data();
  for (std::size_t mode = 0; mode < modes; ++mode) {
    const T* vb = vhat.v.data() + mode * dv * 2;
    T* cb = chat.v.data() + mode * dv * 2;
    const T* rb = spec_w.data() + mode * dv * dv * 2;
    for (std::size_t j = 0; j < dv; ++j) {
      xr_s[j] = vb[2 * j];
      xi_s[j] = vb[2 * j + 1];
    }
    for (std::size_t l = 0; l < dv; ++l) {
      const T* rr = rb + l * dv * 2;
      T ar0 = T(0), ai0 = T(0), ar1 = T(0), ai1 = T(0);
      std::size_t j = 0;
      for (; j + 1 < dv; j += 2) {
        const T wr0 = rr[2 * j], wi0 = rr[2 * j + 1];
        ar0 += wr0 * xr_s[j] - wi0 * xi_s[j];
        ai0 += wr0 * xi_s[j] + wi0 * xr_s[j];
        const T wr1 = rr[2 * j + 2], wi1 = rr[2 * j + 3];
        ar1 += wr1 * xr_s[j + 1] - wi1 * xi_s[j + 1];
        ai1 += wr1 * xi_s[j + 1] + wi1 * xr_s[j + 1];
      }
      if (j < dv) {
        const T wr = rr[2 * j], wi = rr[2 * j + 1];
        ar0 += wr * xr_s[j] - wi * xi_s[j];
        ai0 += wr * xi_s[j] + wi * xr_s[j];
      }
      cb[2 * l] = ar0 + ar1;
      cb[2 * l + 1] = ai0 + ai1;
    }
  }
}

template <typename T>
inline void activate(Activation act, const Tensor<T>& pre, Tensor<T>& out,
                     std::vector<T>* tanh_cache) {
  const std::size_t n = pre.size();
  if (act == Activation::relu) {
    for (std::size_t i = 0; i < n; ++i) out.v[i] = pre.v[i] > T(0) ? pre.v[i] : T(0);
    return;
  }
  // Separate loops keep the bodies branch-free and vectorizable.
  if (tanh_cache) {
    tanh_cache->resize(n);
    T* cache = tanh_cache->data();
    for (std::size_t i = 0; i < n; ++i) {
      const double x = double(pre.v[i]);
      const double u = kGeluAlpha * (x + kGeluBeta * x * x * x);
      const double th = fast_tanh(u);
      cache[i] = T(th);
      out.v[i] = T(0.5 * x * (1.0 + th));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = double(pre.v[i]);
      const double u = kGeluAlpha * (x + kGeluBeta * x * x * x);
      const double th = fast_tanh(u);
      out.v[i] = T(0.5 * x * (1.0 + th));
    }
  }
}

} // namespace detail

/// Spectral convolution: transform, mix retained corner modes with the
/// per-mode channel weights, zero-pad the rest, inverse-transform.
template <typename T>
void spectral_conv(const Tensor<T>& v, const std::vector<T>& spec_w, std::size_t m,
                   FnoWorkspace<T>& ws, Tensor<T>& out, fft::SpecBlocks<T>* vhat_out = nullptr) {
  ws.plan.check_modes(m);
  for (std::size_t ci = 0; ci < v.c; ++ci) ws.plan.forward_truncated(v.channel(ci), m, ws.vhat, ci);
  if (vhat_out) *vhat_out = ws.vhat;
  detail::apply_spectral_weights(spec_w, ws.vhat, ws.chat);
  for (std::size_t ci = 0; ci < v.c; ++ci) ws.plan.inverse_padded(ws.chat, ci, out.channel(ci));
}

/// One Fourier layer: sigma(W v + b + spectral_conv(v)). Without a separate
/// pre-activation sink the activation runs in place over `out`; `v` must not
/// alias `out`.
template <typename T>
void fourier_layer(const Tensor<T>& v, const FnoLayerParams<T>& layer, Activation act,
                   std::size_t m, FnoWorkspace<T>& ws, Tensor<T>& out, Tensor<T>* pre_out = nullptr,
                   std::vector<T>* tanh_cache = nullptr, fft::SpecBlocks<T>* vhat_out = nullptr) {
  spectral_conv(v, layer.spec_w, m, ws, ws.kv, vhat_out);
  if (pre_out && !pre_out->same_shape(v)) *pre_out = Tensor<T>(v.c, v.x, v.y, v.z);
  Tensor<T>& pre = pre_out ? *pre_out : out;
  detail::pointwise_matmul(layer.w.data(), layer.b.data(), v, pre, ws.row, &ws.kv);
  detail::activate(act, pre, out, tanh_cache);
}

/// Full forward pass: lift, `layers` Fourier layers, project. Pass a tape to
/// capture the intermediates needed by the reverse pass.
template <typename T>
Tensor<T> fno_forward(const Tensor<T>& input, const FnoParameters<T>& p, FnoWorkspace<T>& ws,
                      FnoTape<T>* tape = nullptr) {
  const FnoConfig& cfg = p.config;
  cfg.check_grid(input.x, input.y, input.z);
  if (input.c != cfg.in_channels)
    fail(ErrorCode::invalid_argument,
         "fno_forward: input has " + std::to_string(input.c) + " channels, config wants " +
             std::to_string(cfg.in_channels));
  const Activation act = parse_activation(cfg.activation);
  const std::size_t L = cfg.layers;

  if (tape) {
    tape->layer_in.assign(L, Tensor<T>());
    tape->vhat.assign(L, fft::SpecBlocks<T>());
    tape->pre.assign(L, Tensor<T>());
    tape->tanh_u.assign(L, {});

    Tensor<T> cur(cfg.width, input.x, input.y, input.z);
    detail::pointwise_matmul(p.lift_w.data(), p.lift_b.data(), input, cur, ws.row);
    for (std::size_t l = 0; l < L; ++l) {
      Tensor<T> next(cfg.width, input.x, input.y, input.z);
      fourier_layer(cur, p.layers[l], act, cfg.modes, ws, next, &tape->pre[l],
                    act == Activation::gelu ? &tape->tanh_u[l] : nullptr, &tape->vhat[l]);
      tape->layer_in[l] = std::move(cur);
      cur = std::move(next);
    }
    Tensor<T> out(cfg.out_channels, input.x, input.y, input.z);
    detail::pointwise_matmul(p.proj_w.data(), p.proj_b.data(), cur, out, ws.row);
    tape->last = std::move(cur);
    return out;
  }

  // Inference path: ping-pong through workspace tensors, no allocation.
  Tensor<T>* cur = &ws.ping;
  Tensor<T>* nxt = &ws.pong;
  detail::pointwise_matmul(p.lift_w.data(), p.lift_b.data(), input, *cur, ws.row);
  for (std::size_t l = 0; l < L; ++l) {
    fourier_layer(*cur, p.layers[l], act, cfg.modes, ws, *nxt);
    std::swap(cur, nxt);
  }
  Tensor<T> out(cfg.out_channels, input.x, input.y, input.z);
  detail::pointwise_matmul(p.proj_w.data(), p.proj_b.data(), *cur, out, ws.row);
  return out;
}

extern template Tensor<float> fno_forward<float>(const Tensor<float>&,
                                                 const FnoParameters<float>&,
                                                 FnoWorkspace<float>&, FnoTape<float>*);
extern template Tensor<double> fno_forward<double>(const Tensor<double>&,
                                                   const FnoParameters<double>&,
                                                   FnoWorkspace<double>&, FnoTape<double>*);

} // namespace ufno
