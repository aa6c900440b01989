#pragma once

#include "ufno/fno.hpp"

namespace ufno {

namespace detail {

/// vbar[j] = sum_l w[l][j] * gbar[l], the transpose of pointwise_matmul.
template <typename T>
inline void pointwise_matmul_transpose(const T* w, const Tensor<T>& gbar, Tensor<T>& vbar,
                                       std::vector<T>& row) {
  const std::size_t n = gbar.cell_count();
  const std::size_t cout = gbar.c, cin = vbar.c;
  for (std::size_t j = 0; j < cin; ++j) {
    for (std::size_t i = 0; i < n; ++i) row[i] = T(0);
    for (std::size_t l = 0; l < cout; ++l) {
      const T wij = w[l * cin + j];
      const T* src = gbar.channel(l);
      for (std::size_t i = 0; i < n; ++i) row[i] += wij * src[i];
    }
    T* dst = vbar.channel(j);
    for (std::size_t i = 0; i < n; ++i) dst[i] = row[i];
  }
}

/// w_grad[l][j] += sum_i gbar[l][i] * v[j][i];  b_grad[l] += sum_i gbar[l][i].
template <typename T>
inline void accumulate_matmul_grads(const Tensor<T>& gbar, const Tensor<T>& v, T* w_grad,
                                    T* b_grad) {
  const std::size_t n = gbar.cell_count();
  for (std::size_t l = 0; l < gbar.c; ++l) {
    const T* g = gbar.channel(l);
    double bsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) bsum += double(g[i]);
    b_grad[l] += T(bsum);
    for (std::size_t j = 0; j < v.c; ++j) {
      const T* vj = v.channel(j);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += double(g[i]) * double(vj[i]);
      w_grad[l * v.c + j] += T(s);
    }
  }
}

template <typename T>
inline void activation_backward(Activation act, const Tensor<T>& pre, const std::vector<T>& tanh_u,
                                const Tensor<T>& upstream, Tensor<T>& out) {
  const std::size_t n = pre.size();
  if (act == Activation::relu) {
    for (std::size_t i = 0; i < n; ++i)
      out.v[i] = pre.v[i] > T(0) ? upstream.v[i] : T(0);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = double(pre.v[i]);
    const double th = double(tanh_u[i]);
    const double du = kGeluAlpha * (1.0 + 3.0 * kGeluBeta * x * x);
    const double sig = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
    out.v[i] = T(double(upstream.v[i]) * sig);
  }
}

} // namespace detail

/// Reverse pass through the whole operator. Parameter gradients are
/// accumulated (+=) into `grads`, which must be zero_parameters-shaped.
/// grad_out is dLoss/dOutput of the forward pass captured in `tape`.
template <typename T>
void fno_backward(const Tensor<T>& input, const FnoParameters<T>& p, const FnoTape<T>& tape,
                  const Tensor<T>& grad_out, FnoWorkspace<T>& ws, FnoParameters<T>& grads) {
  const FnoConfig& cfg = p.config;
  const Activation act = parse_activation(cfg.activation);
  const std::size_t dv = cfg.width, m = cfg.modes, L = cfg.layers;
  const std::size_t X = input.x, Y = input.y, Z = input.z;
  const double n_cells = double(X) * double(Y) * double(Z);

  // Projection.
  detail::accumulate_matmul_grads(grad_out, tape.last, grads.proj_w.data(), grads.proj_b.data());
  Tensor<T> vbar(dv, X, Y, Z);
  detail::pointwise_matmul_transpose(p.proj_w.data(), grad_out, vbar, ws.row);

  Tensor<T> ybar(dv, X, Y, Z), vbar_next(dv, X, Y, Z);
  for (std::size_t l = L; l-- > 0;) {
    const FnoLayerParams<T>& layer = p.layers[l];
    FnoLayerParams<T>& layer_g = grads.layers[l];
    const Tensor<T>& vin = tape.layer_in[l];

    detail::activation_backward(act, tape.pre[l], tape.tanh_u[l], vbar, ybar);
    detail::accumulate_matmul_grads(ybar, vin, layer_g.w.data(), layer_g.b.data());
    detail::pointwise_matmul_transpose(layer.w.data(), ybar, vbar_next, ws.row);

    // Spectral path. The adjoint of the zero-padded inverse transform is the
    // truncated forward transform scaled by 1/N on the kz=0 plane and 2/N on
    // the doubled interior kz bins; the adjoint of the truncated forward is
    // the padded inverse with the reciprocal scaling.
    for (std::size_t ci = 0; ci < dv; ++ci)
      ws.plan.forward_truncated(ybar.channel(ci), m, ws.chat, ci);
    const std::size_t m3 = m * m * m;
    for (std::size_t mode = 0; mode < 4 * m3; ++mode) {
      const std::size_t kz = (mode % m3) / (m * m);
      const double s = (kz == 0 ? 1.0 : 2.0) / n_cells;
      T* cb = ws.chat.v.data() + mode * dv * 2;
      for (std::size_t j = 0; j < 2 * dv; ++j) cb[j] = T(double(cb[j]) * s);
    }

    const fft::SpecBlocks<T>& vhat = tape.vhat[l];
    for (std::size_t mode = 0; mode < 4 * m3; ++mode) {
      const T* cb = ws.chat.v.data() + mode * dv * 2;   // dL/d(R v)
      const T* vb = vhat.v.data() + mode * dv * 2;      // forward spectrum
      const T* rb = layer.spec_w.data() + mode * dv * dv * 2;
      T* rgb = layer_g.spec_w.data() + mode * dv * dv * 2;
      T* ob = ws.vhat.v.data() + mode * dv * 2;         // dL/d(v spectrum)
      for (std::size_t j = 0; j < dv; ++j) {
        double or_ = 0.0, oi = 0.0;
        const double xr = double(vb[2 * j]), xi = double(vb[2 * j + 1]);
        for (std::size_t k = 0; k < dv; ++k) {
          const double gr = double(cb[2 * k]), gi = double(cb[2 * k + 1]);
          const double wr = double(rb[(k * dv + j) * 2]), wi = double(rb[(k * dv + j) * 2 + 1]);
          // dL/dR[k][j] = gbar_k * conj(vhat_j)
          rgb[(k * dv + j) * 2] += T(gr * xr + gi * xi);
          rgb[(k * dv + j) * 2 + 1] += T(gi * xr - gr * xi);
          // dL/dvhat_j += conj(R[k][j]) * gbar_k
          or_ += wr * gr + wi * gi;
          oi += wr * gi - wi * gr;
        }
        ob[2 * j] = T(or_);
        ob[2 * j + 1] = T(oi);
      }
    }

    for (std::size_t mode = 0; mode < 4 * m3; ++mode) {
      const std::size_t kz = (mode % m3) / (m * m);
      const double s = (kz == 0 ? 1.0 : 0.5) * n_cells;
      T* ob = ws.vhat.v.data() + mode * dv * 2;
      for (std::size_t j = 0; j < 2 * dv; ++j) ob[j] = T(double(ob[j]) * s);
    }
    for (std::size_t ci = 0; ci < dv; ++ci) ws.plan.inverse_padded(ws.vhat, ci, ws.kv.channel(ci));

    for (std::size_t i = 0; i < vbar_next.size(); ++i)
      vbar.v[i] = T(double(vbar_next.v[i]) + double(ws.kv.v[i]));
  }

  // Lifting.
  detail::accumulate_matmul_grads(vbar, input, grads.lift_w.data(), grads.lift_b.data());
}

/// Throws (naming the blob) if any gradient entry is not finite.
template <typename T>
void check_gradients_finite(const FnoParameters<T>& grads) {
  for_each_blob(grads, [](const std::string& name, const std::vector<T>& v) {
    for (const T& e : v)
      if (!std::isfinite(double(e)))
        fail(ErrorCode::numeric, "non-finite gradient in parameter group " + name);
  });
}

extern template void fno_backward<float>(const Tensor<float>&, const FnoParameters<float>&,
                                         const FnoTape<float>&, const Tensor<float>&,
                                         FnoWorkspace<float>&, FnoParameters<float>&);
extern template void fno_backward<double>(const Tensor<double>&, const FnoParameters<double>&,
                                          const FnoTape<double>&, const Tensor<double>&,
                                          FnoWorkspace<double>&, FnoParameters<double>&);

} // namespace ufno
