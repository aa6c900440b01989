#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ufno/fno.hpp"

namespace ufno {

/// First/second moment accumulators, one vector per parameter blob in
/// for_each_blob order, plus the shared step counter.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  std::uint64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const FnoParameters<T>& p) {
  AdamState<T> st;
  for_each_blob(p, [&](const std::string&, const std::vector<T>& blob) {
    st.m.emplace_back(blob.size(), T(0));
    st.v.emplace_back(blob.size(), T(0));
  });
  return st;
}

/// One bias-corrected Adam update. Moment math runs in double; parameters and
/// moments are stored back at T precision.
template <typename T>
void adam_step(FnoParameters<T>& params, const FnoParameters<T>& grads, AdamState<T>& st,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  std::vector<std::vector<T>*> pb;
  std::vector<const std::vector<T>*> gb;
  for_each_blob(params, [&](const std::string&, std::vector<T>& b) { pb.push_back(&b); });
  for_each_blob(grads, [&](const std::string&, const std::vector<T>& b) { gb.push_back(&b); });
  if (pb.size() != gb.size() || pb.size() != st.m.size())
    fail(ErrorCode::invalid_argument, "adam_step: parameter/gradient/state blob counts differ");

  st.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(beta2, double(st.step));
  for (std::size_t bi = 0; bi < pb.size(); ++bi) {
    std::vector<T>& blob = *pb[bi];
    const std::vector<T>& grad = *gb[bi];
    std::vector<T>& m = st.m[bi];
    std::vector<T>& v = st.v[bi];
    if (grad.size() != blob.size() || m.size() != blob.size())
      fail(ErrorCode::invalid_argument, "adam_step: blob shape mismatch");
    for (std::size_t i = 0; i < blob.size(); ++i) {
      const double g = double(grad[i]);
      const double mi = beta1 * double(m[i]) + (1.0 - beta1) * g;
      const double vi = beta2 * double(v[i]) + (1.0 - beta2) * g * g;
      m[i] = T(mi);
      v[i] = T(vi);
      blob[i] = T(double(blob[i]) - lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
    }
  }
}

} // namespace ufno
