#include "ufno/windowing.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ufno/error.hpp"
#include "ufno/rng.hpp"

namespace ufno {

std::vector<SampleWindow> make_windows(std::uint32_t t_total, std::uint32_t window,
                                       std::uint32_t stride) {
  if (window < 2) fail(ErrorCode::invalid_argument, "make_windows: window must be >= 2");
  if (stride < 1) fail(ErrorCode::invalid_argument, "make_windows: stride must be >= 1");
  if (t_total < window)
    fail(ErrorCode::invalid_argument, "make_windows: need at least " + std::to_string(window) +
                                          " steps, got " + std::to_string(t_total));
  const std::uint32_t count = (t_total - window) / stride + 1;
  std::vector<SampleWindow> out;
  out.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::uint32_t start = n * stride;
    SampleWindow w;
    w.input_indices.resize(window - 1);
    for (std::uint32_t i = 0; i + 1 < window; ++i) w.input_indices[i] = start + i;
    w.target_index = start + window - 1;
    out.push_back(std::move(w));
  }
  return out;
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>
split_dataset(std::size_t window_count, std::size_t n_train, std::uint64_t seed) {
  if (n_train == 0 || n_train >= window_count)
    fail(ErrorCode::invalid_argument,
         "split_dataset: n_train must be in (0, " + std::to_string(window_count) + ")");
  std::vector<std::uint32_t> order(window_count);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  // Fisher-Yates with our own generator: identical partitions on every platform.
  for (std::size_t i = window_count - 1; i > 0; --i) {
    const std::size_t j = std::size_t(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<std::uint32_t> train(order.begin(), order.begin() + std::ptrdiff_t(n_train));
  std::vector<std::uint32_t> test(order.begin() + std::ptrdiff_t(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

} // namespace ufno
