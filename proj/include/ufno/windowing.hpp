#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ufno {

/// One training sample: a run of consecutive time indices used as input and
/// the immediately following index as the prediction target.
struct SampleWindow {
  std::vector<std::uint32_t> input_indices; // consecutive
  std::uint32_t target_index = 0;           // last input index + 1

  bool operator==(const SampleWindow&) const = default;
};

/// Slides a window of `window` consecutive steps over [0, t_total) with the
/// given stride. Each placement yields window-1 input indices and one target.
/// Returns floor((t_total - window) / stride) + 1 windows.
std::vector<SampleWindow> make_windows(std::uint32_t t_total, std::uint32_t window,
                                       std::uint32_t stride);

/// Deterministic seeded partition of window indices into n_train train indices
/// and the remainder as test. Disjoint, union covers all windows.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>
split_dataset(std::size_t window_count, std::size_t n_train, std::uint64_t seed);

} // namespace ufno
