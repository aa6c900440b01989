#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ufno/checkpoint.hpp"
#include "ufno/solver.hpp"
#include "ufno/trainer.hpp"

namespace ufno {

struct OneStepEval {
  double mean_loss = 0.0;
  std::vector<double> per_sample; // one entry per evaluated window
};

/// Layer-wise relative loss of one-step predictions over the given windows.
OneStepEval one_step_eval(const FnoParameters<float>& params, const SampleSet& data,
                          const std::vector<std::uint32_t>& window_indices);

/// Autoregressive rollout: predict, zero the prediction inside buildings,
/// append, slide the input window by one. `initial` must hold in_channels
/// physical-units fields. n_steps = 1 is exactly one forward call.
FieldSequence rollout(const FnoParameters<float>& params, const std::vector<ScalarField>& initial,
                      const BuildingMask& mask, const NormStats& norm, std::uint32_t n_steps,
                      double dt);

/// Teacher-forced variant: inputs always come from `truth`, predictions are
/// recorded but never fed back. truth must be long enough to supply inputs
/// for every requested step.
FieldSequence rollout_teacher_forced(const FnoParameters<float>& params,
                                     const FieldSequence& truth, const BuildingMask& mask,
                                     const NormStats& norm, std::uint32_t n_steps);

struct AccumulatedError {
  std::vector<double> mean_abs; // per step, over all grid cells
  std::vector<double> std_abs;  // per-cell population std of |error|
};

AccumulatedError accumulated_error(const FieldSequence& pred, const FieldSequence& truth);

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;
  std::vector<double> density; // counts / (total * bin_width)
};

/// Normalized histogram over [0, max]; solid-cell zeros are part of the data.
Histogram velocity_pdf(const std::vector<const ScalarField*>& fields, double bin_width);
Histogram velocity_pdf(const ScalarField& field, double bin_width);

struct ConditionalError {
  double bin_width = 0.0;
  std::vector<double> mean_abs; // valid only where occupied
  std::vector<bool> occupied;
};

/// Mean absolute prediction error conditioned on the truth value, uniform
/// bins over [0, max truth]. Empty bins are flagged, not zero-filled.
ConditionalError conditional_error(const ScalarField& pred, const ScalarField& truth,
                                   double bin_width = 0.25);

struct HeightProfile {
  std::vector<double> mean; // per z-layer
  std::vector<double> std;
};

HeightProfile height_profile(const ScalarField& field);

struct BenchResult {
  std::vector<double> solver_ms; // per timed repeat
  std::vector<double> fno_ms;
  double solver_median_ms = 0.0;
  double fno_median_ms = 0.0;
  double speedup = 0.0; // solver / surrogate
};

/// Median wall-clock of one solver step vs one surrogate forward at the same
/// resolution. The solver is spun up first so timed steps see a developed
/// flow (warm pressure, realistic sweep counts); both engines discard warmup
/// calls before the timed repeats.
BenchResult bench(const FnoParameters<float>& params, const SceneSpec& scene,
                  const SolverConfig& cfg, std::uint32_t n_repeats,
                  std::uint32_t spinup_steps = 10);

// CSV emitters, one file per figure analog.
void write_pdf_csv(const Histogram& h, const std::string& path);
void write_conditional_error_csv(const ConditionalError& ce, const std::string& path);
void write_height_profile_csv(const HeightProfile& hp, const Grid3& grid, const std::string& path);
void write_rollout_error_csv(const AccumulatedError& ae, const std::string& path);
void write_bench_csv(const BenchResult& b, const std::string& path);

} // namespace ufno
