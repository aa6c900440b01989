#pragma once

#include <string>
#include <vector>

#include "ufno/checkpoint.hpp"
#include "ufno/manifest.hpp"

namespace ufno {

struct TrainConfig {
  std::uint32_t epochs = 150;
  double lr = 1.0e-3;
  std::uint32_t batch = 1;
  double beta1 = 0.9, beta2 = 0.999, eps = 1.0e-8;
  std::uint64_t seed = 0;
  bool grad_check = false;      // finite-difference spot check before training
  double divergence_abort = 1.0e3;

  void validate() const;
};

/// Dataset resident in memory: one f32 magnitude array per time step plus the
/// window/split/normalization bookkeeping from the manifest.
struct SampleSet {
  Grid3 grid;
  double dt = 0.0; // seconds between frames
  std::vector<std::vector<float>> frames; // physical units, per time index
  std::vector<SampleWindow> windows;
  std::vector<std::uint32_t> train, test;
  NormStats norm;
  std::uint64_t split_seed = 0;
  std::string manifest_hash;

  std::size_t input_steps() const {
    return windows.empty() ? 0 : windows.front().input_indices.size();
  }
};

/// Reads every field referenced by the manifest (paths resolved against the
/// manifest's directory) into a SampleSet.
SampleSet load_samples(const std::string& manifest_path);

struct EpochRecord {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;  // lowest test loss seen
  Checkpoint last;
  std::vector<EpochRecord> curves;
};

/// Epochs x seeded-shuffled train windows, batch size 1, Adam updates, per
/// epoch mean train and test losses. Aborts on divergence or non-finite
/// gradients with the failing epoch/window named.
TrainResult train(const SampleSet& data, const TrainConfig& tcfg, const FnoConfig& mcfg);

void write_loss_curves_csv(const std::vector<EpochRecord>& curves, const std::string& path);

/// Builds the normalized input tensor (window inputs as channels) and the
/// physical-units target for one window.
void assemble_sample(const SampleSet& data, const SampleWindow& w, Tensor<float>& input,
                     Tensor<float>& target);

} // namespace ufno
