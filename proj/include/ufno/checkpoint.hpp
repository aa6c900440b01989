#pragma once

#include <string>
#include <vector>

#include "ufno/adam.hpp"
#include "ufno/fno.hpp"

namespace ufno {

/// Trained-model snapshot. Parameters are stored in f32, so a save/load round
/// trip reproduces forward outputs bit-for-bit.
///
/// File layout (little-endian): "UFCK" | u32 version=1 | u32 json_len |
/// JSON header (config, epoch, seed, manifest hash, loss history, adam step)
/// | parameter blobs, each u32 name_len | name | u32 ndim | u32 dims[] |
/// f32 payload. Optimizer moments ride along as adam_m_* / adam_v_* blobs.
struct Checkpoint {
  FnoParameters<float> params;
  AdamState<float> adam;
  bool has_adam = false;
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
  std::string manifest_hash;
  std::vector<double> train_loss_history;
  std::vector<double> test_loss_history;
};

/// Atomic write (temp file + rename).
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Validates magic, version, and every blob shape against the header config;
/// mismatches are refused with the offending blob named.
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a hash of a file's bytes, hex-encoded; recorded in checkpoints to tie
/// them to the dataset manifest they were trained from.
std::string file_hash_hex(const std::string& path);

} // namespace ufno
