#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ufno/field_io.hpp"
#include "ufno/windowing.hpp"

namespace ufno {

/// Dataset bookkeeping for one generated sequence: field file paths in time
/// order, the sliding windows over them, the seeded train/test partition, and
/// the normalization statistics computed from training windows only.
///
/// Serialized as a single JSON document with keys
///   fields[], dt, windows[], train[], test[], seed, norm{mean,std}.
struct DatasetManifest {
  std::vector<std::string> fields; // field file paths, time order
  double dt = 0.0;
  std::vector<SampleWindow> windows;
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> test;
  std::uint64_t seed = 0;
  NormStats norm;

  void validate() const;
};

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

} // namespace ufno
