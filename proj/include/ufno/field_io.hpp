#pragma once

#include <string>

#include "ufno/grid.hpp"

namespace ufno {

// Field file (little-endian):
//   "UFN1" | u32 version=1 | u32 nx,ny,nz | f64 dx,dy,dz | f64 origin[3]
//   | nx*ny*nz f32 values, x-fastest.
// Mask file: same header with magic "UMSK", payload u8 (0 fluid, 1 solid).

void write_field(const ScalarField& field, const std::string& path);
ScalarField read_field(const std::string& path);

void write_mask(const BuildingMask& mask, const std::string& path);
BuildingMask read_mask(const std::string& path);

/// Scalar normalization statistics (dataset-wide mean and standard deviation).
struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

ScalarField normalize(const ScalarField& field, const NormStats& stats);
ScalarField denormalize(const ScalarField& field, const NormStats& stats);

} // namespace ufno
