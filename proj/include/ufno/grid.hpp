#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ufno/error.hpp"

namespace ufno {

/// Uniform 3D cell grid. Cell (i,j,k) has its center at
/// origin + ((i+0.5)dx, (j+0.5)dy, (k+0.5)dz). Linear storage over the grid
/// is x-fastest, then y, then z.
struct Grid3 {
  std::uint32_t nx = 0, ny = 0, nz = 0;
  double dx = 0.0, dy = 0.0, dz = 0.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  std::size_t cell_count() const { return std::size_t(nx) * ny * nz; }
  std::size_t index(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
    return (std::size_t(k) * ny + j) * nx + i;
  }
  double xc(std::uint32_t i) const { return origin[0] + (i + 0.5) * dx; }
  double yc(std::uint32_t j) const { return origin[1] + (j + 0.5) * dy; }
  double zc(std::uint32_t k) const { return origin[2] + (k + 0.5) * dz; }
  std::array<double, 3> extent() const { return {nx * dx, ny * dy, nz * dz}; }

  bool operator==(const Grid3&) const = default;

  void validate() const;
};

/// Dense scalar samples over a Grid3, one value per cell center.
struct ScalarField {
  Grid3 grid;
  std::vector<double> values; // size nx*ny*nz, x-fastest

  ScalarField() = default;
  explicit ScalarField(const Grid3& g, double fill = 0.0);

  double& at(std::uint32_t i, std::uint32_t j, std::uint32_t k) { return values[grid.index(i, j, k)]; }
  double at(std::uint32_t i, std::uint32_t j, std::uint32_t k) const { return values[grid.index(i, j, k)]; }

  void validate(bool require_non_negative = false) const;
};

/// Per-cell solid flag; solid cells are the interior of buildings.
struct BuildingMask {
  Grid3 grid;
  std::vector<std::uint8_t> solid; // 0 fluid, 1 solid

  BuildingMask() = default;
  explicit BuildingMask(const Grid3& g) : grid(g), solid(g.cell_count(), 0) {}

  bool is_solid(std::size_t c) const { return solid[c] != 0; }
  std::size_t fluid_count() const;

  void validate() const; // requires at least one fluid cell
};

/// A time-ordered sequence of fields on one shared grid.
struct FieldSequence {
  double dt = 0.0; // seconds between consecutive fields
  std::vector<ScalarField> fields;

  void validate() const;
};

/// Zeroes the field at solid cells; fluid cells pass through unchanged.
ScalarField apply_mask(const ScalarField& field, const BuildingMask& mask);

/// sqrt(u^2+v^2+w^2) per cell; inputs share one grid.
ScalarField velocity_magnitude(const ScalarField& u, const ScalarField& v, const ScalarField& w);

} // namespace ufno
