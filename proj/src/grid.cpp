#include "ufno/grid.hpp"

#include <cmath>
#include <string>

namespace ufno {

void Grid3::validate() const {
  if (nx < 2 || ny < 2 || nz < 2)
    fail(ErrorCode::invalid_argument,
         "grid counts must all be >= 2, got " + std::to_string(nx) + "x" + std::to_string(ny) +
             "x" + std::to_string(nz));
  if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0))
    fail(ErrorCode::invalid_argument, "grid spacings must be positive");
}

ScalarField::ScalarField(const Grid3& g, double fill) : grid(g), values(g.cell_count(), fill) {
  grid.validate();
}

void ScalarField::validate(bool require_non_negative) const {
  grid.validate();
  if (values.size() != grid.cell_count())
    fail(ErrorCode::invalid_argument, "field value count does not match grid cell count");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::numeric, "field contains a non-finite value");
    if (require_non_negative && v < 0.0)
      fail(ErrorCode::invalid_argument, "velocity magnitude field contains a negative value");
  }
}

std::size_t BuildingMask::fluid_count() const {
  std::size_t n = 0;
  for (auto s : solid) n += (s == 0);
  return n;
}

void BuildingMask::validate() const {
  grid.validate();
  if (solid.size() != grid.cell_count())
    fail(ErrorCode::invalid_argument, "mask cell count does not match grid");
  if (fluid_count() == 0) fail(ErrorCode::invalid_argument, "mask has no fluid cell");
}

void FieldSequence::validate() const {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "sequence dt must be positive");
  for (const auto& f : fields)
    if (!(f.grid == fields.front().grid))
      fail(ErrorCode::invalid_argument, "fields in a sequence must share one grid");
}

ScalarField apply_mask(const ScalarField& field, const BuildingMask& mask) {
  if (!(field.grid == mask.grid))
    fail(ErrorCode::invalid_argument, "apply_mask: field and mask grids differ");
  ScalarField out = field;
  for (std::size_t c = 0; c < out.values.size(); ++c)
    if (mask.solid[c]) out.values[c] = 0.0;
  return out;
}

ScalarField velocity_magnitude(const ScalarField& u, const ScalarField& v, const ScalarField& w) {
  if (!(u.grid == v.grid) || !(u.grid == w.grid))
    fail(ErrorCode::invalid_argument, "velocity_magnitude: component grids differ");
  ScalarField out(u.grid);
  for (std::size_t c = 0; c < out.values.size(); ++c)
    out.values[c] = std::sqrt(u.values[c] * u.values[c] + v.values[c] * v.values[c] +
                              w.values[c] * w.values[c]);
  return out;
}

} // namespace ufno
