#include "ufno/loss.hpp"

namespace ufno {

double layerwise_relative_loss(const ScalarField& u, const ScalarField& v) {
  if (!(u.grid == v.grid)) fail(ErrorCode::invalid_argument, "loss: field grids differ");
  return layerwise_relative_loss(u.values.data(), v.values.data(), u.grid.nx, u.grid.ny,
                                 u.grid.nz);
}

} // namespace ufno
