#pragma once

#include <string>

#include "ufno/grid.hpp"

namespace ufno {

/// Legacy VTK structured-points export (ASCII header, big-endian binary
/// float payload) for slice/isosurface inspection in external viewers.
void write_vtk(const ScalarField& field, const std::string& path,
               const std::string& array_name = "velocity_magnitude");

} // namespace ufno
