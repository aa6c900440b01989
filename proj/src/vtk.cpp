#include "ufno/vtk.hpp"

#include <bit>
#include <fstream>

namespace ufno {

void write_vtk(const ScalarField& field, const std::string& path,
               const std::string& array_name) {
  field.grid.validate();
  if (field.values.size() != field.grid.cell_count())
    fail(ErrorCode::invalid_argument, "write_vtk: value count does not match grid");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);

  const Grid3& g = field.grid;
  os << "# vtk DataFile Version 3.0\n";
  os << "ufno field export\n";
  os << "BINARY\n";
  os << "DATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << g.nx << " " << g.ny << " " << g.nz << "\n";
  os << "ORIGIN " << g.xc(0) << " " << g.yc(0) << " " << g.zc(0) << "\n";
  os << "SPACING " << g.dx << " " << g.dy << " " << g.dz << "\n";
  os << "POINT_DATA " << g.cell_count() << "\n";
  os << "SCALARS " << array_name << " float 1\n";
  os << "LOOKUP_TABLE default\n";

  // Legacy VTK binary payloads are big-endian.
  for (double v : field.values) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(float(v));
    bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
    os.write(reinterpret_cast<const char*>(&bits), 4);
  }
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

} // namespace ufno
