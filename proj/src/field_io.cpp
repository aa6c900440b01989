#include "ufno/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little, "file formats are little-endian");

namespace ufno {
namespace {

constexpr std::uint32_t kFormatVersion = 1;

struct Header {
  char magic[4];
  std::uint32_t version = kFormatVersion;
  std::uint32_t nx = 0, ny = 0, nz = 0;
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double origin[3] = {0.0, 0.0, 0.0};
};

void write_header(std::ostream& os, const char* magic, const Grid3& g) {
  os.write(magic, 4);
  std::uint32_t u[4] = {kFormatVersion, g.nx, g.ny, g.nz};
  os.write(reinterpret_cast<const char*>(u), sizeof(u));
  double d[6] = {g.dx, g.dy, g.dz, g.origin[0], g.origin[1], g.origin[2]};
  os.write(reinterpret_cast<const char*>(d), sizeof(d));
}

Grid3 read_header(std::istream& is, const char* magic, const std::string& path) {
  Header h{};
  is.read(h.magic, 4);
  std::uint32_t u[4];
  is.read(reinterpret_cast<char*>(u), sizeof(u));
  double d[6];
  is.read(reinterpret_cast<char*>(d), sizeof(d));
  if (!is) fail(ErrorCode::format, path + ": truncated header");
  if (std::memcmp(h.magic, magic, 4) != 0)
    fail(ErrorCode::format, path + ": bad magic, expected " + std::string(magic, 4));
  if (u[0] != kFormatVersion)
    fail(ErrorCode::format, path + ": unsupported version " + std::to_string(u[0]));
  Grid3 g;
  g.nx = u[1];
  g.ny = u[2];
  g.nz = u[3];
  g.dx = d[0];
  g.dy = d[1];
  g.dz = d[2];
  g.origin = {d[3], d[4], d[5]};
  g.validate();
  return g;
}

} // namespace

void write_field(const ScalarField& field, const std::string& path) {
  field.grid.validate();
  if (field.values.size() != field.grid.cell_count())
    fail(ErrorCode::invalid_argument, "write_field: value count does not match grid");
  std::vector<float> payload(field.values.size());
  for (std::size_t c = 0; c < payload.size(); ++c) {
    if (!std::isfinite(field.values[c]))
      fail(ErrorCode::numeric, path + ": refusing to write non-finite value at cell " + std::to_string(c));
    payload[c] = static_cast<float>(field.values[c]);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  write_header(os, "UFN1", field.grid);
  os.write(reinterpret_cast<const char*>(payload.data()),
           std::streamsize(payload.size() * sizeof(float)));
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

ScalarField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  Grid3 g = read_header(is, "UFN1", path);
  std::vector<float> payload(g.cell_count());
  is.read(reinterpret_cast<char*>(payload.data()), std::streamsize(payload.size() * sizeof(float)));
  if (std::size_t(is.gcount()) != payload.size() * sizeof(float))
    fail(ErrorCode::format, path + ": truncated payload, expected " +
                                std::to_string(payload.size()) + " values");
  ScalarField f(g);
  for (std::size_t c = 0; c < payload.size(); ++c) f.values[c] = payload[c];
  return f;
}

void write_mask(const BuildingMask& mask, const std::string& path) {
  mask.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  write_header(os, "UMSK", mask.grid);
  os.write(reinterpret_cast<const char*>(mask.solid.data()), std::streamsize(mask.solid.size()));
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

BuildingMask read_mask(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  Grid3 g = read_header(is, "UMSK", path);
  BuildingMask m(g);
  is.read(reinterpret_cast<char*>(m.solid.data()), std::streamsize(m.solid.size()));
  if (std::size_t(is.gcount()) != m.solid.size())
    fail(ErrorCode::format, path + ": truncated payload");
  m.validate();
  return m;
}

ScalarField normalize(const ScalarField& field, const NormStats& stats) {
  if (!(stats.std > 0.0)) fail(ErrorCode::invalid_argument, "normalize: std must be positive");
  ScalarField out = field;
  for (double& v : out.values) v = (v - stats.mean) / stats.std;
  return out;
}

ScalarField denormalize(const ScalarField& field, const NormStats& stats) {
  if (!(stats.std > 0.0)) fail(ErrorCode::invalid_argument, "denormalize: std must be positive");
  ScalarField out = field;
  for (double& v : out.values) v = v * stats.std + stats.mean;
  return out;
}

} // namespace ufno
