#include "ufno/scene.hpp"

#include <fstream>

#include <json.hpp>

namespace ufno {

using nlohmann::json;

void SceneSpec::validate() const {
  grid.validate();
  const auto ext = grid.extent();
  for (const auto& b : boxes) {
    for (int a = 0; a < 3; ++a) {
      if (!(b.size[a] > 0.0)) fail(ErrorCode::invalid_argument, "scene: box size must be positive");
      if (b.min[a] < grid.origin[a] - 1e-9 ||
          b.min[a] + b.size[a] > grid.origin[a] + ext[a] + 1e-9)
        fail(ErrorCode::invalid_argument, "scene: box extends outside the domain");
    }
  }
}

SceneSpec read_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": " + e.what());
  }
  SceneSpec s;
  try {
    const auto& g = j.at("grid");
    s.grid.nx = g.at("nx").get<std::uint32_t>();
    s.grid.ny = g.at("ny").get<std::uint32_t>();
    s.grid.nz = g.at("nz").get<std::uint32_t>();
    s.grid.dx = g.at("dx").get<double>();
    s.grid.dy = g.at("dy").get<double>();
    s.grid.dz = g.at("dz").get<double>();
    if (g.contains("origin")) {
      auto o = g.at("origin").get<std::vector<double>>();
      if (o.size() != 3) fail(ErrorCode::format, path + ": origin must have 3 entries");
      s.grid.origin = {o[0], o[1], o[2]};
    }
    if (j.contains("boxes")) {
      for (const auto& jb : j.at("boxes")) {
        Box b;
        auto mn = jb.at("min").get<std::vector<double>>();
        auto sz = jb.at("size").get<std::vector<double>>();
        if (mn.size() != 3 || sz.size() != 3)
          fail(ErrorCode::format, path + ": box min/size must have 3 entries");
        b.min = {mn[0], mn[1], mn[2]};
        b.size = {sz[0], sz[1], sz[2]};
        s.boxes.push_back(b);
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": " + e.what());
  }
  s.validate();
  return s;
}

void write_scene(const SceneSpec& scene, const std::string& path) {
  scene.validate();
  json j;
  j["grid"] = {{"nx", scene.grid.nx}, {"ny", scene.grid.ny}, {"nz", scene.grid.nz},
               {"dx", scene.grid.dx}, {"dy", scene.grid.dy}, {"dz", scene.grid.dz},
               {"origin", scene.grid.origin}};
  j["boxes"] = json::array();
  for (const auto& b : scene.boxes) j["boxes"].push_back({{"min", b.min}, {"size", b.size}});
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << j.dump(2) << "\n";
}

BuildingMask rasterize_scene(const SceneSpec& scene) {
  scene.validate();
  BuildingMask mask(scene.grid);
  const Grid3& g = scene.grid;
  for (const auto& b : scene.boxes) {
    for (std::uint32_t k = 0; k < g.nz; ++k) {
      const double z = g.zc(k);
      if (z <= b.min[2] || z >= b.min[2] + b.size[2]) continue;
      for (std::uint32_t j = 0; j < g.ny; ++j) {
        const double y = g.yc(j);
        if (y <= b.min[1] || y >= b.min[1] + b.size[1]) continue;
        for (std::uint32_t i = 0; i < g.nx; ++i) {
          const double x = g.xc(i);
          if (x > b.min[0] && x < b.min[0] + b.size[0]) mask.solid[g.index(i, j, k)] = 1;
        }
      }
    }
  }
  mask.validate(); // rejects scenes with no fluid cell left
  return mask;
}

} // namespace ufno
