#pragma once

#include <array>
#include <string>
#include <vector>

#include "ufno/grid.hpp"

namespace ufno {

/// Axis-aligned building footprint: min corner and size, meters.
struct Box {
  std::array<double, 3> min{0, 0, 0};
  std::array<double, 3> size{0, 0, 0};
};

/// Domain plus block buildings. JSON form:
///   {"grid": {"nx":..,"ny":..,"nz":..,"dx":..,"dy":..,"dz":..,"origin":[..]},
///    "boxes": [{"min":[x,y,z], "size":[sx,sy,sz]}, ...]}
struct SceneSpec {
  Grid3 grid;
  std::vector<Box> boxes;

  void validate() const;
};

SceneSpec read_scene(const std::string& path);
void write_scene(const SceneSpec& scene, const std::string& path);

/// Solid wherever a cell center lies inside any box.
BuildingMask rasterize_scene(const SceneSpec& scene);

} // namespace ufno
