#pragma once

#include "texmesh/geometry.hpp"

#include <filesystem>
#include <vector>

namespace texmesh {

// Binary little-endian PLY with x,y,z,nx,ny,nz float properties. This is the
// handoff format consumed by external surface-reconstruction tooling.
void write_ply_oriented_points(const std::filesystem::path& path, const std::vector<Vec3>& positions,
                               const std::vector<Vec3>& normals);

struct OrientedPointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
};

OrientedPointCloud read_ply_oriented_points(const std::filesystem::path& path);

}  // namespace texmesh
