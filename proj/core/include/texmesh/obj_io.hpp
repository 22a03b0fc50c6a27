#pragma once

#include "texmesh/geometry.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace texmesh {

// Raw wavefront OBJ contents; corners keep their independent v/vt/vn indices
// so UV seams survive a round trip.
struct ObjData {
  std::vector<Vec3> positions;
  std::vector<Vec2> uvs;
  std::vector<Vec3> normals;
  struct Corner {
    int v = -1;
    int vt = -1;
    int vn = -1;
  };
  std::vector<std::array<Corner, 3>> faces;
  std::string mtllib;
};

ObjData read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const ObjData& data);

}  // namespace texmesh
