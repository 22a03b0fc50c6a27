#include "texmesh/ply_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace texmesh {

void write_ply_oriented_points(const std::filesystem::path& path, const std::vector<Vec3>& positions,
                               const std::vector<Vec3>& normals) {
  if (positions.size() != normals.size()) {
    throw std::invalid_argument("ply: position/normal count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ply: cannot open for write: " + path.string());

  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << positions.size() << "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) out << "property float " << p << "\n";
  out << "end_header\n";

  for (std::size_t i = 0; i < positions.size(); ++i) {
    const float row[6] = {static_cast<float>(positions[i].x()), static_cast<float>(positions[i].y()),
                          static_cast<float>(positions[i].z()), static_cast<float>(normals[i].x()),
                          static_cast<float>(normals[i].y()),   static_cast<float>(normals[i].z())};
    out.write(reinterpret_cast<const char*>(row), sizeof(row));
  }
  if (!out) throw std::runtime_error("ply: write failed: " + path.string());
}

OrientedPointCloud read_ply_oriented_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ply: cannot open: " + path.string());

  std::string line;
  std::size_t count = 0;
  bool binary_le = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = (fmt == "binary_little_endian");
    } else if (tok == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw std::runtime_error("ply: unsupported element: " + name);
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      if (type != "float") throw std::runtime_error("ply: unsupported property type: " + type);
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!binary_le) throw std::runtime_error("ply: only binary_little_endian supported: " + path.string());
  if (props != std::vector<std::string>{"x", "y", "z", "nx", "ny", "nz"}) {
    throw std::runtime_error("ply: unexpected property layout: " + path.string());
  }

  OrientedPointCloud cloud;
  cloud.positions.reserve(count);
  cloud.normals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    float row[6];
    in.read(reinterpret_cast<char*>(row), sizeof(row));
    if (!in) throw std::runtime_error("ply: truncated file: " + path.string());
    cloud.positions.emplace_back(row[0], row[1], row[2]);
    cloud.normals.emplace_back(row[3], row[4], row[5]);
  }
  return cloud;
}

}  // namespace texmesh
