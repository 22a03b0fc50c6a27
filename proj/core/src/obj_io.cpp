#include "texmesh/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace texmesh {
namespace {

ObjData::Corner parse_corner(const std::string& token, const ObjData& data, const std::filesystem::path& path) {
  ObjData::Corner corner;
  int values[3] = {0, 0, 0};
  int slot = 0;
  std::size_t pos = 0;
  while (pos < token.size() && slot < 3) {
    const std::size_t next = token.find('/', pos);
    const std::string part = token.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!part.empty()) values[slot] = std::stoi(part);
    if (next == std::string::npos) break;
    pos = next + 1;
    ++slot;
  }
  auto resolve = [&](int idx, std::size_t count) -> int {
    if (idx == 0) return -1;
    const int out = idx > 0 ? idx - 1 : static_cast<int>(count) + idx;
    if (out < 0 || out >= static_cast<int>(count)) {
      throw std::runtime_error("obj: index out of range in " + path.string());
    }
    return out;
  };
  corner.v = resolve(values[0], data.positions.size());
  corner.vt = resolve(values[1], data.uvs.size());
  corner.vn = resolve(values[2], data.normals.size());
  if (corner.v < 0) throw std::runtime_error("obj: face without position index in " + path.string());
  return corner;
}

}  // namespace

ObjData read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("obj: cannot open: " + path.string());

  ObjData data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 p;
      ls >> p.x() >> p.y() >> p.z();
      data.positions.push_back(p);
    } else if (tag == "vt") {
      Vec2 uv;
      ls >> uv.x() >> uv.y();
      data.uvs.push_back(uv);
    } else if (tag == "vn") {
      Vec3 n;
      ls >> n.x() >> n.y() >> n.z();
      data.normals.push_back(n);
    } else if (tag == "mtllib") {
      ls >> data.mtllib;
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (tokens.size() < 3) throw std::runtime_error("obj: face with fewer than 3 corners in " + path.string());
      // Fan-triangulate polygons.
      const ObjData::Corner c0 = parse_corner(tokens[0], data, path);
      for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
        data.faces.push_back({c0, parse_corner(tokens[i], data, path), parse_corner(tokens[i + 1], data, path)});
      }
    }
  }
  return data;
}

void write_obj(const std::filesystem::path& path, const ObjData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("obj: cannot open for write: " + path.string());

  char buf[256];
  if (!data.mtllib.empty()) out << "mtllib " << data.mtllib << "\n";
  for (const Vec3& p : data.positions) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const Vec2& t : data.uvs) {
    std::snprintf(buf, sizeof(buf), "vt %.9g %.9g\n", t.x(), t.y());
    out << buf;
  }
  for (const Vec3& n : data.normals) {
    std::snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x(), n.y(), n.z());
    out << buf;
  }
  for (const auto& face : data.faces) {
    out << "f";
    for (const auto& c : face) {
      out << ' ' << c.v + 1;
      if (c.vt >= 0 || c.vn >= 0) out << '/';
      if (c.vt >= 0) out << c.vt + 1;
      if (c.vn >= 0) out << '/' << c.vn + 1;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("obj: write failed: " + path.string());
}

}  // namespace texmesh
