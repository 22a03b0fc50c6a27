#include "texmesh/mesh_atlas.hpp"

#include "texmesh/obj_io.hpp"
#include "texmesh/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace texmesh {

void TexturedMesh::recompute_vertex_normals() {
  normals.assign(positions.size(), Vec3::Zero());
  for (const auto& f : faces) {
    const Vec3 n = (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]);
    for (std::uint32_t v : f) normals[v] += n;  // cross length = 2*area, area weighting for free
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    n = len > 1e-15 ? Vec3(n / len) : Vec3::UnitZ();
  }
}

void TexturedMesh::validate() const {
  if (has_uvs() && uvs.size() != positions.size()) {
    throw std::runtime_error("mesh: uv count differs from vertex count");
  }
  if (normals.size() != positions.size()) {
    throw std::runtime_error("mesh: normal count differs from vertex count");
  }
  for (const auto& f : faces) {
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw std::runtime_error("mesh: face with repeated vertex");
    }
    for (std::uint32_t v : f) {
      if (v >= positions.size()) throw std::runtime_error("mesh: face index out of range");
    }
  }
  for (const Vec2& uv : uvs) {
    if (!(uv.x() >= -1e-9 && uv.x() <= 1.0 + 1e-9 && uv.y() >= -1e-9 && uv.y() <= 1.0 + 1e-9)) {
      throw std::runtime_error("mesh: uv outside [0,1]^2");
    }
  }
  for (const Vec3& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw std::runtime_error("mesh: non-unit vertex normal");
  }
}

TexturedMesh load_mesh(const std::filesystem::path& path, const MeshLoadOptions& options) {
  const ObjData data = read_obj(path);
  if (data.faces.empty()) throw std::runtime_error("mesh: no faces in " + path.string());

  const bool has_uv = !data.uvs.empty();
  const bool has_normals = !data.normals.empty();
  if (!has_uv && options.require_uvs) {
    throw std::runtime_error("mesh: no UV coordinates in " + path.string() +
                             " (generate a fallback atlas or provide an unwrapped mesh)");
  }

  TexturedMesh mesh;
  std::map<std::tuple<int, int, int>, std::uint32_t> unified;
  for (const auto& face : data.faces) {
    std::array<std::uint32_t, 3> out;
    for (int i = 0; i < 3; ++i) {
      const auto key = std::make_tuple(face[i].v, face[i].vt, face[i].vn);
      auto it = unified.find(key);
      if (it == unified.end()) {
        it = unified.emplace(key, static_cast<std::uint32_t>(mesh.positions.size())).first;
        mesh.positions.push_back(data.positions[face[i].v]);
        if (has_uv) {
          if (face[i].vt < 0) throw std::runtime_error("mesh: face corner without uv in " + path.string());
          mesh.uvs.push_back(data.uvs[face[i].vt]);
        }
        if (has_normals && face[i].vn >= 0) {
          mesh.normals.push_back(data.normals[face[i].vn].normalized());
        }
      }
      out[i] = it->second;
    }
    mesh.faces.push_back(out);
  }

  if (mesh.normals.size() != mesh.positions.size()) mesh.recompute_vertex_normals();

  // Non-manifold connectivity is tolerated; warn so dataset issues surface.
  std::unordered_map<std::uint64_t, int> edge_count;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) ++edge_count[edge_key(f[e], f[(e + 1) % 3])];
  }
  std::size_t over_shared = 0;
  for (const auto& [key, count] : edge_count) {
    if (count > 2) ++over_shared;
  }
  if (over_shared > 0) {
    std::cerr << "[warn] mesh: " << over_shared << " non-manifold edges in " << path.string() << "\n";
  }

  mesh.validate();
  return mesh;
}

namespace {

double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

// Intersection area of two triangles via Sutherland-Hodgman clipping.
double triangle_overlap_area(const std::array<Vec2, 3>& a, std::array<Vec2, 3> b) {
  if (orient2d(b[0], b[1], b[2]) < 0.0) std::swap(b[1], b[2]);
  std::vector<Vec2> poly(a.begin(), a.end());
  for (int e = 0; e < 3 && !poly.empty(); ++e) {
    const Vec2& c0 = b[e];
    const Vec2& c1 = b[(e + 1) % 3];
    std::vector<Vec2> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % poly.size()];
      const double dp = orient2d(c0, c1, p);
      const double dq = orient2d(c0, c1, q);
      if (dp >= 0.0) next.push_back(p);
      if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
        next.push_back(p + (dp / (dp - dq)) * (q - p));
      }
    }
    poly = std::move(next);
  }
  return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

struct Chart {
  std::vector<std::uint32_t> faces;
  std::vector<std::array<Vec2, 3>> projected;  // chart-local 2D triangles, one per face
  Vec2 lo = Vec2::Zero(), hi = Vec2::Zero();
};

struct PackedRect {
  int x = 0, y = 0, w = 0, h = 0;
};

// Shelf packing of rects (sorted by height) into a square of side `size`.
bool shelf_pack(std::vector<PackedRect>& rects, const std::vector<int>& order, int size) {
  int cx = 0, cy = 0, shelf = 0;
  for (int idx : order) {
    PackedRect& r = rects[idx];
    if (r.w > size || r.h > size) return false;
    if (cx + r.w > size) {
      cy += shelf;
      cx = 0;
      shelf = 0;
    }
    if (cy + r.h > size) return false;
    r.x = cx;
    r.y = cy;
    cx += r.w;
    shelf = std::max(shelf, r.h);
  }
  return true;
}

}  // namespace

TexturedMesh generate_uv_atlas(const TexturedMesh& mesh, int resolution, const AtlasOptions& options) {
  if (resolution < 8) throw std::invalid_argument("atlas: resolution too small");
  const std::size_t face_count = mesh.faces.size();
  if (face_count == 0) throw std::invalid_argument("atlas: empty mesh");

  // Face normals and edge adjacency for region growing.
  std::vector<Vec3> fnormal(face_count, Vec3::UnitZ());
  for (std::size_t f = 0; f < face_count; ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3 n = (mesh.positions[tri[1]] - mesh.positions[tri[0]])
                       .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]]);
    if (n.norm() > 1e-15) fnormal[f] = n.normalized();
  }
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> edge_faces;
  for (std::size_t f = 0; f < face_count; ++f) {
    const auto& tri = mesh.faces[f];
    for (int e = 0; e < 3; ++e) {
      edge_faces[edge_key(tri[e], tri[(e + 1) % 3])].push_back(static_cast<std::uint32_t>(f));
    }
  }

  const double cone = options.max_normal_deviation_deg * std::numbers::pi / 180.0;
  std::vector<int> chart_of(face_count, -1);
  std::vector<Chart> charts;

  for (std::size_t seed = 0; seed < face_count; ++seed) {
    if (chart_of[seed] != -1) continue;
    Chart chart;
    const Vec3 ref = fnormal[seed];

    // Orthonormal basis of the seed plane.
    Vec3 axis = std::abs(ref.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = ref.cross(axis).normalized();
    const Vec3 v = ref.cross(u).normalized();
    auto project = [&](std::uint32_t face) {
      std::array<Vec2, 3> out;
      for (int i = 0; i < 3; ++i) {
        const Vec3& p = mesh.positions[mesh.faces[face][i]];
        out[i] = Vec2(p.dot(u), p.dot(v));
      }
      return out;
    };

    std::deque<std::uint32_t> frontier{static_cast<std::uint32_t>(seed)};
    while (!frontier.empty()) {
      const std::uint32_t f = frontier.front();
      frontier.pop_front();
      if (chart_of[f] != -1) continue;
      if (f != seed && angle_between(fnormal[f], ref) >= cone) continue;

      const auto proj = project(f);
      const double area = polygon_area({proj[0], proj[1], proj[2]});
      bool overlaps = false;
      for (std::size_t k = 0; k < chart.projected.size() && !overlaps; ++k) {
        const double other = polygon_area(
            {chart.projected[k][0], chart.projected[k][1], chart.projected[k][2]});
        const double inter = triangle_overlap_area(proj, chart.projected[k]);
        overlaps = inter > 1e-7 * std::max(1e-12, std::min(area, other));
      }
      if (overlaps) continue;  // face starts its own chart later

      chart_of[f] = static_cast<int>(charts.size());
      chart.faces.push_back(f);
      chart.projected.push_back(proj);
      const auto& tri = mesh.faces[f];
      for (int e = 0; e < 3; ++e) {
        for (std::uint32_t nb : edge_faces[edge_key(tri[e], tri[(e + 1) % 3])]) {
          if (chart_of[nb] == -1) frontier.push_back(nb);
        }
      }
    }

    chart.lo = chart.projected.front()[0];
    chart.hi = chart.lo;
    for (const auto& tri : chart.projected) {
      for (const Vec2& p : tri) {
        chart.lo = chart.lo.cwiseMin(p);
        chart.hi = chart.hi.cwiseMax(p);
      }
    }
    charts.push_back(std::move(chart));
  }

  // Pick the largest texels-per-unit scale whose shelf packing still fits.
  const int gutter = std::max(1, options.gutter_texels);
  auto make_rects = [&](double scale) {
    std::vector<PackedRect> rects(charts.size());
    for (std::size_t c = 0; c < charts.size(); ++c) {
      const Vec2 dim = charts[c].hi - charts[c].lo;
      rects[c].w = static_cast<int>(std::ceil(dim.x() * scale)) + 2 * gutter + 1;
      rects[c].h = static_cast<int>(std::ceil(dim.y() * scale)) + 2 * gutter + 1;
    }
    return rects;
  };
  std::vector<int> order(charts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  // Heights only depend on the chart extent, so one ordering works for all scales.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return (charts[a].hi - charts[a].lo).y() > (charts[b].hi - charts[b].lo).y();
  });

  double lo_scale = 0.0, hi_scale = 0.0;
  {
    double max_dim = 1e-9;
    for (const Chart& c : charts) max_dim = std::max({max_dim, (c.hi - c.lo).x(), (c.hi - c.lo).y()});
    hi_scale = resolution / max_dim;
  }
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = lo_scale == 0.0 && iter == 0 ? hi_scale : 0.5 * (lo_scale + hi_scale);
    auto rects = make_rects(mid);
    if (shelf_pack(rects, order, resolution)) {
      lo_scale = mid;
    } else {
      hi_scale = mid;
    }
    if (hi_scale - lo_scale < 1e-9 * hi_scale) break;
  }
  if (lo_scale <= 0.0) throw std::runtime_error("atlas: charts do not fit at any scale");
  const double scale = lo_scale;
  std::vector<PackedRect> rects = make_rects(scale);
  if (!shelf_pack(rects, order, resolution)) throw std::runtime_error("atlas: packing failed");

  // Emit the atlased mesh; vertices are duplicated per chart.
  TexturedMesh out;
  out.faces.resize(face_count);
  const bool carry_normals = mesh.normals.size() == mesh.positions.size();
  std::unordered_map<std::uint64_t, std::uint32_t> dup;  // (chart, vertex) -> new index
  for (std::size_t c = 0; c < charts.size(); ++c) {
    const Chart& chart = charts[c];
    const PackedRect& rect = rects[c];
    for (std::size_t k = 0; k < chart.faces.size(); ++k) {
      const std::uint32_t f = chart.faces[k];
      for (int i = 0; i < 3; ++i) {
        const std::uint32_t vi = mesh.faces[f][i];
        const std::uint64_t key = (static_cast<std::uint64_t>(c) << 32) | vi;
        auto it = dup.find(key);
        if (it == dup.end()) {
          it = dup.emplace(key, static_cast<std::uint32_t>(out.positions.size())).first;
          out.positions.push_back(mesh.positions[vi]);
          const Vec2 local = chart.projected[k][i] - chart.lo;
          const Vec2 texel(rect.x + gutter + local.x() * scale, rect.y + gutter + local.y() * scale);
          out.uvs.push_back(texel / static_cast<double>(resolution));
          if (carry_normals) out.normals.push_back(mesh.normals[vi]);
        }
        out.faces[f][i] = it->second;
      }
    }
  }
  if (!carry_normals) out.recompute_vertex_normals();
  out.validate();
  return out;
}

TexelTable build_texel_table(const TexturedMesh& mesh, int resolution) {
  if (!mesh.has_uvs()) throw std::invalid_argument("texel table: mesh has no atlas");
  TexelTable table;
  table.resolution = resolution;

  std::vector<std::uint8_t> claimed(static_cast<std::size_t>(resolution) * resolution, 0);
  std::size_t collisions = 0;

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    // Texel-space corners; texel (x,y) has center (x+0.5, y+0.5).
    Vec2 q[3];
    for (int i = 0; i < 3; ++i) q[i] = mesh.uvs[tri[i]] * static_cast<double>(resolution);

    int remap[3] = {0, 1, 2};
    double area2 = orient2d(q[0], q[1], q[2]);
    if (std::abs(area2) < 1e-14) continue;  // degenerate in UV space
    if (area2 < 0.0) {
      std::swap(q[1], q[2]);
      remap[1] = 2;
      remap[2] = 1;
      area2 = -area2;
    }

    // The zero-set of an edge function counts as inside only on "left/bottom"
    // edges so texels on shared edges get exactly one owner.
    auto edge_accepts_zero = [](const Vec2& a, const Vec2& b) {
      const double dx = b.x() - a.x();
      const double dy = b.y() - a.y();
      return dy > 0.0 || (dy == 0.0 && dx < 0.0);
    };
    const bool zero_ok[3] = {edge_accepts_zero(q[1], q[2]), edge_accepts_zero(q[2], q[0]),
                             edge_accepts_zero(q[0], q[1])};

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({q[0].x(), q[1].x(), q[2].x()}) - 0.5)));
    const int x1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({q[0].x(), q[1].x(), q[2].x()}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({q[0].y(), q[1].y(), q[2].y()}) - 0.5)));
    const int y1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({q[0].y(), q[1].y(), q[2].y()}))));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const double e0 = orient2d(q[1], q[2], p);
        const double e1 = orient2d(q[2], q[0], p);
        const double e2 = orient2d(q[0], q[1], p);
        const double e[3] = {e0, e1, e2};
        bool inside = true;
        for (int k = 0; k < 3 && inside; ++k) {
          inside = e[k] > 0.0 || (e[k] == 0.0 && zero_ok[k]);
        }
        if (!inside) continue;

        const std::size_t tex = static_cast<std::size_t>(y) * resolution + x;
        if (claimed[tex]) {
          ++collisions;
          continue;
        }
        claimed[tex] = 1;

        double lam[3];
        for (int k = 0; k < 3; ++k) lam[remap[k]] = e[k] / area2;

        const Vec3 pos = lam[0] * mesh.positions[tri[0]] + lam[1] * mesh.positions[tri[1]] +
                         lam[2] * mesh.positions[tri[2]];
        Vec3 nrm = lam[0] * mesh.normals[tri[0]] + lam[1] * mesh.normals[tri[1]] +
                   lam[2] * mesh.normals[tri[2]];
        const double nlen = nrm.norm();
        nrm = nlen > 1e-9 ? Vec3(nrm / nlen)
                          : (mesh.positions[tri[1]] - mesh.positions[tri[0]])
                                .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]])
                                .normalized();

        table.texel.push_back(static_cast<std::uint32_t>(tex));
        table.face.push_back(static_cast<std::uint32_t>(f));
        table.lambda12.push_back(Vec2f(static_cast<float>(lam[0]), static_cast<float>(lam[1])));
        table.position.push_back(pos.cast<float>());
        table.normal.push_back(nrm.cast<float>());
      }
    }
  }

  table.collisions = collisions;
  if (collisions > 0) {
    std::cerr << "[warn] texel table: " << collisions << " texels claimed by multiple faces\n";
  }
  return table;
}

void export_textured_mesh(const TexturedMesh& mesh, const ImageRgb8& color_texture,
                          const ImageU8& semantic_argmax, const std::vector<Rgb8>& palette,
                          const std::filesystem::path& directory, const std::string& basename) {
  std::filesystem::create_directories(directory);

  ObjData data;
  data.mtllib = basename + ".mtl";
  data.positions = mesh.positions;
  data.uvs = mesh.uvs;
  data.normals = mesh.normals;
  data.faces.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    std::array<ObjData::Corner, 3> face;
    for (int i = 0; i < 3; ++i) {
      face[i].v = static_cast<int>(f[i]);
      face[i].vt = mesh.has_uvs() ? static_cast<int>(f[i]) : -1;
      face[i].vn = static_cast<int>(f[i]);
    }
    data.faces.push_back(face);
  }
  write_obj(directory / (basename + ".obj"), data);

  {
    std::ofstream mtl(directory / (basename + ".mtl"));
    mtl << "newmtl fused\nKa 1 1 1\nKd 1 1 1\nmap_Kd " << basename << "_color.png\n";
  }

  // Texture row 0 is v=0 (bottom); image files expect the top row first.
  auto flip_rows = [](const auto& img) {
    auto out = img;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, img.height - 1 - y);
    }
    return out;
  };
  if (!color_texture.empty()) {
    write_png_rgb8(directory / (basename + "_color.png"), flip_rows(color_texture));
  }
  if (!semantic_argmax.empty()) {
    write_png_indexed(directory / (basename + "_semantic.png"), flip_rows(semantic_argmax), palette);
  }
}

}  // namespace texmesh
