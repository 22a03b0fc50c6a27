#include "texmesh/local_mesh.hpp"

#include "texmesh/cdt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <unordered_map>

namespace texmesh {

Vec2 unwrap_polar(int ring, int column, int columns) {
  return {2.0 * std::numbers::pi * static_cast<double>(column) / static_cast<double>(columns),
          static_cast<double>(ring)};
}

void unwrap_polar(std::vector<MeshVertex>& points, int columns) {
  for (MeshVertex& v : points) v.param = unwrap_polar(v.ring, v.column, columns);
}

std::optional<LocalMesh> triangulate_constrained(std::vector<MeshVertex> points,
                                                 const std::vector<std::pair<int, int>>& constraints,
                                                 const TriangulationOptions& options) {
  std::vector<Vec2> params(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) params[i] = points[i].param;

  auto cdt = constrained_delaunay(params, constraints);
  if (!cdt) return std::nullopt;

  LocalMesh mesh;
  mesh.vertices = std::move(points);
  mesh.constrained_edges = std::move(cdt->constrained_edges);

  if (options.max_azimuth_gap > 0.0) {
    for (const auto& tri : cdt->triangles) {
      bool bridges_gap = false;
      for (int e = 0; e < 3 && !bridges_gap; ++e) {
        const double da = std::abs(mesh.vertices[tri[e]].param.x() - mesh.vertices[tri[(e + 1) % 3]].param.x());
        bridges_gap = da > options.max_azimuth_gap;
      }
      if (!bridges_gap) mesh.triangles.push_back(tri);
    }
  } else {
    mesh.triangles = std::move(cdt->triangles);
  }
  if (mesh.triangles.empty()) return std::nullopt;
  return mesh;
}

std::optional<Vec3> face_normal(const Vec3& v1, const Vec3& v2, const Vec3& v3) {
  const Vec3 cross = (v1 - v2).cross(v3 - v2);
  const double len = cross.norm();
  if (len <= 1e-15) return std::nullopt;
  return Vec3(cross / len);
}

std::vector<std::optional<Vec3>> vertex_normals_mwa(const LocalMesh& mesh) {
  std::vector<Vec3> sums(mesh.vertices.size(), Vec3::Zero());
  std::vector<char> touched(mesh.vertices.size(), 0);

  for (const auto& tri : mesh.triangles) {
    const Vec3& p0 = mesh.vertices[tri[0]].position;
    const Vec3& p1 = mesh.vertices[tri[1]].position;
    const Vec3& p2 = mesh.vertices[tri[2]].position;
    const auto nf = face_normal(p0, p1, p2);
    if (!nf) continue;
    const Vec3 pos[3] = {p0, p1, p2};
    for (int i = 0; i < 3; ++i) {
      const Vec3 e1 = pos[(i + 1) % 3] - pos[i];
      const Vec3 e2 = pos[(i + 2) % 3] - pos[i];
      const double alpha = angle_between(e1, e2);
      sums[tri[i]] += alpha * (*nf);
      touched[tri[i]] = 1;
    }
  }

  std::vector<std::optional<Vec3>> normals(mesh.vertices.size());
  for (std::size_t i = 0; i < normals.size(); ++i) {
    const double len = sums[i].norm();
    if (!touched[i] || len <= 1e-15) continue;
    normals[i] = Vec3(sums[i] / len);
  }
  return normals;
}

double triangle_quality(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double h = (b - a).squaredNorm() + (c - b).squaredNorm() + (a - c).squaredNorm();
  if (h <= 0.0) return 0.0;
  return 4.0 * triangle_area(a, b, c) * std::sqrt(3.0) / h;
}

namespace {

struct EdgeRec {
  int t0 = -1;
  int t1 = -1;
  std::uint32_t version = 0;
};

struct QueueEntry {
  double gain;
  std::uint64_t key;
  std::uint32_t version;
  bool operator<(const QueueEntry& o) const { return gain < o.gain; }
};

std::uint32_t opposite_vertex(const std::array<std::uint32_t, 3>& tri, std::uint32_t a, std::uint32_t b) {
  for (std::uint32_t v : tri) {
    if (v != a && v != b) return v;
  }
  return tri[0];
}

}  // namespace

FlipStats flip_edges(LocalMesh& mesh) {
  FlipStats stats;

  auto& tris = mesh.triangles;
  const auto& verts = mesh.vertices;

  auto quality_of = [&](int t) {
    return triangle_quality(verts[tris[t][0]].position, verts[tris[t][1]].position,
                            verts[tris[t][2]].position);
  };
  for (std::size_t t = 0; t < tris.size(); ++t) stats.quality_sum_before += quality_of(static_cast<int>(t));

  std::unordered_map<std::uint64_t, EdgeRec> edges;
  auto register_tri = [&](int t) {
    for (int e = 0; e < 3; ++e) {
      auto& rec = edges[edge_key(tris[t][e], tris[t][(e + 1) % 3])];
      if (rec.t0 == -1 || rec.t0 == t) {
        rec.t0 = t;
      } else {
        rec.t1 = t;
      }
    }
  };
  for (std::size_t t = 0; t < tris.size(); ++t) register_tri(static_cast<int>(t));

  // Gain of flipping `key`, or nullopt when the flip is not applicable. The
  // candidate must raise BOTH the min and the sum of the two incident
  // triangle qualities and keep the param-space quad strictly convex.
  struct Candidate {
    double min_gain;
    double sum_gain;
    std::uint32_t a, b, c, d;  // shared edge (a,b); apexes c (t0), d (t1)
  };
  auto evaluate = [&](std::uint64_t key) -> std::optional<Candidate> {
    const auto it = edges.find(key);
    if (it == edges.end() || it->second.t0 < 0 || it->second.t1 < 0) return std::nullopt;
    if (mesh.constrained_edges.count(key)) return std::nullopt;
    const std::uint32_t a = edge_key_high(key);
    const std::uint32_t b = edge_key_low(key);
    const int t0 = it->second.t0;
    const int t1 = it->second.t1;
    const std::uint32_t c = opposite_vertex(tris[t0], a, b);
    const std::uint32_t d = opposite_vertex(tris[t1], a, b);
    if (c == d) return std::nullopt;
    if (edges.count(edge_key(c, d))) return std::nullopt;  // diagonal already exists elsewhere

    // Convexity in parameter space keeps the triangulation fold-free.
    const Vec2& pa = verts[a].param;
    const Vec2& pb = verts[b].param;
    const Vec2& pc = verts[c].param;
    const Vec2& pd = verts[d].param;
    const double s1 = orient2d(pc, pd, pa);
    const double s2 = orient2d(pc, pd, pb);
    if (!((s1 > 1e-14 && s2 < -1e-14) || (s1 < -1e-14 && s2 > 1e-14))) return std::nullopt;

    const double q0 = triangle_quality(verts[a].position, verts[b].position, verts[c].position);
    const double q1 = triangle_quality(verts[a].position, verts[b].position, verts[d].position);
    const double q2 = triangle_quality(verts[c].position, verts[d].position, verts[a].position);
    const double q3 = triangle_quality(verts[c].position, verts[d].position, verts[b].position);
    Candidate cand;
    cand.min_gain = std::min(q2, q3) - std::min(q0, q1);
    cand.sum_gain = (q2 + q3) - (q0 + q1);
    cand.a = a;
    cand.b = b;
    cand.c = c;
    cand.d = d;
    if (cand.min_gain <= 1e-12 || cand.sum_gain <= 1e-12) return std::nullopt;
    return cand;
  };

  std::priority_queue<QueueEntry> queue;
  auto push = [&](std::uint64_t key) {
    if (const auto cand = evaluate(key)) {
      queue.push({cand->min_gain, key, edges[key].version});
    }
  };
  for (const auto& [key, rec] : edges) push(key);

  auto replace_edge_tri = [&](std::uint64_t key, int old_t, int new_t) {
    auto& rec = edges[key];
    if (rec.t0 == old_t) {
      rec.t0 = new_t;
    } else if (rec.t1 == old_t) {
      rec.t1 = new_t;
    }
    ++rec.version;
  };

  while (!queue.empty()) {
    const QueueEntry top = queue.top();
    queue.pop();
    const auto it = edges.find(top.key);
    if (it == edges.end() || it->second.version != top.version) continue;  // stale
    const auto cand = evaluate(top.key);
    if (!cand) continue;

    const int t0 = it->second.t0;
    const int t1 = it->second.t1;
    auto [a, b, c, d] = std::tuple(cand->a, cand->b, cand->c, cand->d);

    // Orient (a,b) along t0's winding so the rewritten triangles keep the
    // mesh's orientation.
    {
      bool forward = false;
      for (int e = 0; e < 3 && !forward; ++e) {
        forward = tris[t0][e] == a && tris[t0][(e + 1) % 3] == b;
      }
      if (!forward) std::swap(a, b);
    }
    tris[t0] = {a, d, c};
    tris[t1] = {d, b, c};

    edges.erase(top.key);
    EdgeRec diag;
    diag.t0 = t0;
    diag.t1 = t1;
    edges[edge_key(c, d)] = diag;

    replace_edge_tri(edge_key(b, d), t1, t1);   // stays, version bump
    replace_edge_tri(edge_key(b, c), t0, t1);   // moved to t1
    replace_edge_tri(edge_key(a, d), t1, t0);   // moved to t0
    replace_edge_tri(edge_key(a, c), t0, t0);   // stays, version bump

    ++stats.flips;
    const double prev = stats.quality_sum_trace.empty() ? stats.quality_sum_before : stats.quality_sum_trace.back();
    stats.quality_sum_trace.push_back(prev + cand->sum_gain);

    for (const std::uint64_t key :
         {edge_key(c, d), edge_key(b, d), edge_key(b, c), edge_key(a, d), edge_key(a, c)}) {
      push(key);
    }
  }

  for (std::size_t t = 0; t < tris.size(); ++t) stats.quality_sum_after += quality_of(static_cast<int>(t));
  return stats;
}

NormalEstimationOptions::NormalEstimationOptions() = default;

std::vector<OrientedPoint> estimate_oriented_cloud(const OrganizedScan& scan, double epsilon,
                                                   const NormalEstimationOptions& options) {
  std::vector<OrientedPoint> cloud;
  const std::vector<SimplifiedRing> simplified = simplify_scan(scan, epsilon);
  if (simplified.empty()) return cloud;

  std::vector<MeshVertex> verts;
  std::unordered_map<std::uint64_t, int> index_of;  // (ring, column) -> vertex
  auto rc_key = [](int ring, int col) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ring)) << 32) |
           static_cast<std::uint32_t>(col);
  };
  for (const SimplifiedRing& ring : simplified) {
    for (int col : ring.kept) {
      index_of[rc_key(ring.ring, col)] = static_cast<int>(verts.size());
      MeshVertex v;
      v.position = scan.point_sensor(ring.ring, col);
      v.ring = ring.ring;
      v.column = col;
      verts.push_back(v);
    }
  }
  unwrap_polar(verts, scan.columns);

  std::vector<std::pair<int, int>> constraints;
  for (const SimplifiedRing& ring : simplified) {
    for (const auto& [a, b] : ring.constrained_segments) {
      constraints.emplace_back(index_of.at(rc_key(ring.ring, a)), index_of.at(rc_key(ring.ring, b)));
    }
  }

  TriangulationOptions tri_options = options.triangulation;
  if (tri_options.max_azimuth_gap <= 0.0) {
    // Cut triangles spanning unobserved sectors; simplification legitimately
    // produces large kept-point gaps, so the default is generous.
    tri_options.max_azimuth_gap = 0.5 * std::numbers::pi;
  }

  auto mesh = triangulate_constrained(std::move(verts), constraints, tri_options);
  if (!mesh) return cloud;

  flip_edges(*mesh);

  const auto normals = vertex_normals_mwa(*mesh);
  const Mat3 rot = scan.world_from_sensor.rotation();
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i) {
    if (!normals[i]) continue;  // unmeshable fragment or isolated vertex
    OrientedPoint op;
    const Vec3& p_sensor = mesh->vertices[i].position;
    Vec3 n = *normals[i];
    if (options.flip_toward_sensor && n.dot(-p_sensor) < 0.0) n = -n;
    op.position = scan.world_from_sensor * p_sensor;
    op.normal = rot * n;
    cloud.push_back(op);
  }
  return cloud;
}

}  // namespace texmesh
