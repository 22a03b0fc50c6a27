#pragma once

#include "texmesh/geometry.hpp"
#include "texmesh/scan_simplify.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

namespace texmesh {

struct MeshVertex {
  Vec3 position = Vec3::Zero();
  Vec2 param = Vec2::Zero();  // polar-unwrap coordinates (azimuth, ring)
  int ring = -1;
  int column = -1;
};

// Per-scan triangle mesh used for normal estimation. Edge-manifold: every
// interior edge is shared by exactly two triangles.
struct LocalMesh {
  std::vector<MeshVertex> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::unordered_set<std::uint64_t> constrained_edges;
};

struct OrientedPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

// Parameterization of one scan point: (azimuth of the column, ring index).
Vec2 unwrap_polar(int ring, int column, int columns);
void unwrap_polar(std::vector<MeshVertex>& points, int columns);

struct TriangulationOptions {
  // Triangles whose param-space azimuth extent exceeds this are removed to
  // avoid bridging unobserved sectors. <= 0 disables the cut.
  double max_azimuth_gap = 0.0;
};

// Constrained Delaunay triangulation of the vertices' param coordinates.
// Constraints index `points`. Degenerate input yields nullopt.
std::optional<LocalMesh> triangulate_constrained(std::vector<MeshVertex> points,
                                                 const std::vector<std::pair<int, int>>& constraints,
                                                 const TriangulationOptions& options = {});

// normalize((v1 - v2) x (v3 - v2)); nullopt for degenerate triangles.
std::optional<Vec3> face_normal(const Vec3& v1, const Vec3& v2, const Vec3& v3);

// Mean-weighted-by-angle vertex normals: each incident face normal weighted
// by the angle the face subtends at the vertex. Isolated vertices get nullopt.
std::vector<std::optional<Vec3>> vertex_normals_mwa(const LocalMesh& mesh);

// q = 4*a*sqrt(3) / (h1^2 + h2^2 + h3^2), in [0,1], 1 iff equilateral.
double triangle_quality(const Vec3& a, const Vec3& b, const Vec3& c);

struct FlipStats {
  int flips = 0;
  double quality_sum_before = 0.0;
  double quality_sum_after = 0.0;
  std::vector<double> quality_sum_trace;  // running sum after each flip
};

// Greedy edge flipping ordered by the min-quality improvement of the two
// incident triangles. A flip is applied only when it also strictly increases
// their summed quality and keeps the param-space quadrilateral convex.
// Constrained and boundary edges are never flipped.
FlipStats flip_edges(LocalMesh& mesh);

struct NormalEstimationOptions {
  TriangulationOptions triangulation;
  bool flip_toward_sensor = true;
  NormalEstimationOptions();
};

// Full per-scan chain: simplify -> unwrap -> triangulate -> flip edges ->
// MWA normals, normals oriented toward the sensor origin, output in world
// coordinates. Unmeshable fragments are skipped.
std::vector<OrientedPoint> estimate_oriented_cloud(const OrganizedScan& scan, double epsilon,
                                                   const NormalEstimationOptions& options = {});

}  // namespace texmesh
