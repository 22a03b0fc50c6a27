#pragma once

#include "texmesh/camera.hpp"
#include "texmesh/dataset.hpp"
#include "texmesh/local_mesh.hpp"
#include "texmesh/mesh_atlas.hpp"
#include "texmesh/scan_simplify.hpp"
#include "texmesh/semantic_fusion.hpp"

#include <array>
#include <optional>
#include <random>
#include <vector>

namespace texmesh::testutil {

// Analytic triangle soup with per-triangle classes; the ray-cast side of
// every oracle, independent of the rasterizer.
struct TriScene {
  std::vector<std::array<Vec3, 3>> tris;
  std::vector<int> cls;

  void add_tri(const Vec3& a, const Vec3& b, const Vec3& c, int class_id);
  // Split into (p0,p1,p2) and (p0,p2,p3); pass corners CCW seen from the front.
  void add_quad(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, int class_id);
  void add_box(const Vec3& lo, const Vec3& hi, int class_id, bool with_top = true);

  struct Hit {
    double t = 0.0;
    int tri = -1;
  };
  std::optional<Hit> raycast(const Vec3& origin, const Vec3& dir, double t_min = 1e-9,
                             double t_max = 1e30) const;
};

struct SceneFixture {
  TexturedMesh mesh;            // atlased; face order matches scene.tris
  std::vector<int> face_class;  // == scene.cls
  int class_count = 0;
  Palette palette;
  CameraModel model;
  Trajectory trajectory;  // world <- camera
  TriScene scene;
};

// Closed room with an interior partition wall (occluder). Classes:
// 0 floor, 1 ceiling, 2 wall, 3 partition; class_count 6.
SceneFixture make_box_room(int texture_size = 512, int views = 20, int image_width = 320,
                           int image_height = 240);

// Ground + two building walls + thin poles. Classes: 0 road, 1 building,
// 2 pole, 3 terrain; class_count 24 (sparse page headroom).
SceneFixture make_street(int texture_size = 1024, int views = 20, int image_width = 320,
                         int image_height = 240);

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up = Vec3::UnitZ());

// Analytic per-pixel class labels / z-depths via ray casting.
ImageU8 raycast_labels(const SceneFixture& fixture, const Pose& world_from_camera);
Image<float> raycast_depth(const TriScene& scene, const CameraModel& model, const Pose& frame_from_world);

SegmentationResult seg_from_labels(const ImageU8& labels, float confidence);

// Replaces each pixel's label with a uniform class draw at the given rate.
SegmentationResult corrupt_seg(const ImageU8& labels, int class_count, double rate, float confidence,
                               std::mt19937_64& rng);

// Organized scan of a scene fixture taken from `world_from_sensor`.
OrganizedScan scan_of_scene(const TriScene& scene, const Pose& world_from_sensor, int rings, int columns,
                            double min_elevation_deg, double max_elevation_deg);

// Sensor above an infinite floor plane z = 0.
OrganizedScan make_plane_scan(double sensor_height = 1.5, int rings = 8, int columns = 360);

// Subdivided icosahedron as a LocalMesh; face windings make the paper's
// cross-product normals point outward.
LocalMesh make_icosphere(int subdivisions);

// Random simply-connected planar-ish ring polyline for RDP fuzzing.
std::vector<Vec3> random_ring(std::mt19937_64& rng, int points, double noise);

// Random triangle soup in front of a default camera (for rasterizer oracles).
TexturedMesh random_front_mesh(std::mt19937_64& rng, int triangles);

}  // namespace texmesh::testutil
