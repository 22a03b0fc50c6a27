#pragma once

#include "texmesh/geometry.hpp"
#include "texmesh/image.hpp"
#include "texmesh/mesh_atlas.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

namespace texmesh {

struct CameraModel {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
};

// Posed RGB view. The segmentation travels separately (see semantic_fusion).
struct CameraFrame {
  int id = -1;
  CameraModel model;
  Pose frame_from_world = Pose::Identity();
  ImageRgb8 rgb;
};

struct Projection {
  Vec2 pixel;    // continuous pixel coordinates; pixel (i,j) spans [i,i+1)x[j,j+1)
  double depth;  // camera-frame z
};

// Pinhole projection; nullopt when the point is behind the camera.
std::optional<Projection> project(const Vec3& p_world, const CameraModel& model,
                                  const Pose& frame_from_world);

constexpr float kNoDepth = std::numeric_limits<float>::infinity();
constexpr std::uint32_t kNoFace = 0xffffffffu;

struct DepthMap {
  Image<float> depth;  // meters; kNoDepth where nothing was rendered

  bool hit(int x, int y) const { return depth.at(x, y) != kNoDepth; }
};

// Nearest-surface depth of the mesh seen from the camera; software
// rasterization with a top-left fill rule and perspective-correct depth.
DepthMap render_depth(const TexturedMesh& mesh, const CameraModel& model, const Pose& frame_from_world,
                      int threads = 1);

// Depth plus per-pixel face id and perspective-correct UV, for reprojection.
struct RenderBuffers {
  Image<float> depth;
  Image<std::uint32_t> face;
  Image<Vec2f> uv;
};
RenderBuffers render_attributes(const TexturedMesh& mesh, const CameraModel& model,
                                const Pose& frame_from_world, int threads = 1);

// Shadow-map style visibility: the texel at depth d is the front surface iff
// d <= D(pixel) + bias. Out-of-image pixels and empty depth are not visible.
bool visible(double texel_depth, const Vec2& pixel, const DepthMap& depth_map, double bias);

struct Trajectory {
  std::vector<int> ids;
  std::vector<Pose> world_from_camera;

  std::size_t size() const { return ids.size(); }
};

// File format: one line per frame, `id tx ty tz qx qy qz qw` (world <- camera).
Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);

// Perturbs every pose by a uniform translation within a ball of radius
// max_translation and a rotation of uniform angle <= max_rotation_deg about a
// uniform random axis. Deterministic for a fixed seed; zero bounds return the
// input unchanged.
Trajectory add_pose_noise(const Trajectory& trajectory, double max_translation, double max_rotation_deg,
                          std::uint64_t seed);

}  // namespace texmesh
