#pragma once

#include "texmesh/camera.hpp"
#include "texmesh/image.hpp"
#include "texmesh/mesh_atlas.hpp"
#include "texmesh/semantic_fusion.hpp"

#include <filesystem>
#include <vector>

namespace texmesh {

// Running-average RGB texture with per-texel accumulated weights.
struct ColorTexture {
  int resolution = 0;
  std::vector<float> rgb;     // resolution^2 * 3, values in [0,1]
  std::vector<float> weight;  // resolution^2

  ColorTexture() = default;
  explicit ColorTexture(int res)
      : resolution(res),
        rgb(static_cast<std::size_t>(res) * res * 3, 0.0f),
        weight(static_cast<std::size_t>(res) * res, 0.0f) {}

  ImageRgb8 to_image() const;
};

struct ColorWeightTerms {
  double dist = 0.0;  // 1 / squared camera distance
  double vign = 0.0;  // cos^4 of the angle to the principal axis
  double view = 0.0;  // clamped cosine between surface normal and view ray
  double total = 0.0;
};

// p_cam is the texel position in the camera frame; camera_origin_world and
// the texel's world position/normal give the viewing term.
ColorWeightTerms color_weight(const Vec3& p_cam, const Vec3& p_world, const Vec3& normal_world,
                              const Vec3& camera_origin_world);

// Weighted running-average update of every visible texel, sampling the RGB
// image bilinearly.
FrameFusionStats fuse_color_frame(ColorTexture& texture, const TexelTable& table, const CameraModel& model,
                                  const Pose& frame_from_world, const ImageRgb8& rgb,
                                  const DepthMap& depth_map, const FusionParams& params, int threads = 1);

void save_color_checkpoint(const std::filesystem::path& path, const ColorTexture& texture);
ColorTexture load_color_checkpoint(const std::filesystem::path& path);

}  // namespace texmesh
