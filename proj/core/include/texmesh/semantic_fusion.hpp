#pragma once

#include "texmesh/camera.hpp"
#include "texmesh/image.hpp"
#include "texmesh/mesh_atlas.hpp"
#include "texmesh/sparse_texture.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace texmesh {

// Per-pixel argmax label L and its confidence P*.
struct SegmentationResult {
  ImageU16 labels;
  ImageF confidence;
};

// Dense per-pixel class distribution, texel-major and class-minor.
struct ProbabilityMap {
  int width = 0;
  int height = 0;
  int classes = 0;
  std::vector<float> values;  // (y*width + x)*classes + c

  float at(int x, int y, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * classes + c];
  }
};

// Collapses the full distribution to (argmax label, max probability); ties go
// to the lowest class index.
SegmentationResult argmax_reduce(const ProbabilityMap& prob_map);

struct FusionParams {
  double d_min = 0.0;    // meters; full weight up to here
  double d_max = 100.0;  // meters; weight reaches zero here
  double depth_bias = 1e-3;
  bool slope_scaled_bias = true;  // widen the bias with surface slant
};

// Linear distance fall-off: 1 below d_min, 0 at/after d_max.
double distance_weight(double d, const FusionParams& params);

// Visibility bias for a texel at depth d with unit normal n seen along the
// unit ray dir; combines the depth-proportional base with a slope term that
// covers the depth variation across one pixel footprint.
double visibility_bias(double depth, const Vec3f& normal, const Vec3& ray_dir, const CameraModel& model,
                       const FusionParams& params);

struct FrameFusionStats {
  std::size_t fused = 0;
  std::size_t occluded = 0;
  std::size_t out_of_view = 0;  // behind the camera or outside the image
  std::size_t zero_weight = 0;
};

// Fuses one frame's argmax segmentation into the store: for every visible
// texel, S[texel, L] += w * P* and W[texel] += w, with nearest-pixel label
// lookup and the distance weight w.
FrameFusionStats fuse_semantic_frame(SparseSemanticTexture& store, const TexelTable& table,
                                     const CameraModel& model, const Pose& frame_from_world,
                                     const DepthMap& depth_map, const SegmentationResult& seg,
                                     const FusionParams& params, int threads = 1);

// S(texel, cls) / W(texel); nullopt while the texel is unobserved.
std::optional<double> texel_probability(const SparseSemanticTexture& store, int x, int y, int cls);

struct FusedClass {
  int cls = 0;
  double probability = 0.0;  // mass of the winning class normalized by W
};

// Class with the largest accumulated mass (ties to the lowest id); nullopt
// while the texel is unobserved.
std::optional<FusedClass> fused_argmax(const SparseSemanticTexture& store, int x, int y);

}  // namespace texmesh
