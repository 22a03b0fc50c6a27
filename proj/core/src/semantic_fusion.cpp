#include "texmesh/semantic_fusion.hpp"

#include "texmesh/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace texmesh {

SegmentationResult argmax_reduce(const ProbabilityMap& prob_map) {
  SegmentationResult out;
  out.labels = ImageU16(prob_map.width, prob_map.height, 0);
  out.confidence = ImageF(prob_map.width, prob_map.height, 0.0f);
  for (int y = 0; y < prob_map.height; ++y) {
    for (int x = 0; x < prob_map.width; ++x) {
      const float* p = &prob_map.values[(static_cast<std::size_t>(y) * prob_map.width + x) * prob_map.classes];
      int best = 0;
      float best_p = p[0];
      for (int c = 1; c < prob_map.classes; ++c) {
        if (p[c] > best_p) {  // strict: ties keep the lowest class index
          best_p = p[c];
          best = c;
        }
      }
      out.labels.at(x, y) = static_cast<std::uint16_t>(best);
      out.confidence.at(x, y) = best_p;
    }
  }
  return out;
}

double distance_weight(double d, const FusionParams& params) {
  if (d <= params.d_min) return 1.0;
  const double w = 1.0 - (d - params.d_min) / (params.d_max - params.d_min);
  return std::clamp(w, 0.0, 1.0);
}

double visibility_bias(double depth, const Vec3f& normal, const Vec3& ray_dir, const CameraModel& model,
                       const FusionParams& params) {
  double bias = params.depth_bias * (1.0 + depth);
  if (params.slope_scaled_bias) {
    // Depth change across one pixel footprint at this slant; standard
    // slope-scaled shadow bias with the grazing angle clamped.
    const double c = std::max(0.1, std::abs(static_cast<double>(normal.cast<double>().dot(ray_dir))));
    const double tan_slope = std::sqrt(std::max(0.0, 1.0 - c * c)) / c;
    const double footprint = depth / std::min(model.fx, model.fy);
    bias += footprint * tan_slope;
  }
  return bias;
}

FrameFusionStats fuse_semantic_frame(SparseSemanticTexture& store, const TexelTable& table,
                                     const CameraModel& model, const Pose& frame_from_world,
                                     const DepthMap& depth_map, const SegmentationResult& seg,
                                     const FusionParams& params, int threads) {
  if (store.resolution() != table.resolution) {
    throw std::invalid_argument("fusion: store resolution differs from texel table");
  }
  if (seg.labels.width != model.width || seg.labels.height != model.height) {
    throw std::invalid_argument("fusion: segmentation size differs from camera model");
  }
  const int class_count = store.class_count();

  FrameFusionStats total;
  std::mutex stats_mutex;
  const Eigen::Matrix<double, 3, 4> tf = frame_from_world.matrix().topRows<3>();

  parallel_for(table.size(), threads, [&](std::size_t begin, std::size_t end) {
    FrameFusionStats stats;
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3 p_world = table.position[i].cast<double>();
      const Vec3 p_cam = tf * p_world.homogeneous();
      if (p_cam.z() <= 0.0) {
        ++stats.out_of_view;
        continue;
      }
      const double depth = p_cam.z();
      const Vec2 pixel(model.fx * p_cam.x() / depth + model.cx, model.fy * p_cam.y() / depth + model.cy);
      const int px = static_cast<int>(std::floor(pixel.x()));
      const int py = static_cast<int>(std::floor(pixel.y()));
      if (px < 0 || py < 0 || px >= model.width || py >= model.height) {
        ++stats.out_of_view;
        continue;
      }

      const double bias = visibility_bias(depth, table.normal[i], p_cam / depth, model, params);
      if (!visible(depth, pixel, depth_map, bias)) {
        ++stats.occluded;
        continue;
      }

      const double w = distance_weight(depth, params);
      const int label = seg.labels.at(px, py);
      const float conf = seg.confidence.at(px, py);
      if (w <= 0.0 || !(conf >= 0.0f)) {
        ++stats.zero_weight;
        continue;
      }
      if (label >= class_count) {
        throw std::out_of_range("fusion: label " + std::to_string(label) + " exceeds class count");
      }

      const std::uint32_t tex = table.texel[i];
      const int x = static_cast<int>(tex % table.resolution);
      const int y = static_cast<int>(tex / table.resolution);
      const float delta = static_cast<float>(w) * conf;
      if (delta > 0.0f) store.accumulate(x, y, label, delta);  // zero mass commits no page
      store.add_weight(x, y, static_cast<float>(w));
      ++stats.fused;
    }
    std::lock_guard<std::mutex> lock(stats_mutex);
    total.fused += stats.fused;
    total.occluded += stats.occluded;
    total.out_of_view += stats.out_of_view;
    total.zero_weight += stats.zero_weight;
  });
  return total;
}

std::optional<double> texel_probability(const SparseSemanticTexture& store, int x, int y, int cls) {
  const float w = store.weight(x, y);
  if (w <= 0.0f) return std::nullopt;
  return static_cast<double>(store.value(x, y, cls)) / w;
}

std::optional<FusedClass> fused_argmax(const SparseSemanticTexture& store, int x, int y) {
  const float w = store.weight(x, y);
  if (w <= 0.0f) return std::nullopt;

  const int tx = x / SparseSemanticTexture::kPageSize;
  const int ty = y / SparseSemanticTexture::kPageSize;
  const std::size_t off =
      static_cast<std::size_t>(y % SparseSemanticTexture::kPageSize) * SparseSemanticTexture::kPageSize +
      (x % SparseSemanticTexture::kPageSize);

  FusedClass best;
  float best_mass = 0.0f;
  for (int c = 0; c < store.class_count(); ++c) {
    const float* page = store.page_data(tx, ty, c);
    if (!page) continue;
    const float s = page[off];
    if (s > best_mass) {
      best_mass = s;
      best.cls = c;
    }
  }
  best.probability = static_cast<double>(best_mass) / w;
  return best;
}

}  // namespace texmesh
