#include "texmesh/color_fusion.hpp"

#include "texmesh/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

namespace texmesh {

ImageRgb8 ColorTexture::to_image() const {
  ImageRgb8 out(resolution, resolution);
  for (std::size_t i = 0; i < weight.size(); ++i) {
    const float* c = &rgb[i * 3];
    out.data[i].r = static_cast<std::uint8_t>(std::clamp(c[0], 0.0f, 1.0f) * 255.0f + 0.5f);
    out.data[i].g = static_cast<std::uint8_t>(std::clamp(c[1], 0.0f, 1.0f) * 255.0f + 0.5f);
    out.data[i].b = static_cast<std::uint8_t>(std::clamp(c[2], 0.0f, 1.0f) * 255.0f + 0.5f);
  }
  return out;
}

ColorWeightTerms color_weight(const Vec3& p_cam, const Vec3& p_world, const Vec3& normal_world,
                              const Vec3& camera_origin_world) {
  ColorWeightTerms terms;
  const double dist2 = p_cam.squaredNorm();
  if (dist2 <= 0.0) return terms;
  terms.dist = 1.0 / dist2;

  const double cos_axis = std::clamp(p_cam.z() / std::sqrt(dist2), 0.0, 1.0);
  terms.vign = cos_axis * cos_axis * cos_axis * cos_axis;

  Vec3 to_camera = camera_origin_world - p_world;
  const double len = to_camera.norm();
  terms.view = len > 0.0 ? std::max(0.0, to_camera.dot(normal_world) / len) : 0.0;

  terms.total = terms.dist * terms.vign * terms.view;
  return terms;
}

namespace {

// Bilinear fetch with pixel centers at (i+0.5, j+0.5); edges clamp.
Eigen::Vector3f sample_bilinear(const ImageRgb8& image, const Vec2& pixel) {
  const double fx = std::clamp(pixel.x() - 0.5, 0.0, static_cast<double>(image.width - 1));
  const double fy = std::clamp(pixel.y() - 0.5, 0.0, static_cast<double>(image.height - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, image.width - 1);
  const int y1 = std::min(y0 + 1, image.height - 1);
  const float ax = static_cast<float>(fx - x0);
  const float ay = static_cast<float>(fy - y0);

  auto fetch = [&](int x, int y) {
    const Rgb8& c = image.at(x, y);
    return Eigen::Vector3f(c.r, c.g, c.b) / 255.0f;
  };
  const Eigen::Vector3f top = (1.0f - ax) * fetch(x0, y0) + ax * fetch(x1, y0);
  const Eigen::Vector3f bottom = (1.0f - ax) * fetch(x0, y1) + ax * fetch(x1, y1);
  return (1.0f - ay) * top + ay * bottom;
}

}  // namespace

FrameFusionStats fuse_color_frame(ColorTexture& texture, const TexelTable& table, const CameraModel& model,
                                  const Pose& frame_from_world, const ImageRgb8& rgb,
                                  const DepthMap& depth_map, const FusionParams& params, int threads) {
  if (texture.resolution != table.resolution) {
    throw std::invalid_argument("color fusion: texture resolution differs from texel table");
  }
  if (rgb.width != model.width || rgb.height != model.height) {
    throw std::invalid_argument("color fusion: image size differs from camera model");
  }

  FrameFusionStats total;
  std::mutex stats_mutex;
  const Eigen::Matrix<double, 3, 4> tf = frame_from_world.matrix().topRows<3>();
  const Vec3 origin = frame_from_world.inverse().translation();

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
      if (pixel.x() < 0.0 || pixel.y() < 0.0 || pixel.x() >= model.width || pixel.y() >= model.height) {
        ++stats.out_of_view;
        continue;
      }
      const double bias = visibility_bias(depth, table.normal[i], p_cam / depth, model, params);
      if (!visible(depth, pixel, depth_map, bias)) {
        ++stats.occluded;
        continue;
      }

      const ColorWeightTerms wt =
          color_weight(p_cam, p_world, table.normal[i].cast<double>(), origin);
      if (wt.total <= 0.0) {
        ++stats.zero_weight;
        continue;
      }

      const Eigen::Vector3f sample = sample_bilinear(rgb, pixel);
      const std::size_t tex = table.texel[i];
      const float w_old = texture.weight[tex];
      const float w_new = w_old + static_cast<float>(wt.total);
      float* c = &texture.rgb[tex * 3];
      for (int k = 0; k < 3; ++k) {
        c[k] = (w_old * c[k] + static_cast<float>(wt.total) * sample[k]) / w_new;
      }
      texture.weight[tex] = w_new;
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

namespace {
constexpr char kColorMagic[8] = {'C', 'T', 'X', 'C', 'H', 'K', '1', '\0'};
}

void save_color_checkpoint(const std::filesystem::path& path, const ColorTexture& texture) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("color checkpoint: cannot open for write: " + path.string());
  out.write(kColorMagic, sizeof(kColorMagic));
  const std::uint32_t res = static_cast<std::uint32_t>(texture.resolution);
  out.write(reinterpret_cast<const char*>(&res), sizeof(res));
  out.write(reinterpret_cast<const char*>(texture.rgb.data()),
            static_cast<std::streamsize>(texture.rgb.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(texture.weight.data()),
            static_cast<std::streamsize>(texture.weight.size() * sizeof(float)));
  if (!out) throw std::runtime_error("color checkpoint: write failed: " + path.string());
}

ColorTexture load_color_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("color checkpoint: cannot open: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kColorMagic, sizeof(kColorMagic)) != 0) {
    throw std::runtime_error("color checkpoint: bad magic in " + path.string());
  }
  std::uint32_t res = 0;
  in.read(reinterpret_cast<char*>(&res), sizeof(res));
  ColorTexture texture(static_cast<int>(res));
  in.read(reinterpret_cast<char*>(texture.rgb.data()),
          static_cast<std::streamsize>(texture.rgb.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(texture.weight.data()),
          static_cast<std::streamsize>(texture.weight.size() * sizeof(float)));
  if (!in) throw std::runtime_error("color checkpoint: truncated file: " + path.string());
  return texture;
}

}  // namespace texmesh
