#include "texmesh/camera.hpp"

#include "texmesh/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace texmesh {

std::optional<Projection> project(const Vec3& p_world, const CameraModel& model,
                                  const Pose& frame_from_world) {
  const Vec3 p = frame_from_world * p_world;
  if (p.z() <= 0.0) return std::nullopt;
  return Projection{Vec2(model.fx * p.x() / p.z() + model.cx, model.fy * p.y() / p.z() + model.cy),
                    p.z()};
}

namespace {

constexpr double kNearPlane = 1e-4;

struct ClipVertex {
  Vec3 cam;   // camera-frame position
  Vec2f uv;
};

// Clips a camera-space triangle against z >= kNearPlane. Attributes are
// interpolated linearly in 3D, which is exact for affine quantities.
int clip_near(const ClipVertex in[3], ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool ain = a.cam.z() >= kNearPlane;
    const bool bin = b.cam.z() >= kNearPlane;
    if (ain) out[n++] = a;
    if (ain != bin) {
      const double t = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      ClipVertex v;
      v.cam = a.cam + t * (b.cam - a.cam);
      v.uv = a.uv + static_cast<float>(t) * (b.uv - a.uv);
      out[n++] = v;
    }
  }
  return n;
}

struct RasterTarget {
  Image<float>* depth = nullptr;
  Image<std::uint32_t>* face = nullptr;
  Image<Vec2f>* uv = nullptr;
};

// Edge zero-set ownership: accept boundary pixels on "top/left" edges only,
// so a pixel center on a shared edge is written by exactly one triangle.
inline bool edge_accepts_zero(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return dy > 0.0 || (dy == 0.0 && dx < 0.0);
}

void raster_triangle(const ClipVertex& v0, const ClipVertex& v1, const ClipVertex& v2,
                     const CameraModel& model, std::uint32_t face_id, const RasterTarget& target,
                     int row_begin, int row_end) {
  Vec2 s[3];
  double z[3];
  Vec2f uv[3];
  const ClipVertex* verts[3] = {&v0, &v1, &v2};
  for (int i = 0; i < 3; ++i) {
    const Vec3& c = verts[i]->cam;
    s[i] = Vec2(model.fx * c.x() / c.z() + model.cx, model.fy * c.y() / c.z() + model.cy);
    z[i] = c.z();
    uv[i] = verts[i]->uv;
  }

  double area2 = orient2d(s[0], s[1], s[2]);
  if (std::abs(area2) < 1e-14) return;
  if (area2 < 0.0) {  // no backface culling; normalize winding instead
    std::swap(s[1], s[2]);
    std::swap(z[1], z[2]);
    std::swap(uv[1], uv[2]);
    area2 = -area2;
  }

  const bool zero_ok[3] = {edge_accepts_zero(s[1], s[2]), edge_accepts_zero(s[2], s[0]),
                           edge_accepts_zero(s[0], s[1])};

  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({s[0].x(), s[1].x(), s[2].x()}) - 0.5)));
  const int x1 = std::min(model.width - 1,
                          static_cast<int>(std::ceil(std::max({s[0].x(), s[1].x(), s[2].x()}))));
  const int y0 = std::max(row_begin,
                          static_cast<int>(std::floor(std::min({s[0].y(), s[1].y(), s[2].y()}) - 0.5)));
  const int y1 = std::min(row_end - 1,
                          static_cast<int>(std::ceil(std::max({s[0].y(), s[1].y(), s[2].y()}))));

  const double iz[3] = {1.0 / z[0], 1.0 / z[1], 1.0 / z[2]};
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x + 0.5, y + 0.5);
      const double e[3] = {orient2d(s[1], s[2], p), orient2d(s[2], s[0], p), orient2d(s[0], s[1], p)};
      bool inside = true;
      for (int k = 0; k < 3 && inside; ++k) inside = e[k] > 0.0 || (e[k] == 0.0 && zero_ok[k]);
      if (!inside) continue;

      const double l0 = e[0] / area2;
      const double l1 = e[1] / area2;
      const double l2 = e[2] / area2;
      const double inv_z = l0 * iz[0] + l1 * iz[1] + l2 * iz[2];
      const float depth = static_cast<float>(1.0 / inv_z);
      float& stored = target.depth->at(x, y);
      if (depth >= stored) continue;
      stored = depth;
      if (target.face) target.face->at(x, y) = face_id;
      if (target.uv) {
        const double w0 = l0 * iz[0] / inv_z;
        const double w1 = l1 * iz[1] / inv_z;
        const double w2 = l2 * iz[2] / inv_z;
        target.uv->at(x, y) = (w0 * uv[0].cast<double>() + w1 * uv[1].cast<double>() +
                               w2 * uv[2].cast<double>())
                                  .cast<float>();
      }
    }
  }
}

void render_mesh(const TexturedMesh& mesh, const CameraModel& model, const Pose& frame_from_world,
                 const RasterTarget& target, int threads) {
  // Pre-transform vertices once; rasterize in row bands so threads never
  // touch the same pixel.
  std::vector<Vec3> cam(mesh.positions.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = frame_from_world * mesh.positions[i];

  const bool want_uv = target.uv != nullptr;
  const int rows = model.height;
  const std::size_t bands = std::max(1, threads);
  parallel_for(bands, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t band = begin; band < end; ++band) {
      const int row_begin = static_cast<int>(band * rows / bands);
      const int row_end = static_cast<int>((band + 1) * rows / bands);
      for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        ClipVertex in[3];
        for (int i = 0; i < 3; ++i) {
          in[i].cam = cam[tri[i]];
          in[i].uv = want_uv ? Vec2f(mesh.uvs[tri[i]].cast<float>()) : Vec2f::Zero();
        }
        if (in[0].cam.z() < kNearPlane && in[1].cam.z() < kNearPlane && in[2].cam.z() < kNearPlane) {
          continue;
        }
        ClipVertex clipped[4];
        const int n = clip_near(in, clipped);
        for (int k = 0; k + 2 < n; ++k) {
          raster_triangle(clipped[0], clipped[k + 1], clipped[k + 2], model,
                          static_cast<std::uint32_t>(f), target, row_begin, row_end);
        }
      }
    }
  });
}

}  // namespace

DepthMap render_depth(const TexturedMesh& mesh, const CameraModel& model, const Pose& frame_from_world,
                      int threads) {
  DepthMap map;
  map.depth = Image<float>(model.width, model.height, kNoDepth);
  RasterTarget target;
  target.depth = &map.depth;
  render_mesh(mesh, model, frame_from_world, target, threads);
  return map;
}

RenderBuffers render_attributes(const TexturedMesh& mesh, const CameraModel& model,
                                const Pose& frame_from_world, int threads) {
  RenderBuffers buffers;
  buffers.depth = Image<float>(model.width, model.height, kNoDepth);
  buffers.face = Image<std::uint32_t>(model.width, model.height, kNoFace);
  buffers.uv = Image<Vec2f>(model.width, model.height, Vec2f::Zero());
  RasterTarget target;
  target.depth = &buffers.depth;
  target.face = &buffers.face;
  target.uv = &buffers.uv;
  render_mesh(mesh, model, frame_from_world, target, threads);
  return buffers;
}

bool visible(double texel_depth, const Vec2& pixel, const DepthMap& depth_map, double bias) {
  const int x = static_cast<int>(std::floor(pixel.x()));
  const int y = static_cast<int>(std::floor(pixel.y()));
  if (!depth_map.depth.contains(x, y)) return false;
  const float stored = depth_map.depth.at(x, y);
  if (stored == kNoDepth) return false;
  return texel_depth <= static_cast<double>(stored) + bias;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trajectory: cannot open: " + path.string());
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id;
    double tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> id >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error("trajectory: malformed line '" + line + "' in " + path.string());
    }
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (q.norm() < 1e-9) throw std::runtime_error("trajectory: zero quaternion in " + path.string());
    q.normalize();
    Pose pose = Pose::Identity();
    pose.linear() = q.toRotationMatrix();
    pose.translation() = Vec3(tx, ty, tz);
    traj.ids.push_back(id);
    traj.world_from_camera.push_back(pose);
  }
  return traj;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trajectory: cannot open for write: " + path.string());
  char buf[256];
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const Pose& pose = trajectory.world_from_camera[i];
    const Eigen::Quaterniond q(pose.rotation());
    const Vec3& t = pose.translation();
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", trajectory.ids[i],
                  t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

namespace {

Vec3 sample_unit_vector(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    const Vec3 v(u(rng), u(rng), u(rng));
    const double n2 = v.squaredNorm();
    if (n2 > 1e-6 && n2 <= 1.0) return v / std::sqrt(n2);
  }
}

}  // namespace

Trajectory add_pose_noise(const Trajectory& trajectory, double max_translation, double max_rotation_deg,
                          std::uint64_t seed) {
  if (max_translation <= 0.0 && max_rotation_deg <= 0.0) return trajectory;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Trajectory out = trajectory;
  for (Pose& pose : out.world_from_camera) {
    if (max_translation > 0.0) {
      const Vec3 dir = sample_unit_vector(rng);
      const double radius = max_translation * std::cbrt(u01(rng));
      pose.translation() += radius * dir;
    }
    if (max_rotation_deg > 0.0) {
      const Vec3 axis = sample_unit_vector(rng);
      const double angle = max_rotation_deg * std::numbers::pi / 180.0 * u01(rng);
      pose.linear() = pose.rotation() * Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    }
  }
  return out;
}

}  // namespace texmesh
