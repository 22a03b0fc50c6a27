#include "support/fixtures.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace texmesh::testutil {

void TriScene::add_tri(const Vec3& a, const Vec3& b, const Vec3& c, int class_id) {
  tris.push_back({a, b, c});
  cls.push_back(class_id);
}

void TriScene::add_quad(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, int class_id) {
  add_tri(p0, p1, p2, class_id);
  add_tri(p0, p2, p3, class_id);
}

void TriScene::add_box(const Vec3& lo, const Vec3& hi, int class_id, bool with_top) {
  const Vec3 d = hi - lo;
  const Vec3 x(d.x(), 0, 0), y(0, d.y(), 0), z(0, 0, d.z());
  add_quad(lo, lo + x, lo + x + z, lo + z, class_id);                  // y = lo (front, normal -y)
  add_quad(lo + y + x, lo + y, lo + y + z, lo + y + x + z, class_id);  // y = hi (back, normal +y)
  add_quad(lo + y, lo, lo + z, lo + y + z, class_id);                  // x = lo (normal -x)
  add_quad(lo + x, lo + x + y, lo + x + y + z, lo + x + z, class_id);  // x = hi (normal +x)
  if (with_top) add_quad(lo + z, lo + x + z, lo + x + y + z, lo + y + z, class_id);
}

std::optional<TriScene::Hit> TriScene::raycast(const Vec3& origin, const Vec3& dir, double t_min,
                                               double t_max) const {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    // Moeller-Trumbore
    const Vec3& a = tris[i][0];
    const Vec3 e1 = tris[i][1] - a;
    const Vec3 e2 = tris[i][2] - a;
    const Vec3 pvec = dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14) continue;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = origin - a;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < -1e-12 || u > 1.0 + 1e-12) continue;
    const Vec3 qvec = tvec.cross(e1);
    const double v = dir.dot(qvec) * inv_det;
    if (v < -1e-12 || u + v > 1.0 + 1e-12) continue;
    const double t = e2.dot(qvec) * inv_det;
    if (t < t_min || t > t_max) continue;
    if (!best || t < best->t) best = Hit{t, static_cast<int>(i)};
  }
  return best;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(world_up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitX());
  right.normalize();
  const Vec3 down = forward.cross(right);  // +y is image-down

  Pose pose = Pose::Identity();
  Mat3 rot;
  rot.col(0) = right;
  rot.col(1) = down;
  rot.col(2) = forward;
  pose.linear() = rot;
  pose.translation() = eye;
  return pose;  // world <- camera
}

namespace {

Palette make_palette(int class_count, const std::vector<std::string>& names) {
  Palette palette;
  palette.colors.resize(class_count);
  palette.names.resize(class_count);
  for (int i = 0; i < class_count; ++i) {
    palette.colors[i] = Rgb8{static_cast<std::uint8_t>((37 * (i + 1)) % 256),
                             static_cast<std::uint8_t>((91 * (i + 3)) % 256),
                             static_cast<std::uint8_t>((53 * (i + 7)) % 256)};
    palette.names[i] = i < static_cast<int>(names.size()) ? names[i] : "spare" + std::to_string(i);
  }
  return palette;
}

SceneFixture finish_fixture(TriScene scene, int class_count, const std::vector<std::string>& names,
                            int texture_size, const CameraModel& model, Trajectory trajectory) {
  SceneFixture fixture;
  fixture.scene = std::move(scene);
  fixture.class_count = class_count;
  fixture.palette = make_palette(class_count, names);
  fixture.model = model;
  fixture.trajectory = std::move(trajectory);
  fixture.face_class = fixture.scene.cls;

  // Deduplicate scene corners into a mesh, then atlas it. Atlas generation
  // preserves face order, keeping face_class aligned.
  TexturedMesh flat;
  std::map<std::array<long long, 3>, std::uint32_t> index;
  auto key_of = [](const Vec3& p) {
    return std::array<long long, 3>{static_cast<long long>(std::llround(p.x() * 1e7)),
                                    static_cast<long long>(std::llround(p.y() * 1e7)),
                                    static_cast<long long>(std::llround(p.z() * 1e7))};
  };
  for (const auto& tri : fixture.scene.tris) {
    std::array<std::uint32_t, 3> face;
    for (int i = 0; i < 3; ++i) {
      const auto key = key_of(tri[i]);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, static_cast<std::uint32_t>(flat.positions.size())).first;
        flat.positions.push_back(tri[i]);
      }
      face[i] = it->second;
    }
    flat.faces.push_back(face);
  }
  flat.recompute_vertex_normals();
  fixture.mesh = generate_uv_atlas(flat, texture_size);
  return fixture;
}

}  // namespace

SceneFixture make_box_room(int texture_size, int views, int image_width, int image_height) {
  TriScene scene;
  const Vec3 lo(0, 0, 0), hi(4, 3, 2.5);
  // Interior-facing room shell.
  scene.add_quad(lo, Vec3(hi.x(), 0, 0), Vec3(hi.x(), hi.y(), 0), Vec3(0, hi.y(), 0), 0);  // floor, +z
  scene.add_quad(Vec3(0, 0, hi.z()), Vec3(0, hi.y(), hi.z()), hi, Vec3(hi.x(), 0, hi.z()), 1);  // ceiling
  scene.add_quad(lo, Vec3(0, 0, hi.z()), Vec3(hi.x(), 0, hi.z()), Vec3(hi.x(), 0, 0), 2);  // y=0 wall
  scene.add_quad(Vec3(hi.x(), hi.y(), 0), Vec3(hi.x(), hi.y(), hi.z()), Vec3(0, hi.y(), hi.z()),
                 Vec3(0, hi.y(), 0), 2);                                                   // y=hi wall
  scene.add_quad(Vec3(0, hi.y(), 0), Vec3(0, hi.y(), hi.z()), Vec3(0, 0, hi.z()), lo, 2);  // x=0 wall
  scene.add_quad(Vec3(hi.x(), 0, 0), Vec3(hi.x(), 0, hi.z()), Vec3(hi.x(), hi.y(), hi.z()),
                 Vec3(hi.x(), hi.y(), 0), 2);  // x=hi wall
  // Partition: occluder reaching partway across the room.
  scene.add_quad(Vec3(2.0, 0.0, 0.0), Vec3(2.0, 0.0, 2.0), Vec3(2.0, 1.8, 2.0), Vec3(2.0, 1.8, 0.0), 3);

  CameraModel model;
  model.width = image_width;
  model.height = image_height;
  model.fx = model.fy = 0.6 * image_width;
  model.cx = image_width / 2.0;
  model.cy = image_height / 2.0;

  Trajectory traj;
  const Vec3 center(2.0, 1.5, 1.25);
  for (int i = 0; i < views; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / views;
    const Vec3 eye = center + Vec3(0.9 * std::cos(angle), 0.7 * std::sin(angle), 0.15 * std::sin(3 * angle));
    const Vec3 target = center + Vec3(3.0 * std::cos(angle), 3.0 * std::sin(angle), 0.0);
    traj.ids.push_back(i);
    traj.world_from_camera.push_back(look_at(eye, target));
  }
  return finish_fixture(std::move(scene), 6, {"floor", "ceiling", "wall", "partition"}, texture_size,
                        model, std::move(traj));
}

SceneFixture make_street(int texture_size, int views, int image_width, int image_height) {
  TriScene scene;
  // Road with terrain strips alongside.
  scene.add_quad(Vec3(-5, -4, 0), Vec3(45, -4, 0), Vec3(45, 4, 0), Vec3(-5, 4, 0), 0);
  scene.add_quad(Vec3(-5, -8, 0), Vec3(45, -8, 0), Vec3(45, -4, 0), Vec3(-5, -4, 0), 3);
  scene.add_quad(Vec3(-5, 4, 0), Vec3(45, 4, 0), Vec3(45, 8, 0), Vec3(-5, 8, 0), 3);
  // Building walls facing the street.
  scene.add_quad(Vec3(0, 6, 0), Vec3(40, 6, 0), Vec3(40, 6, 6), Vec3(0, 6, 6), 1);
  scene.add_quad(Vec3(40, -6, 0), Vec3(0, -6, 0), Vec3(0, -6, 6), Vec3(40, -6, 6), 1);
  // Thin poles along both sides.
  for (int i = 0; i < 6; ++i) {
    const double x = 6.0 + 5.5 * i;
    const double y = (i % 2 == 0) ? -3.0 : 3.0;
    scene.add_box(Vec3(x - 0.1, y - 0.1, 0.0), Vec3(x + 0.1, y + 0.1, 3.0), 2);
  }

  CameraModel model;
  model.width = image_width;
  model.height = image_height;
  model.fx = model.fy = 0.625 * image_width;
  model.cx = image_width / 2.0;
  model.cy = image_height / 2.0;

  Trajectory traj;
  for (int i = 0; i < views; ++i) {
    const double x = 1.0 + 36.0 * i / std::max(1, views - 1);
    const Vec3 eye(x, (i % 2 == 0) ? -1.0 : 1.0, 1.6);
    const Vec3 target(x + 6.0, (i % 3 - 1) * 2.5, 1.4);
    traj.ids.push_back(i);
    traj.world_from_camera.push_back(look_at(eye, target));
  }
  return finish_fixture(std::move(scene), 24, {"road", "building", "pole", "terrain"}, texture_size,
                        model, std::move(traj));
}

ImageU8 raycast_labels(const SceneFixture& fixture, const Pose& world_from_camera) {
  const CameraModel& m = fixture.model;
  ImageU8 labels(m.width, m.height, 255);
  const Vec3 origin = world_from_camera.translation();
  const Mat3 rot = world_from_camera.rotation();
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const Vec3 dir_cam((x + 0.5 - m.cx) / m.fx, (y + 0.5 - m.cy) / m.fy, 1.0);
      const auto hit = fixture.scene.raycast(origin, rot * dir_cam);
      if (hit) labels.at(x, y) = static_cast<std::uint8_t>(fixture.scene.cls[hit->tri]);
    }
  }
  return labels;
}

Image<float> raycast_depth(const TriScene& scene, const CameraModel& model, const Pose& frame_from_world) {
  Image<float> depth(model.width, model.height, kNoDepth);
  const Pose world_from_frame = frame_from_world.inverse();
  const Vec3 origin = world_from_frame.translation();
  const Mat3 rot = world_from_frame.rotation();
  for (int y = 0; y < model.height; ++y) {
    for (int x = 0; x < model.width; ++x) {
      // Unnormalized direction with unit z: the ray parameter IS the z-depth.
      const Vec3 dir_cam((x + 0.5 - model.cx) / model.fx, (y + 0.5 - model.cy) / model.fy, 1.0);
      const auto hit = scene.raycast(origin, rot * dir_cam, 1e-6);
      if (hit) depth.at(x, y) = static_cast<float>(hit->t);
    }
  }
  return depth;
}

SegmentationResult seg_from_labels(const ImageU8& labels, float confidence) {
  SegmentationResult seg;
  seg.labels = ImageU16(labels.width, labels.height, 0);
  seg.confidence = ImageF(labels.width, labels.height, 0.0f);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    if (labels.data[i] == 255) continue;  // unlabeled pixels carry no confidence
    seg.labels.data[i] = labels.data[i];
    seg.confidence.data[i] = confidence;
  }
  return seg;
}

SegmentationResult corrupt_seg(const ImageU8& labels, int class_count, double rate, float confidence,
                               std::mt19937_64& rng) {
  SegmentationResult seg = seg_from_labels(labels, confidence);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> uclass(0, class_count - 1);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    if (labels.data[i] == 255) continue;
    if (u01(rng) < rate) seg.labels.data[i] = static_cast<std::uint16_t>(uclass(rng));
  }
  return seg;
}

OrganizedScan scan_of_scene(const TriScene& scene, const Pose& world_from_sensor, int rings, int columns,
                            double min_elevation_deg, double max_elevation_deg) {
  OrganizedScan scan(rings, columns);
  scan.world_from_sensor = world_from_sensor;
  for (int r = 0; r < rings; ++r) {
    scan.ring_elevations[r] = (min_elevation_deg +
                               (max_elevation_deg - min_elevation_deg) * r / std::max(1, rings - 1)) *
                              std::numbers::pi / 180.0;
  }
  const Vec3 origin = world_from_sensor.translation();
  const Mat3 rot = world_from_sensor.rotation();
  for (int r = 0; r < rings; ++r) {
    for (int c = 0; c < columns; ++c) {
      const Vec3 dir = rot * scan.direction(r, c);  // unit length
      if (const auto hit = scene.raycast(origin, dir, 1e-6, 200.0)) {
        scan.range_at(r, c) = static_cast<float>(hit->t);
      }
    }
  }
  return scan;
}

OrganizedScan make_plane_scan(double sensor_height, int rings, int columns) {
  OrganizedScan scan(rings, columns);
  Pose pose = Pose::Identity();
  pose.translation() = Vec3(0, 0, sensor_height);
  scan.world_from_sensor = pose;
  for (int r = 0; r < rings; ++r) {
    // Steep to shallow downward rays.
    scan.ring_elevations[r] = (-75.0 + 60.0 * r / std::max(1, rings - 1)) * std::numbers::pi / 180.0;
  }
  for (int r = 0; r < rings; ++r) {
    const double s = std::sin(scan.ring_elevations[r]);
    if (s >= -1e-9) continue;  // parallel or upward, never hits the floor
    for (int c = 0; c < columns; ++c) {
      scan.range_at(r, c) = static_cast<float>(-sensor_height / s);
    }
  }
  return scan;
}

LocalMesh make_icosphere(int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<std::uint32_t, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::uint64_t, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const std::uint64_t key = edge_key(a, b);
      auto it = midpoint.find(key);
      if (it == midpoint.end()) {
        it = midpoint.emplace(key, static_cast<std::uint32_t>(verts.size())).first;
        verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      }
      return it->second;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const std::uint32_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  LocalMesh mesh;
  mesh.vertices.resize(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices[i].position = verts[i];
  for (auto f : faces) {
    // Orient so the (v1-v2)x(v3-v2) normal points outward (radial).
    const Vec3 n = (verts[f[0]] - verts[f[1]]).cross(verts[f[2]] - verts[f[1]]);
    const Vec3 centroid = (verts[f[0]] + verts[f[1]] + verts[f[2]]) / 3.0;
    if (n.dot(centroid) < 0.0) std::swap(f[1], f[2]);
    mesh.triangles.push_back(f);
  }
  return mesh;
}

std::vector<Vec3> random_ring(std::mt19937_64& rng, int points, double noise) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> ring(points);
  for (int i = 0; i < points; ++i) {
    // Quarter-turn arc: dense enough that smooth stretches actually simplify.
    const double az = 0.5 * std::numbers::pi * i / points;
    const double radius = 5.0 + 1.5 * std::sin(3.0 * az) + noise * u(rng);
    ring[i] = Vec3(radius * std::cos(az), radius * std::sin(az), 0.2 * std::sin(5.0 * az) + noise * u(rng));
  }
  return ring;
}

TexturedMesh random_front_mesh(std::mt19937_64& rng, int triangles) {
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(-1.5, 1.5), uz(2.0, 6.0);
  TexturedMesh mesh;
  for (int i = 0; i < triangles; ++i) {
    const Vec3 base(ux(rng), uy(rng), uz(rng));
    std::array<std::uint32_t, 3> face;
    for (int k = 0; k < 3; ++k) {
      face[k] = static_cast<std::uint32_t>(mesh.positions.size());
      mesh.positions.push_back(base + Vec3(0.5 * ux(rng), 0.5 * uy(rng), 0.25 * ux(rng)));
    }
    mesh.faces.push_back(face);
  }
  mesh.recompute_vertex_normals();
  return mesh;
}

}  // namespace texmesh::testutil
