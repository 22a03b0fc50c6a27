#include "texmesh/camera.hpp"
#include "texmesh/local_mesh.hpp"
#include "texmesh/mesh_atlas.hpp"
#include "texmesh/scan_simplify.hpp"
#include "texmesh/semantic_fusion.hpp"
#include "texmesh/sparse_texture.hpp"

#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

namespace {

using namespace texmesh;

// Two fronto-parallel sheets filling most of the view; the far one is the
// occluded half of the texel budget.
TexturedMesh bench_mesh(int texture_size) {
  TexturedMesh mesh;
  auto add_quad = [&](double z, double extent) {
    const std::uint32_t base = static_cast<std::uint32_t>(mesh.positions.size());
    mesh.positions.emplace_back(-extent, -extent, z);
    mesh.positions.emplace_back(extent, -extent, z);
    mesh.positions.emplace_back(extent, extent, z);
    mesh.positions.emplace_back(-extent, extent, z);
    mesh.faces.push_back({base, base + 1, base + 2});
    mesh.faces.push_back({base, base + 2, base + 3});
  };
  add_quad(5.0, 4.0);
  add_quad(9.0, 4.0);
  mesh.recompute_vertex_normals();
  return generate_uv_atlas(mesh, texture_size);
}

CameraModel bench_camera() {
  CameraModel model;
  model.width = 640;
  model.height = 480;
  model.fx = model.fy = 525.0;
  model.cx = 320.0;
  model.cy = 240.0;
  return model;
}

SegmentationResult bench_segmentation(const CameraModel& model, int classes) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ucls(0, classes - 1);
  SegmentationResult seg;
  seg.labels = ImageU16(model.width, model.height, 0);
  seg.confidence = ImageF(model.width, model.height, 0.9f);
  for (auto& l : seg.labels.data) l = static_cast<std::uint16_t>(ucls(rng));
  return seg;
}

void BM_FuseSemanticFrame4K(benchmark::State& state) {
  const int texture_size = 4096;
  const int classes = 16;
  const TexturedMesh mesh = bench_mesh(texture_size);
  const TexelTable table = build_texel_table(mesh, texture_size);
  const CameraModel model = bench_camera();
  const Pose frame_from_world = Pose::Identity();
  const DepthMap depth = render_depth(mesh, model, frame_from_world);
  const SegmentationResult seg = bench_segmentation(model, classes);
  const FusionParams params;

  SparseSemanticTexture store(texture_size, classes);
  for (auto _ : state) {
    const auto stats = fuse_semantic_frame(store, table, model, frame_from_world, depth, seg, params);
    benchmark::DoNotOptimize(stats.fused);
  }
  state.counters["texels"] = static_cast<double>(table.size());
}
BENCHMARK(BM_FuseSemanticFrame4K)->Unit(benchmark::kMillisecond);

void BM_RenderDepth(benchmark::State& state) {
  const TexturedMesh mesh = bench_mesh(1024);
  const CameraModel model = bench_camera();
  for (auto _ : state) {
    const DepthMap depth = render_depth(mesh, model, Pose::Identity());
    benchmark::DoNotOptimize(depth.depth.data.data());
  }
}
BENCHMARK(BM_RenderDepth)->Unit(benchmark::kMillisecond);

void BM_DecommitSweep(benchmark::State& state) {
  const int texture_size = 2048;
  const int classes = 24;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ux(0, texture_size - 1), ucls(0, classes - 1);
  for (auto _ : state) {
    state.PauseTiming();
    SparseSemanticTexture store(texture_size, classes, 0.1f);
    for (int i = 0; i < 200000; ++i) {
      const int x = ux(rng), y = ux(rng);
      store.accumulate(x, y, ucls(rng), 0.05f);
      store.add_weight(x, y, 1.0f);
    }
    state.ResumeTiming();
    benchmark::DoNotOptimize(store.decommit_sweep());
  }
}
BENCHMARK(BM_DecommitSweep)->Unit(benchmark::kMillisecond);

void BM_SimplifyScan(benchmark::State& state) {
  OrganizedScan scan(16, 1800);
  scan.ring_elevations = OrganizedScan::vlp16_elevations();
  for (int r = 0; r < scan.rings; ++r) {
    const double s = std::sin(scan.ring_elevations[r]);
    for (int c = 0; c < scan.columns; ++c) {
      // Ground plane below, walls at 30 m to the sides.
      scan.range_at(r, c) = s < -1e-3 ? static_cast<float>(-2.0 / s) : 30.0f;
    }
  }
  for (auto _ : state) {
    const auto rings = simplify_scan(scan, 0.05);
    benchmark::DoNotOptimize(rings.size());
  }
}
BENCHMARK(BM_SimplifyScan)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
