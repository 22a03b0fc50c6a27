#include "texmesh/label_prop.hpp"

#include "texmesh/parallel.hpp"
#include "texmesh/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace texmesh {

PseudoGroundTruth render_pseudo_gt(const TexturedMesh& mesh, const SparseSemanticTexture& store,
                                   const CameraModel& model, const Pose& frame_from_world, double p_min,
                                   int frame_id, int threads) {
  PseudoGroundTruth pgt;
  pgt.labels = ImageU8(model.width, model.height, kUnlabeled);
  pgt.source_frame = frame_id;
  pgt.p_min = p_min;

  const RenderBuffers buffers = render_attributes(mesh, model, frame_from_world, threads);
  const int res = store.resolution();

  parallel_for(static_cast<std::size_t>(model.height), threads, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (int x = 0; x < model.width; ++x) {
        if (buffers.face.at(x, static_cast<int>(y)) == kNoFace) continue;
        const Vec2f uv = buffers.uv.at(x, static_cast<int>(y));
        const int tx = std::clamp(static_cast<int>(uv.x() * res), 0, res - 1);
        const int ty = std::clamp(static_cast<int>(uv.y() * res), 0, res - 1);
        const auto best = fused_argmax(store, tx, ty);
        if (!best || best->probability < p_min) continue;
        pgt.labels.at(x, static_cast<int>(y)) = static_cast<std::uint8_t>(best->cls);
      }
    }
  });
  return pgt;
}

InconsistencyReport inconsistency(const SegmentationResult& seg, const PseudoGroundTruth& pgt) {
  if (seg.labels.width != pgt.labels.width || seg.labels.height != pgt.labels.height) {
    throw std::invalid_argument("inconsistency: image dimensions differ");
  }
  InconsistencyReport report;
  report.frame_id = pgt.source_frame;
  for (int y = 0; y < pgt.labels.height; ++y) {
    for (int x = 0; x < pgt.labels.width; ++x) {
      const std::uint8_t truth = pgt.labels.at(x, y);
      if (truth == kUnlabeled) continue;
      ++report.evaluated_pixels;
      if (seg.labels.at(x, y) == truth) {
        ++report.consistent_pixels;
      } else {
        report.gamma += seg.confidence.at(x, y);
      }
    }
  }
  if (report.evaluated_pixels > 0) {
    report.consistent_fraction =
        static_cast<double>(report.consistent_pixels) / static_cast<double>(report.evaluated_pixels);
  }
  return report;
}

std::vector<int> select_frames(const std::vector<InconsistencyReport>& reports,
                               const SelectionParams& params) {
  if (reports.empty()) throw std::invalid_argument("select_frames: no reports");
  if (params.fraction <= 0.0 || params.fraction > 1.0) {
    throw std::invalid_argument("select_frames: fraction must be in (0,1]");
  }

  std::vector<const InconsistencyReport*> candidates;
  candidates.reserve(reports.size());
  for (const auto& r : reports) {
    if (params.mode == SelectionMode::kBest) {
      if (!r.consistent_fraction) continue;
      const double inconsistent = 1.0 - *r.consistent_fraction;
      if (inconsistent < params.best_min_inconsistent) continue;
    }
    candidates.push_back(&r);
  }

  const bool worse = params.mode == SelectionMode::kWorse;
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const InconsistencyReport* a, const InconsistencyReport* b) {
                     if (a->gamma != b->gamma) return worse ? a->gamma > b->gamma : a->gamma < b->gamma;
                     return a->frame_id < b->frame_id;
                   });

  const std::size_t target =
      static_cast<std::size_t>(std::ceil(params.fraction * static_cast<double>(reports.size())));
  std::vector<int> selected;
  for (const auto* r : candidates) {
    if (selected.size() >= target) break;
    bool spaced = true;
    for (int id : selected) {
      if (std::abs(id - r->frame_id) < params.min_spacing) {
        spaced = false;
        break;
      }
    }
    if (spaced) selected.push_back(r->frame_id);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::filesystem::path emit_training_manifest(const std::vector<int>& selection,
                                             const std::map<int, PseudoGroundTruth>& pseudo_gt,
                                             const std::map<int, std::string>& rgb_paths,
                                             const std::vector<Rgb8>& palette,
                                             const std::filesystem::path& out_dir,
                                             const ManifestMeta& meta) {
  const std::filesystem::path labels_dir = out_dir / "labels";
  std::filesystem::create_directories(labels_dir);

  nlohmann::json header;
  header["iteration"] = meta.iteration;
  header["p_min"] = meta.p_min;
  header["selection_mode"] = meta.selection_mode;
  header["fraction"] = meta.fraction;
  header["mix_original_training_set"] = meta.mix_original_training_set;
  header["frames"] = selection.size();

  const std::filesystem::path manifest_path = out_dir / "manifest.tsv";
  std::ofstream out(manifest_path, std::ios::binary);  // binary: byte-stable newlines
  if (!out) throw std::runtime_error("manifest: cannot open for write: " + manifest_path.string());
  out << header.dump() << "\n";

  for (int id : selection) {
    const auto pgt = pseudo_gt.find(id);
    const auto rgb = rgb_paths.find(id);
    if (pgt == pseudo_gt.end() || rgb == rgb_paths.end()) {
      throw std::invalid_argument("manifest: frame " + std::to_string(id) + " lacks pseudo-GT or RGB path");
    }
    char name[64];
    std::snprintf(name, sizeof(name), "frame_%06d.png", id);
    const std::filesystem::path label_path = labels_dir / name;
    write_png_indexed(label_path, pgt->second.labels, palette);
    out << rgb->second << "\t" << label_path.string() << "\n";
  }
  if (!out) throw std::runtime_error("manifest: write failed: " + manifest_path.string());
  return manifest_path;
}

RoundReport propagation_round(const TexturedMesh& mesh, const TexelTable& table,
                              const std::vector<RoundFrame>& frames, const std::vector<Rgb8>& palette,
                              const RoundParams& params) {
  if (frames.empty()) throw std::invalid_argument("propagation_round: no frames");
  if (params.class_count <= 0) throw std::invalid_argument("propagation_round: class_count not set");
  std::filesystem::create_directories(params.out_dir);

  // Fuse every frame into a fresh store; carrying mass across rounds would
  // double-count evidence.
  SparseSemanticTexture store(table.resolution, params.class_count, params.decommit_threshold);

  int since_sweep = 0;
  for (const RoundFrame& frame : frames) {
    const DepthMap depth = render_depth(mesh, frame.model, frame.frame_from_world, params.threads);
    fuse_semantic_frame(store, table, frame.model, frame.frame_from_world, depth, frame.seg,
                        params.fusion, params.threads);
    if (params.sweep_every > 0 && ++since_sweep >= params.sweep_every) {
      store.decommit_sweep();
      since_sweep = 0;
    }
  }

  RoundReport report;
  std::map<int, PseudoGroundTruth> pgt_by_frame;
  std::map<int, std::string> rgb_by_frame;
  for (const RoundFrame& frame : frames) {
    PseudoGroundTruth pgt = render_pseudo_gt(mesh, store, frame.model, frame.frame_from_world,
                                             params.p_min, frame.id, params.threads);
    report.reports.push_back(inconsistency(frame.seg, pgt));
    pgt_by_frame.emplace(frame.id, std::move(pgt));
    rgb_by_frame.emplace(frame.id, frame.rgb_path);
  }
  report.mean_gamma = 0.0;
  for (const auto& r : report.reports) report.mean_gamma += r.gamma;
  report.mean_gamma /= static_cast<double>(report.reports.size());

  report.selected = select_frames(report.reports, params.selection);
  if (report.selected.empty()) {
    std::fprintf(stderr, "[warn] propagation round %d: selection is empty after filters\n",
                 params.iteration);
  }

  ManifestMeta meta;
  meta.iteration = params.iteration;
  meta.p_min = params.p_min;
  meta.selection_mode = params.selection.mode == SelectionMode::kWorse ? "worse" : "best";
  meta.fraction = params.selection.fraction;
  report.manifest_path =
      emit_training_manifest(report.selected, pgt_by_frame, rgb_by_frame, palette, params.out_dir, meta);

  report.checkpoint_path = params.out_dir / "semantic.stx";
  store.save_checkpoint(report.checkpoint_path);
  return report;
}

}  // namespace texmesh
