#pragma once

#include "texmesh/camera.hpp"
#include "texmesh/image.hpp"
#include "texmesh/mesh_atlas.hpp"
#include "texmesh/semantic_fusion.hpp"
#include "texmesh/sparse_texture.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace texmesh {

// Ignore index used by segmentation trainers.
constexpr std::uint8_t kUnlabeled = 255;

struct PseudoGroundTruth {
  ImageU8 labels;  // class ids, kUnlabeled where nothing confident was fused
  int source_frame = -1;
  double p_min = 0.0;
};

// Reprojects the fused semantics into a camera frame. Pixels whose texel
// probability falls below p_min, or that see no mesh, stay Unlabeled.
PseudoGroundTruth render_pseudo_gt(const TexturedMesh& mesh, const SparseSemanticTexture& store,
                                   const CameraModel& model, const Pose& frame_from_world, double p_min,
                                   int frame_id = -1, int threads = 1);

struct InconsistencyReport {
  int frame_id = -1;
  double gamma = 0.0;               // confidence-weighted disagreement
  std::size_t evaluated_pixels = 0; // non-Unlabeled pseudo-GT pixels
  std::size_t consistent_pixels = 0;
  std::optional<double> consistent_fraction;  // empty when nothing was evaluated
};

// gamma = sum of P* over pixels where the frame's label disagrees with the
// pseudo ground truth; Unlabeled pixels are skipped.
InconsistencyReport inconsistency(const SegmentationResult& seg, const PseudoGroundTruth& pgt);

enum class SelectionMode { kWorse, kBest };

struct SelectionParams {
  double fraction = 0.05;
  int min_spacing = 10;  // frames
  SelectionMode mode = SelectionMode::kWorse;
  // Best mode only: frames with an inconsistent-pixel share outside
  // [min_inconsistent, 1] are ignored.
  double best_min_inconsistent = 0.02;
};

// Greedy frame selection: worse mode walks gamma descending, best mode gamma
// ascending over the filtered set; a frame within min_spacing of an already
// selected one is skipped. Ties break on the frame id.
std::vector<int> select_frames(const std::vector<InconsistencyReport>& reports,
                               const SelectionParams& params);

struct ManifestMeta {
  int iteration = 0;
  double p_min = 0.8;
  std::string selection_mode = "worse";
  double fraction = 0.05;
  bool mix_original_training_set = true;  // recommended anti-forgetting mix
};

// Writes one indexed-color label PNG per selected frame plus a manifest:
// a one-line JSON header followed by `<rgb_path>\t<label_path>` lines.
// Returns the manifest path.
std::filesystem::path emit_training_manifest(const std::vector<int>& selection,
                                             const std::map<int, PseudoGroundTruth>& pseudo_gt,
                                             const std::map<int, std::string>& rgb_paths,
                                             const std::vector<Rgb8>& palette,
                                             const std::filesystem::path& out_dir,
                                             const ManifestMeta& meta);

// One frame's inputs to a propagation round.
struct RoundFrame {
  int id = -1;
  CameraModel model;
  Pose frame_from_world = Pose::Identity();
  SegmentationResult seg;
  std::string rgb_path;
};

struct RoundParams {
  FusionParams fusion;
  SelectionParams selection;
  int class_count = 0;
  double p_min = 0.8;
  int sweep_every = 1;  // decommit cadence in frames; 0 disables sweeps
  float decommit_threshold = 0.1f;
  int iteration = 0;
  int threads = 1;
  std::filesystem::path out_dir;
};

struct RoundReport {
  std::vector<InconsistencyReport> reports;
  std::vector<int> selected;
  double mean_gamma = 0.0;
  std::filesystem::path manifest_path;
  std::filesystem::path checkpoint_path;
};

// One fuse -> score -> select -> emit pass over all frames, starting from an
// empty store. Re-running with retrained segmentations is the next EM round.
RoundReport propagation_round(const TexturedMesh& mesh, const TexelTable& table,
                              const std::vector<RoundFrame>& frames, const std::vector<Rgb8>& palette,
                              const RoundParams& params);

}  // namespace texmesh
