#pragma once

#include "texmesh/camera.hpp"
#include "texmesh/image.hpp"
#include "texmesh/label_prop.hpp"
#include "texmesh/semantic_fusion.hpp"
#include "texmesh/sparse_texture.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace texmesh {

// Per-class pixel counts with an extra trailing column for pixels the
// prediction left unlabeled (counted as misses, never as false positives).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);

  void add(const ImageU8& prediction, const ImageU8& ground_truth, int ignore_label = kUnlabeled);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  int classes() const { return classes_; }
  std::uint64_t count(int gt, int pred) const { return counts_[static_cast<std::size_t>(gt) * (classes_ + 1) + pred]; }
  std::uint64_t unpredicted(int gt) const { return counts_[static_cast<std::size_t>(gt) * (classes_ + 1) + classes_]; }
  std::uint64_t total() const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;  // classes x (classes + 1)
};

struct IoUReport {
  std::map<int, double> per_class;          // classes present in GT or prediction
  std::map<int, std::uint64_t> gt_pixels;   // GT pixel count per class
  double mean = 0.0;                        // unweighted mean over GT-present classes
  std::uint64_t evaluated_pixels = 0;
};

IoUReport iou(const ConfusionMatrix& matrix);

// Table-style text rendering (one column per class plus the mean).
std::string format_iou_table(const IoUReport& report, const std::vector<std::string>& class_names);
std::string iou_report_json(const IoUReport& report, const std::vector<std::string>& class_names);

struct EvalFrame {
  int id = -1;
  CameraModel model;
  Pose frame_from_world = Pose::Identity();
  ImageU8 gt_labels;
};

// Renders the fused argmax labels into every ground-truth frame (p_min = 0,
// uncovered pixels ignored) and aggregates the confusion across frames.
IoUReport evaluate_backprojection(const TexturedMesh& mesh, const SparseSemanticTexture& store,
                                  const std::vector<EvalFrame>& frames, int ignore_label = kUnlabeled,
                                  int threads = 1);

struct RobustnessInputs {
  const TexturedMesh* mesh = nullptr;
  const TexelTable* table = nullptr;
  int class_count = 0;
  Trajectory trajectory;                     // world <- camera, noise target
  std::vector<CameraModel> models;           // per frame
  std::vector<SegmentationResult> segs;      // fusion input per frame
  std::vector<ImageU8> gt_labels;            // evaluation target per frame
  FusionParams fusion;
  float decommit_threshold = 0.1f;
  int sweep_every = 1;
  double max_translation = 0.5;   // meters at level 1
  double max_rotation_deg = 5.0;  // degrees at level 1
  int threads = 1;
};

struct RobustnessLevel {
  double level = 0.0;
  IoUReport report;
};

// Re-fuses the scene with pose noise scaled to each level and evaluates the
// back-projected IoU against the unperturbed ground truth. Deterministic for
// a fixed seed; level 0 reproduces the noise-free result exactly.
std::vector<RobustnessLevel> robustness_sweep(const RobustnessInputs& inputs,
                                              const std::vector<double>& levels, std::uint64_t seed);

}  // namespace texmesh
