#include "texmesh/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace texmesh {

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * (classes + 1), 0) {
  if (classes <= 0) throw std::invalid_argument("confusion: class count must be positive");
}

void ConfusionMatrix::add(const ImageU8& prediction, const ImageU8& ground_truth, int ignore_label) {
  if (prediction.width != ground_truth.width || prediction.height != ground_truth.height) {
    throw std::invalid_argument("confusion: image dimensions differ");
  }
  for (std::size_t i = 0; i < ground_truth.data.size(); ++i) {
    const int gt = ground_truth.data[i];
    if (gt == ignore_label) continue;
    if (gt >= classes_) throw std::out_of_range("confusion: ground-truth label exceeds class count");
    const int pred = prediction.data[i];
    const int col = (pred == ignore_label || pred >= classes_) ? classes_ : pred;
    ++counts_[static_cast<std::size_t>(gt) * (classes_ + 1) + col];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw std::invalid_argument("confusion: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (const std::uint64_t v : counts_) sum += v;
  return sum;
}

IoUReport iou(const ConfusionMatrix& matrix) {
  const int classes = matrix.classes();
  IoUReport report;
  report.evaluated_pixels = matrix.total();

  std::vector<std::uint64_t> row(classes, 0), col(classes, 0);
  for (int g = 0; g < classes; ++g) {
    for (int p = 0; p <= classes; ++p) row[g] += matrix.count(g, p);
    for (int p = 0; p < classes; ++p) col[p] += matrix.count(g, p);
  }

  double mean = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    if (row[c] == 0 && col[c] == 0) continue;  // absent everywhere: excluded
    const std::uint64_t tp = matrix.count(c, c);
    const std::uint64_t denom = row[c] + col[c] - tp;
    const double score = denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
    report.per_class[c] = score;
    if (row[c] > 0) {
      report.gt_pixels[c] = row[c];
      mean += score;
      ++present;
    }
  }
  report.mean = present > 0 ? mean / present : 0.0;
  return report;
}

std::string format_iou_table(const IoUReport& report, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  char buf[64];
  auto name_of = [&](int c) {
    if (c < static_cast<int>(class_names.size()) && !class_names[c].empty()) return class_names[c];
    return "class" + std::to_string(c);
  };

  std::size_t width = 8;
  for (const auto& [c, _] : report.per_class) width = std::max(width, name_of(c).size() + 2);

  for (const auto& [c, _] : report.per_class) {
    out << std::string(width - name_of(c).size(), ' ') << name_of(c);
  }
  out << "  Mean IoU\n";
  for (const auto& [_, score] : report.per_class) {
    std::snprintf(buf, sizeof(buf), "%*.3f", static_cast<int>(width), score);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%10.4f\n", report.mean);
  out << buf;
  return out.str();
}

std::string iou_report_json(const IoUReport& report, const std::vector<std::string>& class_names) {
  nlohmann::json j;
  j["mean_iou"] = report.mean;
  j["evaluated_pixels"] = report.evaluated_pixels;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, score] : report.per_class) {
    const std::string name = c < static_cast<int>(class_names.size()) && !class_names[c].empty()
                                 ? class_names[c]
                                 : "class" + std::to_string(c);
    per_class[name] = {{"id", c},
                       {"iou", score},
                       {"gt_pixels", report.gt_pixels.count(c) ? report.gt_pixels.at(c) : 0}};
  }
  j["per_class"] = per_class;
  return j.dump(2);
}

IoUReport evaluate_backprojection(const TexturedMesh& mesh, const SparseSemanticTexture& store,
                                  const std::vector<EvalFrame>& frames, int ignore_label, int threads) {
  if (frames.empty()) throw std::invalid_argument("evaluate: no ground-truth frames");
  ConfusionMatrix matrix(store.class_count());
  for (const EvalFrame& frame : frames) {
    // p_min = 0: everything fused counts, only unobserved texels stay ignored.
    const PseudoGroundTruth projected =
        render_pseudo_gt(mesh, store, frame.model, frame.frame_from_world, 0.0, frame.id, threads);
    matrix.add(projected.labels, frame.gt_labels, ignore_label);
  }
  return iou(matrix);
}

std::vector<RobustnessLevel> robustness_sweep(const RobustnessInputs& inputs,
                                              const std::vector<double>& levels, std::uint64_t seed) {
  if (!inputs.mesh || !inputs.table) throw std::invalid_argument("robustness: mesh/table not set");
  const std::size_t n = inputs.trajectory.size();
  if (inputs.models.size() != n || inputs.segs.size() != n || inputs.gt_labels.size() != n) {
    throw std::invalid_argument("robustness: per-frame input sizes differ");
  }

  std::vector<RobustnessLevel> out;
  for (const double level : levels) {
    const Trajectory noisy = add_pose_noise(inputs.trajectory, inputs.max_translation * level,
                                            inputs.max_rotation_deg * level, seed);

    SparseSemanticTexture store(inputs.table->resolution, inputs.class_count, inputs.decommit_threshold);
    int since_sweep = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Pose frame_from_world = noisy.world_from_camera[i].inverse();
      const DepthMap depth = render_depth(*inputs.mesh, inputs.models[i], frame_from_world, inputs.threads);
      fuse_semantic_frame(store, *inputs.table, inputs.models[i], frame_from_world, depth, inputs.segs[i],
                          inputs.fusion, inputs.threads);
      if (inputs.sweep_every > 0 && ++since_sweep >= inputs.sweep_every) {
        store.decommit_sweep();
        since_sweep = 0;
      }
    }

    // Evaluation always uses the true poses: the map is judged against reality.
    std::vector<EvalFrame> eval(n);
    for (std::size_t i = 0; i < n; ++i) {
      eval[i].id = inputs.trajectory.ids[i];
      eval[i].model = inputs.models[i];
      eval[i].frame_from_world = inputs.trajectory.world_from_camera[i].inverse();
      eval[i].gt_labels = inputs.gt_labels[i];
    }
    RobustnessLevel entry;
    entry.level = level;
    entry.report = evaluate_backprojection(*inputs.mesh, store, eval, kUnlabeled, inputs.threads);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace texmesh
