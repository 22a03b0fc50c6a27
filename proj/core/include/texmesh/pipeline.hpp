#pragma once

#include "texmesh/dataset.hpp"
#include "texmesh/evaluation.hpp"
#include "texmesh/label_prop.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace texmesh {

struct PipelineOptions {
  std::filesystem::path out_dir;

  double rdp_epsilon = 0.05;
  int texture_size = 4096;
  std::optional<double> d_min;  // override the dataset values
  std::optional<double> d_max;
  double depth_bias = 1e-3;
  float decommit_threshold = 0.1f;
  int sweep_every = 1;

  double p_min = 0.8;
  double fraction = 0.05;
  int min_spacing = 10;
  SelectionMode selection_mode = SelectionMode::kWorse;
  int iteration = 0;
  std::optional<std::filesystem::path> seg_dir;  // replaces manifest probmaps

  std::vector<double> robustness_levels = {0.0, 0.25, 0.5, 0.75, 1.0};
  double noise_translation = 0.5;
  double noise_rotation_deg = 5.0;

  std::uint64_t seed = 0;
  int threads = 1;
};

// Stage artifact names under out_dir.
std::filesystem::path semantic_checkpoint_path(const PipelineOptions& options);
std::filesystem::path color_checkpoint_path(const PipelineOptions& options);

// Loads the dataset mesh, generating the fallback UV atlas when the file
// carries no texture coordinates.
TexturedMesh load_dataset_mesh(const DatasetManifest& manifest, const PipelineOptions& options);

FusionParams fusion_params(const DatasetManifest& manifest, const PipelineOptions& options);

// Stages. Each writes its artifacts under options.out_dir and raises with the
// missing artifact's name when a precondition is not met.
void stage_estimate_normals(const DatasetManifest& manifest, const PipelineOptions& options);
void stage_fuse(const DatasetManifest& manifest, const PipelineOptions& options);
RoundReport stage_propagate(const DatasetManifest& manifest, const PipelineOptions& options);
IoUReport stage_evaluate(const DatasetManifest& manifest, const PipelineOptions& options);
std::vector<RobustnessLevel> stage_robustness(const DatasetManifest& manifest, const PipelineOptions& options);
void stage_export(const DatasetManifest& manifest, const PipelineOptions& options);

// Runs the named stages in canonical order (estimate-normals, fuse,
// propagate, evaluate, robustness, export).
void run_pipeline(const DatasetManifest& manifest, const std::vector<std::string>& stages,
                  const PipelineOptions& options);

}  // namespace texmesh
