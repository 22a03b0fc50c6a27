#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace texmesh {

struct MemoryStats {
  std::size_t committed_pages = 0;
  std::uint64_t committed_bytes = 0;
  std::uint64_t dense_bytes = 0;
  double committed_fraction = 0.0;
};

// Paged sparse storage for the per-class probability mass S, plus the dense
// per-texel weight plane W. Pages are 128x128 texels, one class deep, and are
// committed on first write and decommitted by threshold sweeps -- the CPU
// counterpart of sparse (partially resident) GPU textures.
//
// Concurrency: accumulate/add_weight calls on distinct texels are safe to run
// concurrently (page commits race through a CAS). Sweeps, snapshots, and
// checkpointing require exclusive access.
class SparseSemanticTexture {
 public:
  static constexpr int kPageSize = 128;

  SparseSemanticTexture(int resolution, int class_count, float decommit_threshold = 0.1f);
  ~SparseSemanticTexture();

  SparseSemanticTexture(SparseSemanticTexture&& other) noexcept;
  SparseSemanticTexture& operator=(SparseSemanticTexture&& other) noexcept;
  SparseSemanticTexture(const SparseSemanticTexture&) = delete;
  SparseSemanticTexture& operator=(const SparseSemanticTexture&) = delete;

  int resolution() const { return resolution_; }
  int class_count() const { return classes_; }
  int tiles_per_side() const { return tiles_; }
  float decommit_threshold() const { return threshold_; }
  void set_decommit_threshold(float t) { threshold_ = t; }

  // S[texel, cls] += delta, committing the page when absent. delta >= 0.
  void accumulate(int x, int y, int cls, float delta);

  // W[texel] += w.
  void add_weight(int x, int y, float w);

  float value(int x, int y, int cls) const;  // 0 for uncommitted pages
  float weight(int x, int y) const;
  const std::vector<float>& weights() const { return weights_; }

  bool page_committed(int tile_x, int tile_y, int cls) const;
  const float* page_data(int tile_x, int tile_y, int cls) const;
  std::size_t committed_pages() const { return committed_.load(std::memory_order_relaxed); }

  // Frees every page in which no texel reaches the probability threshold
  // S/W >= decommit_threshold and no texel holds its (tie-broken) argmax
  // class. Texels with W == 0 never retain a page. Returns freed page count.
  int decommit_sweep();

  MemoryStats memory_stats() const;

  // Dense (texel-major, class-minor) materialization for desk-scale oracles.
  // Throws when resolution^2 * classes exceeds max_elements.
  std::vector<float> dense_snapshot(std::size_t max_elements = std::size_t(1) << 29) const;

  // Binary checkpoint: header, W plane, then committed pages sorted by
  // (tile_x, tile_y, class). Round trips are byte-identical.
  void save_checkpoint(const std::filesystem::path& path) const;
  static SparseSemanticTexture load_checkpoint(const std::filesystem::path& path);

 private:
  std::size_t slot_index(int tile_x, int tile_y, int cls) const {
    return (static_cast<std::size_t>(tile_y) * tiles_ + tile_x) * classes_ + cls;
  }
  float* commit_page(std::size_t slot);
  void release_all();

  int resolution_ = 0;
  int classes_ = 0;
  int tiles_ = 0;
  float threshold_ = 0.1f;
  std::unique_ptr<std::atomic<float*>[]> slots_;
  std::size_t slot_count_ = 0;
  std::atomic<std::size_t> committed_{0};
  std::vector<float> weights_;
};

}  // namespace texmesh
