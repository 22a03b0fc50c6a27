#include "texmesh/sparse_texture.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace texmesh {

namespace {
constexpr char kMagic[8] = {'S', 'T', 'X', 'C', 'H', 'K', '0', '1'};
constexpr std::size_t kPageTexels =
    static_cast<std::size_t>(SparseSemanticTexture::kPageSize) * SparseSemanticTexture::kPageSize;
}  // namespace

SparseSemanticTexture::SparseSemanticTexture(int resolution, int class_count, float decommit_threshold)
    : resolution_(resolution),
      classes_(class_count),
      tiles_((resolution + kPageSize - 1) / kPageSize),
      threshold_(decommit_threshold),
      weights_(static_cast<std::size_t>(resolution) * resolution, 0.0f) {
  if (resolution <= 0 || class_count <= 0) {
    throw std::invalid_argument("sparse texture: resolution and class count must be positive");
  }
  slot_count_ = static_cast<std::size_t>(tiles_) * tiles_ * classes_;
  slots_ = std::make_unique<std::atomic<float*>[]>(slot_count_);
  for (std::size_t i = 0; i < slot_count_; ++i) slots_[i].store(nullptr, std::memory_order_relaxed);
}

SparseSemanticTexture::~SparseSemanticTexture() { release_all(); }

void SparseSemanticTexture::release_all() {
  if (!slots_) return;
  for (std::size_t i = 0; i < slot_count_; ++i) {
    delete[] slots_[i].load(std::memory_order_relaxed);
  }
  slots_.reset();
  slot_count_ = 0;
}

SparseSemanticTexture::SparseSemanticTexture(SparseSemanticTexture&& other) noexcept
    : resolution_(other.resolution_),
      classes_(other.classes_),
      tiles_(other.tiles_),
      threshold_(other.threshold_),
      slots_(std::move(other.slots_)),
      slot_count_(other.slot_count_),
      committed_(other.committed_.load()),
      weights_(std::move(other.weights_)) {
  other.slot_count_ = 0;
  other.committed_ = 0;
}

SparseSemanticTexture& SparseSemanticTexture::operator=(SparseSemanticTexture&& other) noexcept {
  if (this != &other) {
    release_all();
    resolution_ = other.resolution_;
    classes_ = other.classes_;
    tiles_ = other.tiles_;
    threshold_ = other.threshold_;
    slots_ = std::move(other.slots_);
    slot_count_ = other.slot_count_;
    committed_ = other.committed_.load();
    weights_ = std::move(other.weights_);
    other.slot_count_ = 0;
    other.committed_ = 0;
  }
  return *this;
}

float* SparseSemanticTexture::commit_page(std::size_t slot) {
  float* fresh = new float[kPageTexels]();
  float* expected = nullptr;
  if (slots_[slot].compare_exchange_strong(expected, fresh, std::memory_order_acq_rel)) {
    committed_.fetch_add(1, std::memory_order_relaxed);
    return fresh;
  }
  delete[] fresh;  // another writer won the commit
  return expected;
}

void SparseSemanticTexture::accumulate(int x, int y, int cls, float delta) {
  if (x < 0 || y < 0 || x >= resolution_ || y >= resolution_) {
    throw std::out_of_range("sparse texture: texel (" + std::to_string(x) + "," + std::to_string(y) +
                            ") out of range");
  }
  if (cls < 0 || cls >= classes_) {
    throw std::out_of_range("sparse texture: class " + std::to_string(cls) + " out of range");
  }
  const std::size_t slot = slot_index(x / kPageSize, y / kPageSize, cls);
  float* page = slots_[slot].load(std::memory_order_acquire);
  if (!page) page = commit_page(slot);
  page[static_cast<std::size_t>(y % kPageSize) * kPageSize + (x % kPageSize)] += delta;
}

void SparseSemanticTexture::add_weight(int x, int y, float w) {
  weights_[static_cast<std::size_t>(y) * resolution_ + x] += w;
}

float SparseSemanticTexture::value(int x, int y, int cls) const {
  const float* page = slots_[slot_index(x / kPageSize, y / kPageSize, cls)].load(std::memory_order_acquire);
  if (!page) return 0.0f;
  return page[static_cast<std::size_t>(y % kPageSize) * kPageSize + (x % kPageSize)];
}

float SparseSemanticTexture::weight(int x, int y) const {
  return weights_[static_cast<std::size_t>(y) * resolution_ + x];
}

bool SparseSemanticTexture::page_committed(int tile_x, int tile_y, int cls) const {
  return slots_[slot_index(tile_x, tile_y, cls)].load(std::memory_order_acquire) != nullptr;
}

const float* SparseSemanticTexture::page_data(int tile_x, int tile_y, int cls) const {
  return slots_[slot_index(tile_x, tile_y, cls)].load(std::memory_order_acquire);
}

int SparseSemanticTexture::decommit_sweep() {
  int freed = 0;
  std::vector<const float*> pages;
  std::vector<int> page_cls;
  std::vector<char> keep;

  for (int ty = 0; ty < tiles_; ++ty) {
    for (int tx = 0; tx < tiles_; ++tx) {
      pages.clear();
      page_cls.clear();
      for (int c = 0; c < classes_; ++c) {
        if (const float* p = slots_[slot_index(tx, ty, c)].load(std::memory_order_acquire)) {
          pages.push_back(p);
          page_cls.push_back(c);
        }
      }
      if (pages.empty()) continue;
      keep.assign(pages.size(), 0);

      const int x_end = std::min(resolution_ - tx * kPageSize, kPageSize);
      const int y_end = std::min(resolution_ - ty * kPageSize, kPageSize);
      for (int ly = 0; ly < y_end; ++ly) {
        const std::size_t wrow =
            static_cast<std::size_t>(ty * kPageSize + ly) * resolution_ + tx * kPageSize;
        for (int lx = 0; lx < x_end; ++lx) {
          const float w = weights_[wrow + lx];
          if (w <= 0.0f) continue;  // no observation, no claim on any page
          const std::size_t off = static_cast<std::size_t>(ly) * kPageSize + lx;

          // One pass finds both the threshold hits and the argmax class
          // (lowest class id wins ties; implicit zero classes lose to any
          // positive mass).
          float best = 0.0f;
          int best_idx = -1;
          for (std::size_t k = 0; k < pages.size(); ++k) {
            const float s = pages[k][off];
            if (s > best) {
              best = s;
              best_idx = static_cast<int>(k);
            }
            if (s / w >= threshold_) keep[k] = 1;
          }
          if (best_idx >= 0) keep[best_idx] = 1;  // argmax guard
        }
      }

      for (std::size_t k = 0; k < pages.size(); ++k) {
        if (keep[k]) continue;
        const std::size_t slot = slot_index(tx, ty, page_cls[k]);
        delete[] slots_[slot].exchange(nullptr, std::memory_order_acq_rel);
        committed_.fetch_sub(1, std::memory_order_relaxed);
        ++freed;
      }
    }
  }
  return freed;
}

MemoryStats SparseSemanticTexture::memory_stats() const {
  MemoryStats stats;
  stats.committed_pages = committed_.load(std::memory_order_relaxed);
  stats.committed_bytes = static_cast<std::uint64_t>(stats.committed_pages) * kPageTexels * sizeof(float);
  stats.dense_bytes = static_cast<std::uint64_t>(resolution_) * resolution_ * classes_ * sizeof(float);
  stats.committed_fraction =
      stats.dense_bytes == 0 ? 0.0 : static_cast<double>(stats.committed_bytes) / stats.dense_bytes;
  return stats;
}

std::vector<float> SparseSemanticTexture::dense_snapshot(std::size_t max_elements) const {
  const std::size_t total = static_cast<std::size_t>(resolution_) * resolution_ * classes_;
  if (total > max_elements) {
    throw std::length_error("sparse texture: dense snapshot of " + std::to_string(total) +
                            " elements refused");
  }
  std::vector<float> dense(total, 0.0f);
  for (int ty = 0; ty < tiles_; ++ty) {
    for (int tx = 0; tx < tiles_; ++tx) {
      for (int c = 0; c < classes_; ++c) {
        const float* page = slots_[slot_index(tx, ty, c)].load(std::memory_order_acquire);
        if (!page) continue;
        const int x_end = std::min(resolution_ - tx * kPageSize, kPageSize);
        const int y_end = std::min(resolution_ - ty * kPageSize, kPageSize);
        for (int ly = 0; ly < y_end; ++ly) {
          const int y = ty * kPageSize + ly;
          for (int lx = 0; lx < x_end; ++lx) {
            const int x = tx * kPageSize + lx;
            dense[(static_cast<std::size_t>(y) * resolution_ + x) * classes_ + c] =
                page[static_cast<std::size_t>(ly) * kPageSize + lx];
          }
        }
      }
    }
  }
  return dense;
}

void SparseSemanticTexture::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path.string());

  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(resolution_),
                                   static_cast<std::uint32_t>(classes_),
                                   static_cast<std::uint32_t>(kPageSize)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(&threshold_), sizeof(threshold_));
  const std::uint64_t page_count = committed_.load(std::memory_order_relaxed);
  out.write(reinterpret_cast<const char*>(&page_count), sizeof(page_count));
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(float)));

  // Slot order is (tile_y, tile_x, class); records are required sorted by
  // (tile_x, tile_y, class), so iterate columns outermost.
  std::uint64_t written = 0;
  for (int tx = 0; tx < tiles_; ++tx) {
    for (int ty = 0; ty < tiles_; ++ty) {
      for (int c = 0; c < classes_; ++c) {
        const float* page = slots_[slot_index(tx, ty, c)].load(std::memory_order_relaxed);
        if (!page) continue;
        const std::uint32_t rec[3] = {static_cast<std::uint32_t>(tx), static_cast<std::uint32_t>(ty),
                                      static_cast<std::uint32_t>(c)};
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
        out.write(reinterpret_cast<const char*>(page),
                  static_cast<std::streamsize>(kPageTexels * sizeof(float)));
        ++written;
      }
    }
  }
  if (written != page_count) throw std::runtime_error("checkpoint: page count changed during save");
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

SparseSemanticTexture SparseSemanticTexture::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path.string());

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  std::uint32_t header[3];
  float threshold = 0.0f;
  std::uint64_t page_count = 0;
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  in.read(reinterpret_cast<char*>(&threshold), sizeof(threshold));
  in.read(reinterpret_cast<char*>(&page_count), sizeof(page_count));
  if (!in) throw std::runtime_error("checkpoint: truncated header in " + path.string());
  if (header[2] != kPageSize) {
    throw std::runtime_error("checkpoint: unsupported page size " + std::to_string(header[2]));
  }

  SparseSemanticTexture store(static_cast<int>(header[0]), static_cast<int>(header[1]), threshold);
  in.read(reinterpret_cast<char*>(store.weights_.data()),
          static_cast<std::streamsize>(store.weights_.size() * sizeof(float)));

  for (std::uint64_t p = 0; p < page_count; ++p) {
    std::uint32_t rec[3];
    in.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (!in) throw std::runtime_error("checkpoint: truncated page record in " + path.string());
    if (rec[0] >= static_cast<std::uint32_t>(store.tiles_) ||
        rec[1] >= static_cast<std::uint32_t>(store.tiles_) ||
        rec[2] >= static_cast<std::uint32_t>(store.classes_)) {
      throw std::runtime_error("checkpoint: page record out of range in " + path.string());
    }
    float* page = store.commit_page(store.slot_index(rec[0], rec[1], rec[2]));
    in.read(reinterpret_cast<char*>(page), static_cast<std::streamsize>(kPageTexels * sizeof(float)));
  }
  if (!in) throw std::runtime_error("checkpoint: truncated payload in " + path.string());
  return store;
}

}  // namespace texmesh
