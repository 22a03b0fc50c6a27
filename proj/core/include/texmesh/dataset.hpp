#pragma once

#include "texmesh/camera.hpp"
#include "texmesh/image.hpp"
#include "texmesh/scan_simplify.hpp"
#include "texmesh/semantic_fusion.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace texmesh {

// Flat `key = value` configuration file with # comments and optional quotes.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

struct Palette {
  std::vector<Rgb8> colors;        // indexed by class id
  std::vector<std::string> names;  // indexed by class id
};

// CSV rows: class_id,r,g,b,name
Palette load_palette_csv(const std::filesystem::path& path);
void save_palette_csv(const std::filesystem::path& path, const Palette& palette);

struct FrameRecord {
  int id = -1;
  std::filesystem::path rgb;
  std::filesystem::path probmap;
  std::optional<std::filesystem::path> gt;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<FrameRecord> frames;  // sorted by id
  std::filesystem::path trajectory_path;
  CameraModel intrinsics;
  std::optional<std::filesystem::path> mesh_path;
  std::optional<std::filesystem::path> scans_dir;
  int class_count = 0;
  Palette palette;
  double d_min = 0.0;
  double d_max = 100.0;
};

// Loads and validates a dataset config; every referenced file must exist and
// probability-map headers must match the configured dimensions.
DatasetManifest load_dataset(const std::filesystem::path& config_path);

// ---- probability-map files ("SPRB") -------------------------------------

enum class ProbMapEncoding : std::uint32_t {
  kDenseFloat32 = 0,  // W*H*C float32, row-major, class-minor
  kArgmaxPair = 1,    // W*H records of (uint16 label, float32 confidence)
};

struct ProbMapHeader {
  std::uint32_t version = 1;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t classes = 0;
  ProbMapEncoding encoding = ProbMapEncoding::kArgmaxPair;
};

ProbMapHeader read_probmap_header(const std::filesystem::path& path);
void write_probmap_dense(const std::filesystem::path& path, const ProbabilityMap& map);
void write_probmap_argmax(const std::filesystem::path& path, const SegmentationResult& seg, int classes);

// Dense payloads are argmax-reduced on load; pair payloads load directly.
SegmentationResult read_probmap(const std::filesystem::path& path);

// ---- organized scans ("SSCN") --------------------------------------------

void write_scan(const std::filesystem::path& path, const OrganizedScan& scan);
OrganizedScan read_scan(const std::filesystem::path& path);
std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path& dir);

}  // namespace texmesh
