#include "texmesh/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace texmesh {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: line " + std::to_string(line_no) + " is not `key = value`");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw std::runtime_error("config: empty key on line " + std::to_string(line_no));
    config.values_[key] = value;
  }
  return config;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::runtime_error("config: missing key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  try {
    return std::stod(get_string(key));
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("config: key '" + key + "' is not a number");
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key) const {
  try {
    return std::stoi(get_string(key));
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("config: key '" + key + "' is not an integer");
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

Palette load_palette_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("palette: cannot open: " + path.string());
  Palette palette;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string field;
    int values[4];
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ls, field, ',')) throw std::runtime_error("palette: malformed row: " + line);
      values[i] = std::stoi(trim(field));
    }
    std::string name;
    std::getline(ls, name);
    const int id = values[0];
    if (id < 0 || id > 254) throw std::runtime_error("palette: class id out of range: " + line);
    if (static_cast<std::size_t>(id) >= palette.colors.size()) {
      palette.colors.resize(id + 1);
      palette.names.resize(id + 1);
    }
    palette.colors[id] = Rgb8{static_cast<std::uint8_t>(values[1]), static_cast<std::uint8_t>(values[2]),
                              static_cast<std::uint8_t>(values[3])};
    palette.names[id] = trim(name);
  }
  return palette;
}

void save_palette_csv(const std::filesystem::path& path, const Palette& palette) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("palette: cannot open for write: " + path.string());
  for (std::size_t i = 0; i < palette.colors.size(); ++i) {
    out << i << ',' << static_cast<int>(palette.colors[i].r) << ',' << static_cast<int>(palette.colors[i].g)
        << ',' << static_cast<int>(palette.colors[i].b) << ',' << palette.names[i] << '\n';
  }
}

DatasetManifest load_dataset(const std::filesystem::path& config_path) {
  const KeyValueConfig config = KeyValueConfig::parse_file(config_path);
  DatasetManifest manifest;
  manifest.root = config_path.parent_path();

  manifest.class_count = config.get_int("class_count");
  if (manifest.class_count <= 0 || manifest.class_count > 254) {
    throw std::runtime_error("dataset: class_count must be in [1,254] (255 is the ignore index)");
  }
  manifest.intrinsics.width = config.get_int("width");
  manifest.intrinsics.height = config.get_int("height");
  manifest.intrinsics.fx = config.get_double("fx");
  manifest.intrinsics.fy = config.get_double("fy");
  manifest.intrinsics.cx = config.get_double("cx");
  manifest.intrinsics.cy = config.get_double("cy");
  if (manifest.intrinsics.fx <= 0 || manifest.intrinsics.fy <= 0 || manifest.intrinsics.width <= 0 ||
      manifest.intrinsics.height <= 0) {
    throw std::runtime_error("dataset: invalid intrinsics");
  }
  manifest.d_min = config.get_double("dmin", 0.0);
  manifest.d_max = config.get_double("dmax", 100.0);

  auto resolve = [&](const std::string& rel) { return manifest.root / rel; };
  auto require_file = [&](const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::exists(p)) {
      throw std::runtime_error("dataset: " + what + " does not exist: " + p.string());
    }
  };

  manifest.trajectory_path = resolve(config.get_string("trajectory"));
  require_file(manifest.trajectory_path, "trajectory");
  manifest.palette = load_palette_csv([&] {
    const auto p = resolve(config.get_string("palette"));
    require_file(p, "palette");
    return p;
  }());

  if (config.has("mesh")) {
    manifest.mesh_path = resolve(config.get_string("mesh"));
    require_file(*manifest.mesh_path, "mesh");
  }
  if (config.has("scans")) {
    manifest.scans_dir = resolve(config.get_string("scans"));
    require_file(*manifest.scans_dir, "scans directory");
  }

  const auto frames_path = resolve(config.get_string("frames"));
  require_file(frames_path, "frame list");
  std::ifstream frames(frames_path);
  std::string line;
  int line_no = 0;
  while (std::getline(frames, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    FrameRecord record;
    std::string rgb, probmap, gt;
    if (!(ls >> record.id >> rgb >> probmap)) {
      throw std::runtime_error("dataset: malformed frame row " + std::to_string(line_no) + " in " +
                               frames_path.string());
    }
    record.rgb = resolve(rgb);
    record.probmap = resolve(probmap);
    if (ls >> gt) record.gt = resolve(gt);

    require_file(record.rgb, "rgb of frame " + std::to_string(record.id));
    require_file(record.probmap, "probmap of frame " + std::to_string(record.id));
    if (record.gt) require_file(*record.gt, "gt of frame " + std::to_string(record.id));

    const ProbMapHeader header = read_probmap_header(record.probmap);
    if (static_cast<int>(header.classes) != manifest.class_count) {
      throw std::runtime_error("dataset: frame " + std::to_string(record.id) + " probmap has " +
                               std::to_string(header.classes) + " classes, expected " +
                               std::to_string(manifest.class_count));
    }
    if (static_cast<int>(header.width) != manifest.intrinsics.width ||
        static_cast<int>(header.height) != manifest.intrinsics.height) {
      throw std::runtime_error("dataset: frame " + std::to_string(record.id) +
                               " probmap dimensions differ from intrinsics");
    }
    manifest.frames.push_back(std::move(record));
  }
  if (manifest.frames.empty()) throw std::runtime_error("dataset: no frames listed");

  std::sort(manifest.frames.begin(), manifest.frames.end(),
            [](const FrameRecord& a, const FrameRecord& b) { return a.id < b.id; });
  for (std::size_t i = 0; i + 1 < manifest.frames.size(); ++i) {
    if (manifest.frames[i].id == manifest.frames[i + 1].id) {
      throw std::runtime_error("dataset: duplicate frame id " + std::to_string(manifest.frames[i].id));
    }
  }
  return manifest;
}

// ---- probability-map files -------------------------------------------------

namespace {
constexpr char kProbMagic[4] = {'S', 'P', 'R', 'B'};

void write_probmap_header(std::ofstream& out, const ProbMapHeader& header) {
  out.write(kProbMagic, sizeof(kProbMagic));
  const std::uint32_t fields[5] = {header.version, header.width, header.height, header.classes,
                                   static_cast<std::uint32_t>(header.encoding)};
  out.write(reinterpret_cast<const char*>(fields), sizeof(fields));
}
}  // namespace

ProbMapHeader read_probmap_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("probmap: cannot open: " + path.string());
  char magic[4];
  std::uint32_t fields[5];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(fields), sizeof(fields));
  if (!in || std::memcmp(magic, kProbMagic, sizeof(kProbMagic)) != 0) {
    throw std::runtime_error("probmap: bad magic in " + path.string());
  }
  ProbMapHeader header;
  header.version = fields[0];
  header.width = fields[1];
  header.height = fields[2];
  header.classes = fields[3];
  header.encoding = static_cast<ProbMapEncoding>(fields[4]);
  if (header.version != 1) throw std::runtime_error("probmap: unsupported version in " + path.string());
  if (fields[4] > 1) throw std::runtime_error("probmap: unknown encoding in " + path.string());
  return header;
}

void write_probmap_dense(const std::filesystem::path& path, const ProbabilityMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("probmap: cannot open for write: " + path.string());
  ProbMapHeader header;
  header.width = static_cast<std::uint32_t>(map.width);
  header.height = static_cast<std::uint32_t>(map.height);
  header.classes = static_cast<std::uint32_t>(map.classes);
  header.encoding = ProbMapEncoding::kDenseFloat32;
  write_probmap_header(out, header);
  out.write(reinterpret_cast<const char*>(map.values.data()),
            static_cast<std::streamsize>(map.values.size() * sizeof(float)));
  if (!out) throw std::runtime_error("probmap: write failed: " + path.string());
}

void write_probmap_argmax(const std::filesystem::path& path, const SegmentationResult& seg, int classes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("probmap: cannot open for write: " + path.string());
  ProbMapHeader header;
  header.width = static_cast<std::uint32_t>(seg.labels.width);
  header.height = static_cast<std::uint32_t>(seg.labels.height);
  header.classes = static_cast<std::uint32_t>(classes);
  header.encoding = ProbMapEncoding::kArgmaxPair;
  write_probmap_header(out, header);

  std::vector<char> record(6);
  for (std::size_t i = 0; i < seg.labels.data.size(); ++i) {
    std::memcpy(record.data(), &seg.labels.data[i], 2);
    std::memcpy(record.data() + 2, &seg.confidence.data[i], 4);
    out.write(record.data(), 6);
  }
  if (!out) throw std::runtime_error("probmap: write failed: " + path.string());
}

SegmentationResult read_probmap(const std::filesystem::path& path) {
  const ProbMapHeader header = read_probmap_header(path);
  std::ifstream in(path, std::ios::binary);
  in.seekg(4 + 5 * sizeof(std::uint32_t));

  const int w = static_cast<int>(header.width);
  const int h = static_cast<int>(header.height);
  if (header.encoding == ProbMapEncoding::kDenseFloat32) {
    ProbabilityMap map;
    map.width = w;
    map.height = h;
    map.classes = static_cast<int>(header.classes);
    map.values.resize(static_cast<std::size_t>(w) * h * header.classes);
    in.read(reinterpret_cast<char*>(map.values.data()),
            static_cast<std::streamsize>(map.values.size() * sizeof(float)));
    if (!in) throw std::runtime_error("probmap: truncated payload in " + path.string());
    return argmax_reduce(map);
  }

  SegmentationResult seg;
  seg.labels = ImageU16(w, h, 0);
  seg.confidence = ImageF(w, h, 0.0f);
  std::vector<char> payload(static_cast<std::size_t>(w) * h * 6);
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!in) throw std::runtime_error("probmap: truncated payload in " + path.string());
  for (std::size_t i = 0; i < seg.labels.data.size(); ++i) {
    std::memcpy(&seg.labels.data[i], payload.data() + i * 6, 2);
    std::memcpy(&seg.confidence.data[i], payload.data() + i * 6 + 2, 4);
  }
  return seg;
}

// ---- organized scan files ---------------------------------------------------

namespace {
constexpr char kScanMagic[4] = {'S', 'S', 'C', 'N'};
}

void write_scan(const std::filesystem::path& path, const OrganizedScan& scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("scan: cannot open for write: " + path.string());
  out.write(kScanMagic, sizeof(kScanMagic));
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(scan.rings),
                                 static_cast<std::uint32_t>(scan.columns)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(&scan.timestamp), sizeof(scan.timestamp));

  const Eigen::Quaterniond q(scan.world_from_sensor.rotation());
  const Vec3 t = scan.world_from_sensor.translation();
  const double pose[7] = {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()};
  out.write(reinterpret_cast<const char*>(pose), sizeof(pose));
  out.write(reinterpret_cast<const char*>(scan.ring_elevations.data()),
            static_cast<std::streamsize>(scan.ring_elevations.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(scan.ranges.data()),
            static_cast<std::streamsize>(scan.ranges.size() * sizeof(float)));
  if (!out) throw std::runtime_error("scan: write failed: " + path.string());
}

OrganizedScan read_scan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("scan: cannot open: " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kScanMagic, sizeof(kScanMagic)) != 0) {
    throw std::runtime_error("scan: bad magic in " + path.string());
  }
  std::uint32_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  OrganizedScan scan(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  in.read(reinterpret_cast<char*>(&scan.timestamp), sizeof(scan.timestamp));
  double pose[7];
  in.read(reinterpret_cast<char*>(pose), sizeof(pose));
  Eigen::Quaterniond q(pose[6], pose[3], pose[4], pose[5]);
  q.normalize();
  scan.world_from_sensor = Pose::Identity();
  scan.world_from_sensor.linear() = q.toRotationMatrix();
  scan.world_from_sensor.translation() = Vec3(pose[0], pose[1], pose[2]);
  in.read(reinterpret_cast<char*>(scan.ring_elevations.data()),
          static_cast<std::streamsize>(scan.ring_elevations.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(scan.ranges.data()),
          static_cast<std::streamsize>(scan.ranges.size() * sizeof(float)));
  if (!in) throw std::runtime_error("scan: truncated file: " + path.string());
  return scan;
}

std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".sscn") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace texmesh
