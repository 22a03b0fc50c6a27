#pragma once

#include "texmesh/geometry.hpp"

#include <utility>
#include <vector>

namespace texmesh {

// One revolution (or one frame) of an organized range sensor stored as a
// rings x columns grid. Invalid returns are encoded as non-positive or
// non-finite range values.
struct OrganizedScan {
  int rings = 0;
  int columns = 0;
  std::vector<float> ranges;            // rings * columns, row-major by ring
  std::vector<double> ring_elevations;  // radians, one per ring
  Pose world_from_sensor = Pose::Identity();
  double timestamp = 0.0;

  OrganizedScan() = default;
  OrganizedScan(int rings_, int columns_);

  float range_at(int ring, int col) const { return ranges[static_cast<std::size_t>(ring) * columns + col]; }
  float& range_at(int ring, int col) { return ranges[static_cast<std::size_t>(ring) * columns + col]; }
  bool valid_at(int ring, int col) const;

  // Azimuth of a column in radians, measured from the scan start column.
  double azimuth(int col) const;

  // Ray direction / measured point in the sensor frame.
  Vec3 direction(int ring, int col) const;
  Vec3 point_sensor(int ring, int col) const;

  std::size_t valid_count() const;

  // Elevation table of a Velodyne VLP-16: 16 rings, -15 deg .. +15 deg.
  static std::vector<double> vlp16_elevations();
};

// Result of simplifying one scan ring. Indices refer to ring columns.
struct SimplifiedRing {
  int ring = -1;
  std::vector<int> kept;                                   // strictly increasing
  std::vector<std::pair<int, int>> constrained_segments;   // adjacent kept pairs within a valid run
  std::vector<int> offset;                                 // subset of kept flagged as offset points
};

// Ramer-Douglas-Peucker over one contiguous polyline. Returns kept local
// indices including both endpoints; every dropped point lies within epsilon
// of its covering simplified segment. epsilon <= 0 keeps every point.
std::vector<int> rdp_indices(const std::vector<Vec3>& points, double epsilon);

// Simplifies a fully-valid ring polyline. kept indices address `ring`.
SimplifiedRing simplify_ring(const std::vector<Vec3>& ring, double epsilon);

// Adds offset points around every interior kept corner: the corner's
// immediate ring neighbors on both sides are retained and flagged, and the
// constrained segments are split accordingly. No-op where neighbors are
// already kept or fall outside the polyline.
SimplifiedRing add_offset_points(const std::vector<Vec3>& ring, const SimplifiedRing& simplified);

// Simplifies every ring of a scan independently. Invalid returns split a
// ring into separate sub-polylines; rings with fewer than 2 valid points are
// skipped. Offset points are included.
std::vector<SimplifiedRing> simplify_scan(const OrganizedScan& scan, double epsilon);

}  // namespace texmesh
