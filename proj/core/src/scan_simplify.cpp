#include "texmesh/scan_simplify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace texmesh {

OrganizedScan::OrganizedScan(int rings_, int columns_)
    : rings(rings_),
      columns(columns_),
      ranges(static_cast<std::size_t>(rings_) * columns_, 0.0f),
      ring_elevations(rings_, 0.0) {}

bool OrganizedScan::valid_at(int ring, int col) const {
  const float r = range_at(ring, col);
  return std::isfinite(r) && r > 0.0f;
}

double OrganizedScan::azimuth(int col) const {
  return 2.0 * std::numbers::pi * static_cast<double>(col) / static_cast<double>(columns);
}

Vec3 OrganizedScan::direction(int ring, int col) const {
  const double az = azimuth(col);
  const double el = ring_elevations[ring];
  const double ce = std::cos(el);
  return {ce * std::cos(az), ce * std::sin(az), std::sin(el)};
}

Vec3 OrganizedScan::point_sensor(int ring, int col) const {
  return direction(ring, col) * static_cast<double>(range_at(ring, col));
}

std::size_t OrganizedScan::valid_count() const {
  std::size_t n = 0;
  for (int r = 0; r < rings; ++r)
    for (int c = 0; c < columns; ++c)
      if (valid_at(r, c)) ++n;
  return n;
}

std::vector<double> OrganizedScan::vlp16_elevations() {
  std::vector<double> elev(16);
  for (int i = 0; i < 16; ++i) {
    elev[i] = (-15.0 + 2.0 * i) * std::numbers::pi / 180.0;
  }
  return elev;
}

std::vector<int> rdp_indices(const std::vector<Vec3>& points, double epsilon) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw std::invalid_argument("rdp: polyline needs at least 2 points");

  std::vector<char> keep(n, 0);
  keep.front() = keep.back() = 1;

  if (epsilon <= 0.0) {
    std::fill(keep.begin(), keep.end(), 1);
  } else {
    // Explicit stack instead of recursion; rings can be thousands of points.
    std::vector<std::pair<int, int>> stack{{0, n - 1}};
    while (!stack.empty()) {
      const auto [a, b] = stack.back();
      stack.pop_back();
      if (b - a < 2) continue;
      double dmax = -1.0;
      int imax = -1;
      for (int i = a + 1; i < b; ++i) {
        const double d = point_segment_distance(points[i], points[a], points[b]);
        if (d > dmax) {
          dmax = d;
          imax = i;
        }
      }
      // >= keeps points at exactly epsilon deviation; interior points are
      // dropped only when the whole span fits strictly inside the tolerance.
      if (dmax >= epsilon) {
        keep[imax] = 1;
        stack.emplace_back(a, imax);
        stack.emplace_back(imax, b);
      }
    }
  }

  std::vector<int> kept;
  for (int i = 0; i < n; ++i)
    if (keep[i]) kept.push_back(i);
  return kept;
}

SimplifiedRing simplify_ring(const std::vector<Vec3>& ring, double epsilon) {
  SimplifiedRing out;
  out.kept = rdp_indices(ring, epsilon);
  out.constrained_segments.reserve(out.kept.size() - 1);
  for (std::size_t i = 0; i + 1 < out.kept.size(); ++i) {
    out.constrained_segments.emplace_back(out.kept[i], out.kept[i + 1]);
  }
  return out;
}

SimplifiedRing add_offset_points(const std::vector<Vec3>& ring, const SimplifiedRing& simplified) {
  const int n = static_cast<int>(ring.size());

  std::set<int> kept(simplified.kept.begin(), simplified.kept.end());
  std::set<int> offsets(simplified.offset.begin(), simplified.offset.end());

  // Interior corners are kept points bounded by two constrained segments.
  std::vector<int> degree(n, 0);
  for (const auto& [a, b] : simplified.constrained_segments) {
    ++degree[a];
    ++degree[b];
  }
  for (int corner : simplified.kept) {
    if (degree[corner] != 2 || offsets.count(corner)) continue;
    for (int nb : {corner - 1, corner + 1}) {
      if (nb < 0 || nb >= n) continue;
      if (kept.count(nb)) continue;
      kept.insert(nb);
      offsets.insert(nb);
    }
  }

  SimplifiedRing out;
  out.ring = simplified.ring;
  out.kept.assign(kept.begin(), kept.end());
  out.offset.assign(offsets.begin(), offsets.end());

  // Rebuild segments: split each original segment at inserted offsets.
  for (const auto& [a, b] : simplified.constrained_segments) {
    int prev = a;
    for (auto it = kept.upper_bound(a); it != kept.end() && *it <= b; ++it) {
      out.constrained_segments.emplace_back(prev, *it);
      prev = *it;
    }
  }
  return out;
}

std::vector<SimplifiedRing> simplify_scan(const OrganizedScan& scan, double epsilon) {
  std::vector<SimplifiedRing> result;
  for (int ring = 0; ring < scan.rings; ++ring) {
    SimplifiedRing merged;
    merged.ring = ring;

    int col = 0;
    while (col < scan.columns) {
      if (!scan.valid_at(ring, col)) {
        ++col;
        continue;
      }
      int run_end = col;
      while (run_end + 1 < scan.columns && scan.valid_at(ring, run_end + 1)) ++run_end;

      const int run_len = run_end - col + 1;
      if (run_len == 1) {
        // A lone return carries geometry but no segment to constrain.
        merged.kept.push_back(col);
      } else {
        std::vector<Vec3> pts(run_len);
        for (int i = 0; i < run_len; ++i) pts[i] = scan.point_sensor(ring, col + i);

        SimplifiedRing local = add_offset_points(pts, simplify_ring(pts, epsilon));
        for (int k : local.kept) merged.kept.push_back(col + k);
        for (int o : local.offset) merged.offset.push_back(col + o);
        for (const auto& [a, b] : local.constrained_segments) {
          merged.constrained_segments.emplace_back(col + a, col + b);
        }
      }
      col = run_end + 1;
    }

    if (merged.kept.size() >= 2) result.push_back(std::move(merged));
  }
  return result;
}

}  // namespace texmesh
