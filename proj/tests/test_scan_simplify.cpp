#include "texmesh/scan_simplify.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace texmesh;

namespace {

// Independent oracle: every dropped point must lie within epsilon of the
// simplified segment covering it.
double max_dropped_deviation(const std::vector<Vec3>& ring, const std::vector<int>& kept) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    for (int i = kept[k] + 1; i < kept[k + 1]; ++i) {
      worst = std::max(worst, point_segment_distance(ring[i], ring[kept[k]], ring[kept[k + 1]]));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("scan_simplify") {
  TEST_CASE("collinear ring keeps only the endpoints") {
    std::vector<Vec3> ring;
    for (int i = 0; i < 10; ++i) ring.emplace_back(0.3 * i, 0.1 * i, 0.0);
    const SimplifiedRing s = simplify_ring(ring, 0.05);
    CHECK(s.kept == std::vector<int>{0, 9});
    CHECK(s.constrained_segments.size() == 1);
  }

  TEST_CASE("corner above epsilon is retained") {
    std::vector<Vec3> ring;
    for (int i = 0; i <= 5; ++i) ring.emplace_back(i, 0.0, 0.0);
    for (int i = 1; i <= 5; ++i) ring.emplace_back(5.0, i, 0.0);  // 1 m deviation corner at index 5
    const SimplifiedRing s = simplify_ring(ring, 0.1);
    CHECK(std::find(s.kept.begin(), s.kept.end(), 5) != s.kept.end());
  }

  TEST_CASE("random ring satisfies the deviation bound") {
    std::mt19937_64 rng(42);
    const std::vector<Vec3> ring = testutil::random_ring(rng, 50, 0.01);
    const SimplifiedRing s = simplify_ring(ring, 0.02);
    CHECK(max_dropped_deviation(ring, s.kept) <= 0.02);
    CHECK(s.kept.size() < ring.size());
  }

  TEST_CASE("epsilon zero keeps every point") {
    std::mt19937_64 rng(1);
    const std::vector<Vec3> ring = testutil::random_ring(rng, 30, 0.0);
    const SimplifiedRing s = simplify_ring(ring, 0.0);
    CHECK(s.kept.size() == ring.size());
  }

  TEST_CASE("kept count is monotone non-increasing in epsilon") {
    std::mt19937_64 rng(7);
    const std::vector<Vec3> ring = testutil::random_ring(rng, 120, 0.05);
    std::size_t previous = ring.size() + 1;
    for (const double eps : {0.001, 0.005, 0.02, 0.1, 0.5, 2.0}) {
      const std::size_t kept = simplify_ring(ring, eps).kept.size();
      CHECK(kept <= previous);
      previous = kept;
    }
  }

  TEST_CASE("short rings are rejected") {
    CHECK_THROWS(rdp_indices({Vec3(0, 0, 0)}, 0.1));
  }

  TEST_CASE("offset points surround interior corners") {
    // L-shape: corner at index 5, far from its simplified neighbors.
    std::vector<Vec3> ring;
    for (int i = 0; i <= 5; ++i) ring.emplace_back(i, 0.0, 0.0);
    for (int i = 1; i <= 5; ++i) ring.emplace_back(5.0, i, 0.0);
    const SimplifiedRing base = simplify_ring(ring, 0.1);
    const SimplifiedRing with_offsets = add_offset_points(ring, base);

    const std::set<int> kept(with_offsets.kept.begin(), with_offsets.kept.end());
    const std::set<int> offsets(with_offsets.offset.begin(), with_offsets.offset.end());
    CHECK(kept.count(4) == 1);
    CHECK(kept.count(6) == 1);
    CHECK(offsets.count(4) == 1);
    CHECK(offsets.count(6) == 1);
    // Segments were split around the inserted points.
    for (int probe : {4, 5, 6}) {
      const bool covered = std::any_of(with_offsets.constrained_segments.begin(),
                                       with_offsets.constrained_segments.end(),
                                       [&](const auto& seg) { return seg.first == probe || seg.second == probe; });
      CHECK(covered);
    }
    // Every offset is adjacent to a non-offset kept point.
    for (int o : with_offsets.offset) {
      const bool adjacent = (kept.count(o - 1) && !offsets.count(o - 1)) ||
                            (kept.count(o + 1) && !offsets.count(o + 1));
      CHECK(adjacent);
    }
  }

  TEST_CASE("collinear ring gains no offset points") {
    std::vector<Vec3> ring;
    for (int i = 0; i < 12; ++i) ring.emplace_back(0.5 * i, 0.0, 0.0);
    const SimplifiedRing base = simplify_ring(ring, 0.05);
    const SimplifiedRing with_offsets = add_offset_points(ring, base);
    CHECK(with_offsets.kept == base.kept);
    CHECK(with_offsets.offset.empty());
  }

  TEST_CASE("corner next to the polyline boundary adds only the free neighbor") {
    // Corner at index 1; index 0 is an endpoint and already kept.
    std::vector<Vec3> ring = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(1, 2, 0), Vec3(1, 3, 0)};
    const SimplifiedRing base = simplify_ring(ring, 0.05);
    REQUIRE(std::find(base.kept.begin(), base.kept.end(), 1) != base.kept.end());
    const SimplifiedRing with_offsets = add_offset_points(ring, base);
    const std::set<int> offsets(with_offsets.offset.begin(), with_offsets.offset.end());
    CHECK(offsets.count(2) == 1);
    CHECK(offsets.count(0) == 0);
  }

  TEST_CASE("scan: per-ring reduction on a planar floor scan") {
    const OrganizedScan scan = testutil::make_plane_scan(1.5, 16, 720);
    const auto rings = simplify_scan(scan, 0.05);
    CHECK(rings.size() == 16);
    std::size_t kept = 0;
    for (const auto& r : rings) kept += r.kept.size();
    CHECK(kept * 4 < scan.valid_count());  // strong reduction on smooth geometry
  }

  TEST_CASE("scan: fully invalid ring is skipped") {
    OrganizedScan scan = testutil::make_plane_scan(1.5, 16, 360);
    for (int c = 0; c < scan.columns; ++c) scan.range_at(7, c) = 0.0f;
    const auto rings = simplify_scan(scan, 0.05);
    CHECK(rings.size() == 15);
    for (const auto& r : rings) CHECK(r.ring != 7);
  }

  TEST_CASE("scan: invalid returns split a ring into separate runs") {
    OrganizedScan scan = testutil::make_plane_scan(1.5, 2, 100);
    scan.range_at(0, 50) = 0.0f;  // puncture ring 0
    const auto rings = simplify_scan(scan, 0.05);
    REQUIRE(!rings.empty());
    const SimplifiedRing& r0 = rings.front();
    REQUIRE(r0.ring == 0);
    for (const auto& [a, b] : r0.constrained_segments) {
      CHECK(!(a < 50 && b > 50));  // no segment bridges the gap
    }
  }

  TEST_CASE("scan with zero valid points yields an empty list") {
    OrganizedScan scan(4, 64);
    CHECK(simplify_scan(scan, 0.05).empty());
  }
}
