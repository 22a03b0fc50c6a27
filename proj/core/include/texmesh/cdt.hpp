#pragma once

#include "texmesh/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_set>
#include <utility>
#include <vector>

namespace texmesh {

// Constrained Delaunay triangulation of 2D points via incremental Lawson
// insertion plus Sloan-style constraint recovery. Triangles are CCW and index
// the input point array. Returns nullopt for fewer than 3 points or
// (near-)collinear input.
struct Cdt2dResult {
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::unordered_set<std::uint64_t> constrained_edges;  // edge_key of realized constraints
};

std::optional<Cdt2dResult> constrained_delaunay(const std::vector<Vec2>& points,
                                                const std::vector<std::pair<int, int>>& constraints);

}  // namespace texmesh
