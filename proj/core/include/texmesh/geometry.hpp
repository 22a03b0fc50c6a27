#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <utility>

namespace texmesh {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec2f = Eigen::Vector2f;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;

// Rigid transform. Direction is part of the variable name at the use site
// (e.g. world_from_sensor), not of the type.
using Pose = Eigen::Isometry3d;

// Distance from p to the segment [a,b], clamped to the segment interior.
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

// Angle in radians between two vectors; 0 for degenerate input.
double angle_between(const Vec3& a, const Vec3& b);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// Twice the signed area of (a,b,c); positive when counter-clockwise.
double orient2d(const Vec2& a, const Vec2& b, const Vec2& c);

// Canonical key for an undirected vertex-index edge.
inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

inline std::uint32_t edge_key_low(std::uint64_t key) { return static_cast<std::uint32_t>(key & 0xffffffffu); }
inline std::uint32_t edge_key_high(std::uint64_t key) { return static_cast<std::uint32_t>(key >> 32); }

}  // namespace texmesh
