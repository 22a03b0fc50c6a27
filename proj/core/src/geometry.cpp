#include "texmesh/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace texmesh {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double denom = a.norm() * b.norm();
  if (denom <= 0.0) return 0.0;
  return std::acos(std::clamp(a.dot(b) / denom, -1.0, 1.0));
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

}  // namespace texmesh
