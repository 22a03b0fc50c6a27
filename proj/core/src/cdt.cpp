#include "texmesh/cdt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace texmesh {
namespace {

constexpr int kNone = -1;

struct Tri {
  std::array<std::uint32_t, 3> v;
  std::array<int, 3> nbr;  // nbr[i] lies across the edge opposite v[i]
  bool alive = true;
};

// d strictly inside the circumcircle of CCW triangle (a,b,c) when positive.
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad2 = adx * adx + ady * ady;
  const double bd2 = bdx * bdx + bdy * bdy;
  const double cd2 = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) + ad2 * (bdx * cdy - cdx * bdy);
}

class Builder {
 public:
  Builder(const std::vector<Vec2>& points, double span)
      : pts_(points), eps_orient_(1e-12 * span * span), eps_incircle_(1e-10 * span * span * span * span) {}

  void init_super_triangle(const Vec2& lo, const Vec2& hi) {
    const Vec2 c = 0.5 * (lo + hi);
    const double r = 64.0 * std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1.0});
    super_ = static_cast<std::uint32_t>(pts_.size());
    pts_.push_back(c + Vec2(-2.0 * r, -r));
    pts_.push_back(c + Vec2(2.0 * r, -r));
    pts_.push_back(c + Vec2(0.0, 2.0 * r));
    tris_.push_back(Tri{{super_, super_ + 1, super_ + 2}, {kNone, kNone, kNone}, true});
  }

  void insert_point(std::uint32_t ip) {
    const Vec2& p = pts_[ip];
    const int t = locate(p);
    if (t == kNone) throw std::runtime_error("cdt: point location failed");

    const auto& tv = tris_[t].v;
    const double o0 = orient2d(pts_[tv[1]], pts_[tv[2]], p);
    const double o1 = orient2d(pts_[tv[2]], pts_[tv[0]], p);
    const double o2 = orient2d(pts_[tv[0]], pts_[tv[1]], p);

    int zero_count = (std::abs(o0) <= eps_orient_) + (std::abs(o1) <= eps_orient_) + (std::abs(o2) <= eps_orient_);
    if (zero_count >= 2) return;  // coincides with an existing vertex; skip
    if (zero_count == 1) {
      const int edge = std::abs(o0) <= eps_orient_ ? 0 : (std::abs(o1) <= eps_orient_ ? 1 : 2);
      insert_on_edge(t, edge, ip);
    } else {
      insert_interior(t, ip);
    }
  }

  // Recovers constraint segment (a,b) by flipping away crossing edges.
  void insert_segment(std::uint32_t a, std::uint32_t b) {
    if (edge_triangle(a, b).first != kNone) {
      constrained_.insert(edge_key(a, b));
      return;
    }
    std::deque<std::pair<std::uint32_t, std::uint32_t>> crossing = collect_crossing_edges(a, b);
    std::size_t stall = 0;
    while (!crossing.empty()) {
      if (stall > crossing.size() * crossing.size() + 64) {
        throw std::runtime_error("cdt: constraint recovery stalled");
      }
      auto [u, v] = crossing.front();
      crossing.pop_front();
      auto [t1, e1] = edge_triangle(u, v);
      if (t1 == kNone) continue;  // already flipped away
      const int t2 = tris_[t1].nbr[e1];
      if (t2 == kNone) throw std::runtime_error("cdt: constraint crosses hull");
      if (!flip_makes_convex_quad(t1, e1)) {
        crossing.emplace_back(u, v);
        ++stall;
        continue;
      }
      stall = 0;
      const auto diag = flip(t1, e1);
      if (segments_cross(pts_[a], pts_[b], pts_[diag.first], pts_[diag.second])) {
        crossing.emplace_back(diag);
      }
    }
    if (edge_triangle(a, b).first == kNone) throw std::runtime_error("cdt: failed to recover constraint");
    constrained_.insert(edge_key(a, b));
  }

  Cdt2dResult finish() {
    Cdt2dResult out;
    for (const Tri& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= super_ || t.v[1] >= super_ || t.v[2] >= super_) continue;
      out.triangles.push_back(t.v);
    }
    out.constrained_edges = std::move(constrained_);
    return out;
  }

  double eps_orient() const { return eps_orient_; }

  bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) const {
    const double d1 = orient2d(p1, p2, q1);
    const double d2 = orient2d(p1, p2, q2);
    const double d3 = orient2d(q1, q2, p1);
    const double d4 = orient2d(q1, q2, p2);
    return ((d1 > eps_orient_ && d2 < -eps_orient_) || (d1 < -eps_orient_ && d2 > eps_orient_)) &&
           ((d3 > eps_orient_ && d4 < -eps_orient_) || (d3 < -eps_orient_ && d4 > eps_orient_));
  }

 private:
  int locate(const Vec2& p) {
    int t = hint_ != kNone && tris_[hint_].alive ? hint_ : first_alive();
    for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
      const auto& tv = tris_[t].v;
      int next = kNone;
      for (int i = 0; i < 3; ++i) {
        const Vec2& ea = pts_[tv[(i + 1) % 3]];
        const Vec2& eb = pts_[tv[(i + 2) % 3]];
        if (orient2d(ea, eb, p) < -eps_orient_) {
          next = tris_[t].nbr[i];
          break;
        }
      }
      if (next == kNone) return t;
      t = next;
    }
    // Degenerate walk; fall back to a linear containment scan.
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      if (!tris_[i].alive) continue;
      const auto& tv = tris_[i].v;
      bool inside = true;
      for (int e = 0; e < 3 && inside; ++e) {
        inside = orient2d(pts_[tv[(e + 1) % 3]], pts_[tv[(e + 2) % 3]], p) >= -eps_orient_;
      }
      if (inside) return i;
    }
    return kNone;
  }

  int first_alive() const {
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
      if (tris_[i].alive) return i;
    return kNone;
  }

  void set_neighbor(int t, std::uint32_t ea, std::uint32_t eb, int nb) {
    if (t == kNone) return;
    for (int i = 0; i < 3; ++i) {
      const std::uint32_t a = tris_[t].v[(i + 1) % 3];
      const std::uint32_t b = tris_[t].v[(i + 2) % 3];
      if ((a == ea && b == eb) || (a == eb && b == ea)) {
        tris_[t].nbr[i] = nb;
        return;
      }
    }
  }

  int neighbor_across(int t, std::uint32_t ea, std::uint32_t eb) const {
    for (int i = 0; i < 3; ++i) {
      const std::uint32_t a = tris_[t].v[(i + 1) % 3];
      const std::uint32_t b = tris_[t].v[(i + 2) % 3];
      if ((a == ea && b == eb) || (a == eb && b == ea)) return tris_[t].nbr[i];
    }
    return kNone;
  }

  void insert_interior(int t, std::uint32_t p) {
    const auto tv = tris_[t].v;
    const auto tn = tris_[t].nbr;

    const int t0 = t;
    const int t1 = static_cast<int>(tris_.size());
    const int t2 = t1 + 1;
    tris_[t0] = Tri{{tv[0], tv[1], p}, {t1, t2, tn[2]}, true};
    tris_.push_back(Tri{{tv[1], tv[2], p}, {t2, t0, tn[0]}, true});
    tris_.push_back(Tri{{tv[2], tv[0], p}, {t0, t1, tn[1]}, true});

    set_neighbor(tn[2], tv[0], tv[1], t0);
    set_neighbor(tn[0], tv[1], tv[2], t1);
    set_neighbor(tn[1], tv[2], tv[0], t2);

    hint_ = t0;
    legalize(t0, 2, p);
    legalize(t1, 2, p);
    legalize(t2, 2, p);
  }

  void insert_on_edge(int t, int edge, std::uint32_t p) {
    // Edge (a,b) opposite tv[edge]; apex c on this side, d across.
    const std::uint32_t a = tris_[t].v[(edge + 1) % 3];
    const std::uint32_t b = tris_[t].v[(edge + 2) % 3];
    const std::uint32_t c = tris_[t].v[edge];
    const int u = tris_[t].nbr[edge];
    if (u == kNone) {
      // On the hull of the super-triangle; treat as interior of t.
      insert_interior(t, p);
      return;
    }
    const int ui = index_of_opposite(u, a, b);
    const std::uint32_t d = tris_[u].v[ui];

    const int n_ca = neighbor_across(t, c, a);
    const int n_bc = neighbor_across(t, b, c);
    const int n_ad = neighbor_across(u, a, d);
    const int n_db = neighbor_across(u, d, b);

    const int t0 = t;                                   // (a, p, c)
    const int t1 = u;                                   // (p, b, c)
    const int t2 = static_cast<int>(tris_.size());      // (p, a, d)
    const int t3 = t2 + 1;                              // (b, p, d)
    tris_[t0] = Tri{{a, p, c}, {t1, n_ca, t2}, true};
    tris_[t1] = Tri{{p, b, c}, {n_bc, t0, t3}, true};
    tris_.push_back(Tri{{p, a, d}, {n_ad, t3, t0}, true});
    tris_.push_back(Tri{{b, p, d}, {t2, n_db, t1}, true});

    set_neighbor(n_ca, c, a, t0);
    set_neighbor(n_bc, b, c, t1);
    set_neighbor(n_ad, a, d, t2);
    set_neighbor(n_db, d, b, t3);

    hint_ = t0;
    legalize(t0, 1, p);  // edge (c,a)
    legalize(t1, 0, p);  // edge (b,c)
    legalize(t2, 0, p);  // edge (a,d)
    legalize(t3, 1, p);  // edge (d,b)
  }

  int index_of_opposite(int t, std::uint32_t ea, std::uint32_t eb) const {
    for (int i = 0; i < 3; ++i) {
      const std::uint32_t a = tris_[t].v[(i + 1) % 3];
      const std::uint32_t b = tris_[t].v[(i + 2) % 3];
      if ((a == ea && b == eb) || (a == eb && b == ea)) return i;
    }
    throw std::runtime_error("cdt: broken adjacency");
  }

  // Lawson legalization of the edge opposite tris_[t].v[i]; p is the freshly
  // inserted vertex and must equal that apex.
  void legalize(int t, int i, std::uint32_t p) {
    struct Item {
      int t;
      int i;
    };
    std::vector<Item> stack{{t, i}};
    while (!stack.empty()) {
      auto [ct, ci] = stack.back();
      stack.pop_back();
      if (!tris_[ct].alive || tris_[ct].v[ci] != p) continue;
      const int u = tris_[ct].nbr[ci];
      if (u == kNone) continue;
      const std::uint32_t a = tris_[ct].v[(ci + 1) % 3];
      const std::uint32_t b = tris_[ct].v[(ci + 2) % 3];
      const std::uint32_t d = tris_[u].v[index_of_opposite(u, a, b)];
      if (incircle(pts_[a], pts_[b], pts_[p], pts_[d]) <= eps_incircle_) continue;
      flip(ct, ci);
      // flip() leaves p at v[2] of both result triangles; the far edges
      // (opposite p) are the ones that may have become illegal.
      stack.push_back({ct, 2});
      stack.push_back({u, 2});
    }
  }

 public:
  // Flips the edge opposite tris_[t].v[i]. Returns the new diagonal (c,d).
  // Postcondition: both triangles are (a,d,c) and (d,b,c) with the original
  // apexes last, i.e. the apex of t stays at v[2] of both results.
  std::pair<std::uint32_t, std::uint32_t> flip(int t, int i) {
    const int u = tris_[t].nbr[i];
    const std::uint32_t c = tris_[t].v[i];
    const std::uint32_t a = tris_[t].v[(i + 1) % 3];
    const std::uint32_t b = tris_[t].v[(i + 2) % 3];
    const std::uint32_t d = tris_[u].v[index_of_opposite(u, a, b)];

    const int n_ca = neighbor_across(t, c, a);
    const int n_bc = neighbor_across(t, b, c);
    const int n_ad = neighbor_across(u, a, d);
    const int n_db = neighbor_across(u, d, b);

    tris_[t] = Tri{{a, d, c}, {u, n_ca, n_ad}, true};   // edges: (d,c)->u, (c,a)->n_ca, (a,d)->n_ad
    tris_[u] = Tri{{d, b, c}, {n_bc, t, n_db}, true};   // edges: (b,c)->n_bc, (c,d)->t, (d,b)->n_db

    set_neighbor(n_ad, a, d, t);
    set_neighbor(n_bc, b, c, u);
    return {c, d};
  }

  bool flip_makes_convex_quad(int t, int i) const {
    const int u = tris_[t].nbr[i];
    if (u == kNone) return false;
    const std::uint32_t c = tris_[t].v[i];
    const std::uint32_t a = tris_[t].v[(i + 1) % 3];
    const std::uint32_t b = tris_[t].v[(i + 2) % 3];
    const std::uint32_t d = tris_[u].v[index_of_opposite(u, a, b)];
    return orient2d(pts_[a], pts_[d], pts_[c]) > eps_orient_ &&
           orient2d(pts_[d], pts_[b], pts_[c]) > eps_orient_;
  }

  // Triangle containing edge (a,b), as (triangle, opposite-vertex index).
  std::pair<int, int> edge_triangle(std::uint32_t a, std::uint32_t b) const {
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (!tris_[t].alive) continue;
      for (int i = 0; i < 3; ++i) {
        const std::uint32_t ea = tris_[t].v[(i + 1) % 3];
        const std::uint32_t eb = tris_[t].v[(i + 2) % 3];
        if ((ea == a && eb == b) || (ea == b && eb == a)) return {t, i};
      }
    }
    return {kNone, kNone};
  }

 private:
  std::deque<std::pair<std::uint32_t, std::uint32_t>> collect_crossing_edges(std::uint32_t a, std::uint32_t b) {
    std::deque<std::pair<std::uint32_t, std::uint32_t>> crossing;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      if (!tris_[t].alive) continue;
      for (int i = 0; i < 3; ++i) {
        const std::uint32_t ea = tris_[t].v[(i + 1) % 3];
        const std::uint32_t eb = tris_[t].v[(i + 2) % 3];
        if (ea > eb) continue;  // visit each undirected edge once
        if (ea == a || ea == b || eb == a || eb == b) continue;
        if (segments_cross(pts_[a], pts_[b], pts_[ea], pts_[eb])) crossing.emplace_back(ea, eb);
      }
    }
    return crossing;
  }

  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::unordered_set<std::uint64_t> constrained_;
  std::uint32_t super_ = 0;
  int hint_ = kNone;
  double eps_orient_;
  double eps_incircle_;
};

}  // namespace

std::optional<Cdt2dResult> constrained_delaunay(const std::vector<Vec2>& points,
                                                const std::vector<std::pair<int, int>>& constraints) {
  const std::size_t n = points.size();
  if (n < 3) return std::nullopt;

  Vec2 lo = points[0], hi = points[0];
  for (const Vec2& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});

  // Collinearity test against the two most distant points found greedily.
  std::size_t far_a = 0;
  for (std::size_t i = 1; i < n; ++i)
    if ((points[i] - points[far_a]).squaredNorm() > 0) break;
  std::size_t far_b = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (points[i] - points[far_a]).squaredNorm();
    if (d > best) {
      best = d;
      far_b = i;
    }
  }
  double max_orient = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_orient = std::max(max_orient, std::abs(orient2d(points[far_a], points[far_b], points[i])));
  }
  if (max_orient <= 1e-12 * span * span) return std::nullopt;

  Builder builder(points, span);
  builder.init_super_triangle(lo, hi);
  for (std::size_t i = 0; i < n; ++i) builder.insert_point(static_cast<std::uint32_t>(i));

  for (const auto& [ca, cb] : constraints) {
    if (ca < 0 || cb < 0 || ca >= static_cast<int>(n) || cb >= static_cast<int>(n) || ca == cb) {
      throw std::invalid_argument("cdt: constraint references invalid vertex");
    }
    // Split constraints at vertices lying on the segment so recovery only
    // ever deals with proper crossings.
    const Vec2& pa = points[ca];
    const Vec2& pb = points[cb];
    const Vec2 dir = pb - pa;
    const double len2 = dir.squaredNorm();
    std::vector<std::pair<double, int>> on_segment{{0.0, ca}, {1.0, cb}};
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<int>(i) == ca || static_cast<int>(i) == cb) continue;
      const double t = (points[i] - pa).dot(dir) / len2;
      if (t <= 0.0 || t >= 1.0) continue;
      const Vec2 proj = pa + t * dir;
      if ((points[i] - proj).norm() <= 1e-9 * span) on_segment.emplace_back(t, static_cast<int>(i));
    }
    std::sort(on_segment.begin(), on_segment.end());
    for (std::size_t i = 0; i + 1 < on_segment.size(); ++i) {
      builder.insert_segment(static_cast<std::uint32_t>(on_segment[i].second),
                             static_cast<std::uint32_t>(on_segment[i + 1].second));
    }
  }
  return builder.finish();
}

}  // namespace texmesh
