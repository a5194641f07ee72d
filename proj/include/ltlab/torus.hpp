#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "ltlab/errors.hpp"

namespace ltlab {

// Site on the N x N discrete torus. Coordinates are kept reduced to [0, N).
struct TorusPoint {
  int i = 0;
  int j = 0;

  friend bool operator==(TorusPoint a, TorusPoint b) { return a.i == b.i && a.j == b.j; }
  friend bool operator!=(TorusPoint a, TorusPoint b) { return !(a == b); }
  friend bool operator<(TorusPoint a, TorusPoint b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  }
};

inline int wrap_coord(int v, int side) {
  int m = v % side;
  return m < 0 ? m + side : m;
}

inline TorusPoint torus_point(int side, int i, int j) {
  return {wrap_coord(i, side), wrap_coord(j, side)};
}

inline int site_index(int side, TorusPoint p) { return p.i * side + p.j; }

inline TorusPoint site_at(int side, int index) { return {index / side, index % side}; }

// Shortest signed representative of (a - b) mod side, in (-side/2, side/2].
inline int axis_gap(int a, int b, int side) {
  int d = std::abs(a - b);
  return std::min(d, side - d);
}

inline long long torus_dist2(int side, TorusPoint x, TorusPoint y) {
  long long di = axis_gap(x.i, y.i, side);
  long long dj = axis_gap(x.j, y.j, side);
  return di * di + dj * dj;
}

// Euclidean distance between wrapped representatives.
inline double torus_distance(int side, TorusPoint x, TorusPoint y) {
  return std::sqrt(static_cast<double>(torus_dist2(side, x, y)));
}

// Set of sites on a fixed torus with O(1) membership and deterministic
// (row-major) enumeration order.
class PointSet {
 public:
  explicit PointSet(int side) : side_(side), mask_(static_cast<std::size_t>(side) * side, 0) {
    if (side < 2) throw GeometryViolation("PointSet: side must be at least 2");
  }

  static PointSet of(int side, std::initializer_list<TorusPoint> pts) {
    PointSet s(side);
    for (TorusPoint p : pts) s.insert(p);
    return s;
  }

  int side() const { return side_; }
  long size() const { return count_; }
  bool empty() const { return count_ == 0; }
  bool full() const { return count_ == static_cast<long>(mask_.size()); }

  bool contains(TorusPoint p) const { return mask_[site_index(side_, p)] != 0; }
  bool contains_index(int idx) const { return mask_[idx] != 0; }

  void insert(TorusPoint p) { insert_index(site_index(side_, p)); }
  void insert_index(int idx) {
    if (!mask_[idx]) {
      mask_[idx] = 1;
      ++count_;
    }
  }

  std::vector<std::int32_t> indices() const {
    std::vector<std::int32_t> out;
    out.reserve(count_);
    for (std::int32_t k = 0; k < static_cast<std::int32_t>(mask_.size()); ++k)
      if (mask_[k]) out.push_back(k);
    return out;
  }

  PointSet complement() const {
    PointSet s(side_);
    for (std::size_t k = 0; k < mask_.size(); ++k)
      if (!mask_[k]) s.insert_index(static_cast<int>(k));
    return s;
  }

 private:
  int side_;
  long count_ = 0;
  std::vector<std::uint8_t> mask_;
};

namespace detail {

// Ball enumeration without the r < side/2 guard; correct for any r because it
// scans candidate sites exhaustively once the offset window would self-wrap.
inline PointSet ball_unguarded(int side, TorusPoint center, double r) {
  PointSet s(side);
  if (r <= 0) return s;
  double r2 = r * r;
  int reach = static_cast<int>(std::ceil(r));
  if (2 * reach + 1 >= side) {
    for (int idx = 0; idx < side * side; ++idx)
      if (static_cast<double>(torus_dist2(side, center, site_at(side, idx))) < r2)
        s.insert_index(idx);
    return s;
  }
  for (int di = -reach; di <= reach; ++di)
    for (int dj = -reach; dj <= reach; ++dj)
      if (static_cast<double>(di) * di + static_cast<double>(dj) * dj < r2)
        s.insert(torus_point(side, center.i + di, center.j + dj));
  return s;
}

}  // namespace detail

// Open discrete ball D(center, r) = { y : d(center, y) < r }.
// Radii at or above side/2 wrap around the torus and are rejected.
inline PointSet ball(int side, TorusPoint center, double r) {
  if (r <= 0) throw GeometryViolation("ball: radius must be positive");
  if (2 * r >= side) throw RadiusTooLarge("ball: need r < side/2");
  return detail::ball_unguarded(side, center, r);
}

// Exterior boundary: sites outside A adjacent (4-neighbour) to A.
inline PointSet boundary(int side, const PointSet& a) {
  if (a.side() != side) throw GeometryViolation("boundary: side mismatch");
  if (a.empty()) throw EmptyRegion("boundary: region is empty");
  if (a.full()) throw FullTorus("boundary: region is the whole torus");
  PointSet out(side);
  for (std::int32_t idx : a.indices()) {
    TorusPoint p = site_at(side, idx);
    const TorusPoint nbrs[4] = {
        torus_point(side, p.i + 1, p.j), torus_point(side, p.i - 1, p.j),
        torus_point(side, p.i, p.j + 1), torus_point(side, p.i, p.j - 1)};
    for (TorusPoint q : nbrs)
      if (!a.contains(q)) out.insert(q);
  }
  return out;
}

inline PointSet ball_boundary(int side, TorusPoint center, double r) {
  return boundary(side, ball(side, center, r));
}

}  // namespace ltlab
