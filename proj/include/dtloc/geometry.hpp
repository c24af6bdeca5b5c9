// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace dtloc::geom {

// Length tolerance (meters) for boundary classification.
inline constexpr double kEps = 1e-9;

template <typename Scalar>
Scalar cross2(const Vec2T<Scalar> &a, const Vec2T<Scalar> &b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Shoelace area, positive for counter-clockwise winding.
template <typename Scalar> Scalar signed_area(std::span<const Vec2T<Scalar>> poly) {
  Scalar acc(0);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross2<Scalar>(poly[i], poly[(i + 1) % n]);
  }
  return acc / Scalar(2);
}

template <typename Scalar>
bool on_segment(const Vec2T<Scalar> &p, const Vec2T<Scalar> &a, const Vec2T<Scalar> &b,
                Scalar tol = Scalar(kEps)) {
  const Vec2T<Scalar> ab = b - a;
  const Scalar len = ab.norm();
  if (len <= tol) return (p - a).norm() <= tol;
  if (std::abs(cross2<Scalar>(ab, p - a)) / len > tol) return false;
  const Scalar t = ab.dot(p - a) / (len * len);
  return t >= -tol / len && t <= Scalar(1) + tol / len;
}

/// Strict interior test: points on an edge or vertex are outside.
template <typename Scalar>
bool point_in_polygon(std::span<const Vec2T<Scalar>> poly, const Vec2T<Scalar> &p) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto &a = poly[i];
    const auto &b = poly[j];
    if (on_segment<Scalar>(p, a, b)) return false;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const Scalar x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

/// True when the closed segments [a,b] and [c,d] share at least one point.
template <typename Scalar>
bool segments_touch(const Vec2T<Scalar> &a, const Vec2T<Scalar> &b, const Vec2T<Scalar> &c,
                    const Vec2T<Scalar> &d) {
  const Scalar d1 = cross2<Scalar>(b - a, c - a);
  const Scalar d2 = cross2<Scalar>(b - a, d - a);
  const Scalar d3 = cross2<Scalar>(d - c, a - c);
  const Scalar d4 = cross2<Scalar>(d - c, b - c);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return on_segment<Scalar>(c, a, b) || on_segment<Scalar>(d, a, b) ||
         on_segment<Scalar>(a, c, d) || on_segment<Scalar>(b, c, d);
}

/// Non-adjacent edges must not touch; adjacent edges may only share their common vertex.
template <typename Scalar> bool polygon_is_simple(std::span<const Vec2T<Scalar>> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  if (std::abs(signed_area<Scalar>(poly)) <= Scalar(kEps)) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto &a = poly[i];
    const auto &b = poly[(i + 1) % n];
    if ((b - a).norm() <= Scalar(kEps)) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_touch<Scalar>(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// Two footprints overlap when an edge pair crosses or one contains the other.
template <typename Scalar>
bool polygons_overlap(std::span<const Vec2T<Scalar>> p, std::span<const Vec2T<Scalar>> q) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto &a = p[i];
    const auto &b = p[(i + 1) % p.size()];
    for (std::size_t j = 0; j < q.size(); ++j) {
      const auto &c = q[j];
      const auto &d = q[(j + 1) % q.size()];
      const Scalar d1 = cross2<Scalar>(b - a, c - a);
      const Scalar d2 = cross2<Scalar>(b - a, d - a);
      const Scalar d3 = cross2<Scalar>(d - c, a - c);
      const Scalar d4 = cross2<Scalar>(d - c, b - c);
      if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    }
  }
  Vec2T<Scalar> cp = Vec2T<Scalar>::Zero();
  for (const auto &v : p) cp += v;
  cp /= Scalar(p.size());
  Vec2T<Scalar> cq = Vec2T<Scalar>::Zero();
  for (const auto &v : q) cq += v;
  cq /= Scalar(q.size());
  return point_in_polygon<Scalar>(q, cp) || point_in_polygon<Scalar>(p, cq);
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
template <typename Scalar>
std::vector<Vec2T<Scalar>> convex_hull(std::span<const Vec2T<Scalar>> pts) {
  std::vector<Vec2T<Scalar>> p(pts.begin(), pts.end());
  std::sort(p.begin(), p.end(), [](const auto &a, const auto &b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (p.size() < 3) return p;
  std::vector<Vec2T<Scalar>> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross2<Scalar>(h[k - 1] - h[k - 2], p[i] - h[k - 2]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2<Scalar>(h[k - 1] - h[k - 2], p[i] - h[k - 2]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

/// Oriented plane n·x = offset; the front side has n·x > offset.
template <typename Scalar> struct PlaneT {
  Vec3T<Scalar> normal;
  Scalar offset;

  Scalar signed_distance(const Vec3T<Scalar> &p) const { return normal.dot(p) - offset; }
  Vec3T<Scalar> reflect(const Vec3T<Scalar> &p) const {
    return p - Scalar(2) * signed_distance(p) * normal;
  }
};
using Plane = PlaneT<double>;

/// Sutherland-Hodgman clip keeping the part with signed distance >= 0.
template <typename Scalar>
std::vector<Vec3T<Scalar>> clip_polygon(const std::vector<Vec3T<Scalar>> &poly,
                                        const PlaneT<Scalar> &plane) {
  std::vector<Vec3T<Scalar>> out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto &cur = poly[i];
    const auto &next = poly[(i + 1) % n];
    const Scalar dc = plane.signed_distance(cur);
    const Scalar dn = plane.signed_distance(next);
    if (dc >= 0) out.push_back(cur);
    if ((dc >= 0) != (dn >= 0)) {
      const Scalar t = dc / (dc - dn);
      out.push_back(cur + t * (next - cur));
    }
  }
  return out;
}

} // namespace dtloc::geom
