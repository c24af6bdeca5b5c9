// SPDX-License-Identifier: Apache-2.0
#include "dtloc/raytrace.hpp"

#include "dtloc/error.hpp"
#include "dtloc/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dtloc {

namespace {

constexpr double kClipTol = 1e-9;
constexpr double kMinApertureArea = 1e-7;
constexpr double kBeamTol = 1e-6;
constexpr int kMaxSupportedDepth = 16;

double polygon_area(const std::vector<Vec3> &poly) {
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    acc += poly[i].cross(poly[(i + 1) % poly.size()]);
  }
  return 0.5 * acc.norm();
}

void append_beam_planes(const Vec3 &source, const std::vector<Vec3> &aperture,
                        std::vector<geom::Plane> &planes) {
  Vec3 centroid = Vec3::Zero();
  for (const auto &v : aperture) centroid += v;
  centroid /= static_cast<double>(aperture.size());
  for (std::size_t i = 0; i < aperture.size(); ++i) {
    const Vec3 a = aperture[i] - source;
    const Vec3 b = aperture[(i + 1) % aperture.size()] - source;
    Vec3 n = a.cross(b);
    const double len = n.norm();
    if (len < 1e-12) continue;
    n /= len;
    if (n.dot(centroid - source) < 0) n = -n;
    planes.push_back({n, n.dot(source)});
  }
}

double wrap_phase(double phase) { return std::remainder(phase, 2.0 * kPi); }

void set_angles(const Vec3 &dir, double &az_deg, double &el_deg) {
  az_deg = rad2deg(std::atan2(dir.y(), dir.x()));
  el_deg = rad2deg(std::atan2(dir.z(), std::hypot(dir.x(), dir.y())));
}

} // namespace

double fspl_db(double distance_m, double freq_hz) {
  return 20.0 * std::log10(4.0 * kPi * distance_m * freq_hz / kSpeedOfLight);
}

Bounds2 scene_bounds(const Scene &scene, std::span<const Vec3> extra) {
  Vec2 lo = scene.bs.position.head<2>();
  Vec2 hi = lo;
  auto grow = [&](const Vec2 &p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto &b : scene.buildings) {
    for (const auto &v : b.footprint) grow(v);
  }
  grow(scene.grid.origin);
  grow(scene.grid.origin + scene.grid.extent);
  for (const auto &p : extra) grow(p.head<2>());
  const Vec2 margin(1.0, 1.0);
  return {lo - margin, hi + margin};
}

std::vector<Face> scene_faces(const Scene &scene, const Bounds2 &bounds) {
  std::vector<Face> faces;
  Face ground;
  ground.kind = Face::Kind::Ground;
  ground.plane = {Vec3::UnitZ(), 0.0};
  ground.polygon = {Vec3(bounds.lo.x(), bounds.lo.y(), 0), Vec3(bounds.hi.x(), bounds.lo.y(), 0),
                    Vec3(bounds.hi.x(), bounds.hi.y(), 0), Vec3(bounds.lo.x(), bounds.hi.y(), 0)};
  ground.aperture = ground.polygon;
  ground.loss_db = scene.material(scene.ground_material).reflection_loss_db;
  faces.push_back(std::move(ground));

  for (std::size_t bi = 0; bi < scene.buildings.size(); ++bi) {
    const auto &b = scene.buildings[bi];
    const double loss = scene.material(b.material).reflection_loss_db;
    const std::size_t n = b.footprint.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 &p0 = b.footprint[i];
      const Vec2 &p1 = b.footprint[(i + 1) % n];
      const Vec2 edge = p1 - p0;
      const Vec2 out = Vec2(edge.y(), -edge.x()).normalized();
      Face wall;
      wall.kind = Face::Kind::Wall;
      wall.building = static_cast<int>(bi);
      wall.plane = {Vec3(out.x(), out.y(), 0), out.dot(p0)};
      wall.polygon = {Vec3(p0.x(), p0.y(), 0), Vec3(p1.x(), p1.y(), 0),
                      Vec3(p1.x(), p1.y(), b.height), Vec3(p0.x(), p0.y(), b.height)};
      wall.aperture = wall.polygon;
      wall.loss_db = loss;
      faces.push_back(std::move(wall));
    }
    Face roof;
    roof.kind = Face::Kind::Roof;
    roof.building = static_cast<int>(bi);
    roof.plane = {Vec3::UnitZ(), b.height};
    for (const auto &v : b.footprint) roof.polygon.emplace_back(v.x(), v.y(), b.height);
    for (const auto &v : geom::convex_hull<double>(b.footprint)) {
      roof.aperture.emplace_back(v.x(), v.y(), b.height);
    }
    roof.loss_db = loss;
    faces.push_back(std::move(roof));
  }
  return faces;
}

ImageTree::ImageTree(const Scene &scene, const Vec3 &tx, int max_depth, const Bounds2 &bounds)
    : scene_(&scene), tx_(tx), max_depth_(max_depth), bounds_(bounds),
      faces_(scene_faces(scene, bounds)) {
  if (max_depth < 0 || max_depth > kMaxSupportedDepth) {
    throw ValidationError("max_depth", "must be in [0, " + std::to_string(kMaxSupportedDepth) + "]");
  }
  if (max_depth == 0) return;

  // Apertures are only needed while expanding, so they live beside the node list.
  std::vector<std::vector<Vec3>> apertures;
  auto add_node = [&](int face, int parent, int depth, const Vec3 &source,
                      std::vector<Vec3> aperture) {
    Node node;
    node.face = face;
    node.parent = parent;
    node.depth = depth;
    node.image = faces_[static_cast<std::size_t>(face)].plane.reflect(source);
    node.first_plane = beam_planes_.size();
    append_beam_planes(node.image, aperture, beam_planes_);
    node.plane_count = beam_planes_.size() - node.first_plane;
    nodes_.push_back(node);
    apertures.push_back(std::move(aperture));
  };

  for (std::size_t f = 0; f < faces_.size(); ++f) {
    if (faces_[f].plane.signed_distance(tx) > geom::kEps) {
      add_node(static_cast<int>(f), -1, 1, tx, faces_[f].aperture);
    }
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node node = nodes_[i];
    if (node.depth >= max_depth) continue;
    const Face &from = faces_[static_cast<std::size_t>(node.face)];
    for (std::size_t g = 0; g < faces_.size(); ++g) {
      if (static_cast<int>(g) == node.face) continue;
      const Face &to = faces_[g];
      if (to.plane.signed_distance(node.image) <= geom::kEps) continue;
      std::vector<Vec3> poly =
          geom::clip_polygon(to.aperture, geom::Plane{from.plane.normal, from.plane.offset - kClipTol});
      for (std::size_t k = 0; k < node.plane_count && poly.size() >= 3; ++k) {
        const auto &side = beam_planes_[node.first_plane + k];
        poly = geom::clip_polygon(poly, geom::Plane{side.normal, side.offset - kClipTol});
      }
      if (poly.size() < 3 || polygon_area(poly) < kMinApertureArea) continue;
      add_node(static_cast<int>(g), static_cast<int>(i), node.depth + 1, node.image, std::move(poly));
    }
  }
}

bool ImageTree::reflection_point_ok(const Face &face, const Vec3 &p) const {
  switch (face.kind) {
  case Face::Kind::Ground:
    return bounds_.contains(p.head<2>()) && !point_in_footprint(*scene_, p.head<2>());
  case Face::Kind::Wall: {
    const Vec3 &p0 = face.polygon[0];
    const Vec3 edge = face.polygon[1] - p0;
    const double len2 = edge.squaredNorm();
    const double u = edge.dot(p - p0) / len2;
    const double u_tol = geom::kEps / std::sqrt(len2);
    const double h = face.polygon[2].z();
    return u > u_tol && u < 1.0 - u_tol && p.z() > geom::kEps && p.z() < h - geom::kEps;
  }
  case Face::Kind::Roof:
    return geom::point_in_polygon<double>(
        scene_->buildings[static_cast<std::size_t>(face.building)].footprint, Vec2(p.head<2>()));
  }
  return false;
}

bool ImageTree::validate(const Node &leaf, const Vec3 &rx, Path &out) const {
  std::array<Vec3, kMaxSupportedDepth> pts;
  std::array<int, kMaxSupportedDepth> face_ids{};
  const int n = leaf.depth;
  Vec3 target = rx;
  const Node *node = &leaf;
  for (int i = n - 1; i >= 0; --i) {
    const Face &f = faces_[static_cast<std::size_t>(node->face)];
    const double dt = f.plane.signed_distance(target);
    if (dt <= geom::kEps) return false;
    const double di = f.plane.signed_distance(node->image);
    const double s = di / (di - dt);
    Vec3 p = node->image + s * (target - node->image);
    // Snap onto the plane to keep later plane tests exact.
    p -= f.plane.signed_distance(p) * f.plane.normal;
    if (!reflection_point_ok(f, p)) return false;
    pts[static_cast<std::size_t>(i)] = p;
    face_ids[static_cast<std::size_t>(i)] = node->face;
    target = p;
    node = node->parent >= 0 ? &nodes_[static_cast<std::size_t>(node->parent)] : nullptr;
  }

  double length = 0.0;
  double loss = 0.0;
  Vec3 prev = tx_;
  for (int i = 0; i <= n; ++i) {
    const Vec3 &next = i < n ? pts[static_cast<std::size_t>(i)] : rx;
    const double leg = (next - prev).norm();
    if (leg <= geom::kEps) return false;
    if (segment_occluded(*scene_, prev, next)) return false;
    length += leg;
    prev = next;
  }

  out.bounces = n;
  out.faces.assign(face_ids.begin(), face_ids.begin() + n);
  out.points.assign(pts.begin(), pts.begin() + n);
  for (int i = 0; i < n; ++i) loss += faces_[static_cast<std::size_t>(face_ids[static_cast<std::size_t>(i)])].loss_db;
  out.delay_s = length / kSpeedOfLight;
  out.gain_db = -fspl_db(length, scene_->carrier_hz) - loss;
  out.phase_rad = wrap_phase(-2.0 * kPi * scene_->carrier_hz * out.delay_s + kPi * n);
  set_angles(pts[0] - tx_, out.aod_az_deg, out.aod_el_deg);
  set_angles(pts[static_cast<std::size_t>(n - 1)] - rx, out.aoa_az_deg, out.aoa_el_deg);
  return true;
}

PathSet ImageTree::trace(const Vec3 &rx) const {
  if (point_in_building(*scene_, rx)) throw ValidationError("rx", "inside a building");
  if (!bounds_.contains(rx.head<2>())) throw ValidationError("rx", "outside the traced area");

  PathSet set;
  set.tx = tx_;
  set.rx = rx;
  const double direct = (rx - tx_).norm();
  if (direct > geom::kEps && !segment_occluded(*scene_, tx_, rx)) {
    Path los;
    los.delay_s = direct / kSpeedOfLight;
    los.gain_db = -fspl_db(direct, scene_->carrier_hz);
    los.phase_rad = wrap_phase(-2.0 * kPi * scene_->carrier_hz * los.delay_s);
    set_angles(rx - tx_, los.aod_az_deg, los.aod_el_deg);
    set_angles(tx_ - rx, los.aoa_az_deg, los.aoa_el_deg);
    set.paths.push_back(std::move(los));
  }

  for (const Node &node : nodes_) {
    const Face &f = faces_[static_cast<std::size_t>(node.face)];
    if (f.plane.signed_distance(rx) <= geom::kEps) continue;
    bool in_beam = true;
    for (std::size_t k = 0; k < node.plane_count; ++k) {
      if (beam_planes_[node.first_plane + k].signed_distance(rx) < -kBeamTol) {
        in_beam = false;
        break;
      }
    }
    if (!in_beam) continue;
    Path path;
    if (validate(node, rx, path)) set.paths.push_back(std::move(path));
  }

  std::sort(set.paths.begin(), set.paths.end(), [](const Path &a, const Path &b) {
    if (a.delay_s != b.delay_s) return a.delay_s < b.delay_s;
    return a.faces < b.faces;
  });
  return set;
}

PathSet trace(const Scene &scene, const Vec3 &tx, const Vec3 &rx, int max_depth) {
  const std::array<Vec3, 2> extra{tx, rx};
  const ImageTree tree(scene, tx, max_depth, scene_bounds(scene, extra));
  return tree.trace(rx);
}

PathSet trace(const Scene &scene, const Vec3 &rx, int max_depth) {
  return trace(scene, scene.bs.position, rx, max_depth);
}

std::vector<PathSet> trace_all(const Scene &scene, const PositionGrid &grid, int max_depth,
                               int workers) {
  const ImageTree tree(scene, scene.bs.position, max_depth, scene_bounds(scene, grid.positions()));
  std::vector<PathSet> out(grid.positions().size());
  parallel_for(out.size(), workers, [&](std::size_t p) { out[p] = tree.trace(grid.positions()[p]); });
  return out;
}

} // namespace dtloc
