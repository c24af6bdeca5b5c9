// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/geometry.hpp"
#include "dtloc/scene.hpp"

#include <iosfwd>
#include <vector>

namespace dtloc {

inline constexpr int kDefaultMaxDepth = 5;

/// One specular propagation path.
struct Path {
  /// Negative; free-space loss over the unfolded length plus per-bounce losses.
  double gain_db = 0.0;
  double phase_rad = 0.0;
  double delay_s = 0.0;
  double aod_az_deg = 0.0;
  double aod_el_deg = 0.0;
  /// Direction from the receiver toward the last interaction point.
  double aoa_az_deg = 0.0;
  double aoa_el_deg = 0.0;
  int bounces = 0;
  /// Reflecting face ids in bounce order; the path's identity.
  std::vector<int> faces;
  std::vector<Vec3> points;

  bool operator==(const Path &) const = default;
};

struct PathSet {
  Vec3 tx = Vec3::Zero();
  Vec3 rx = Vec3::Zero();
  /// Ascending delay; ties ordered by face sequence.
  std::vector<Path> paths;

  bool operator==(const PathSet &) const = default;
};

/// Friis free-space loss in dB (positive).
double fspl_db(double distance_m, double freq_hz);

/// A reflecting surface: the ground rectangle, a building wall, or a roof.
struct Face {
  enum class Kind { Ground, Wall, Roof };
  Kind kind = Kind::Ground;
  int building = -1;
  geom::Plane plane;
  /// Exact face outline (the roof keeps the footprint, possibly concave).
  std::vector<Vec3> polygon;
  /// Convex outline used to bound reflection beams.
  std::vector<Vec3> aperture;
  double loss_db = 0.0;
};

/// Axis-aligned horizontal bounds that must contain every receiver traced with a tree.
struct Bounds2 {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();
  bool contains(const Vec2 &p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

/// Image-source tree rooted at a transmitter: every face sequence up to `max_depth` whose
/// reflection beam is non-empty. Building it is independent of the receiver, so one tree
/// serves a whole grid.
class ImageTree {
public:
  ImageTree(const Scene &scene, const Vec3 &tx, int max_depth, const Bounds2 &bounds);

  /// Throws ValidationError when rx is inside a building or outside the tree bounds.
  PathSet trace(const Vec3 &rx) const;

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<Face> &faces() const { return faces_; }
  const Bounds2 &bounds() const { return bounds_; }

private:
  struct Node {
    int face = -1;
    int parent = -1;
    int depth = 0;
    Vec3 image = Vec3::Zero();
    std::size_t first_plane = 0;
    std::size_t plane_count = 0;
  };

  bool validate(const Node &leaf, const Vec3 &rx, Path &out) const;
  bool reflection_point_ok(const Face &face, const Vec3 &p) const;

  const Scene *scene_;
  Vec3 tx_;
  int max_depth_;
  Bounds2 bounds_;
  std::vector<Face> faces_;
  std::vector<Node> nodes_;
  std::vector<geom::Plane> beam_planes_;
};

/// Horizontal bounds covering the buildings, the base station, the grid area and `extra`.
Bounds2 scene_bounds(const Scene &scene, std::span<const Vec3> extra = {});

/// Builds the face list for a scene; face 0 is the ground rectangle spanning `bounds`.
std::vector<Face> scene_faces(const Scene &scene, const Bounds2 &bounds);

PathSet trace(const Scene &scene, const Vec3 &rx, int max_depth = kDefaultMaxDepth);
PathSet trace(const Scene &scene, const Vec3 &tx, const Vec3 &rx, int max_depth);

/// One PathSet per retained grid position, in position order.
std::vector<PathSet> trace_all(const Scene &scene, const PositionGrid &grid,
                               int max_depth = kDefaultMaxDepth, int workers = 1);

/// JSON-lines dump: one object per position with every Path field.
void write_pathsets(std::ostream &out, const std::vector<PathSet> &sets);
std::vector<PathSet> read_pathsets(std::istream &in);

} // namespace dtloc
