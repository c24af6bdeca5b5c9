// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtloc {

inline constexpr int kSceneSchemaVersion = 1;

struct Material {
  std::string id;
  /// Scalar loss per specular bounce, dB.
  double reflection_loss_db = 6.0;
  // Reserved for an angle-dependent reflection model; carried through I/O, unused by the tracer.
  std::optional<double> relative_permittivity;
  std::optional<double> conductivity_s_per_m;

  bool operator==(const Material &) const = default;
};

/// Prism: a counter-clockwise footprint extruded from the ground to `height`.
struct Building {
  std::vector<Vec2> footprint;
  double height = 0.0;
  std::string material;

  bool operator==(const Building &) const = default;
};

/// Uniform linear array lying in the horizontal plane, perpendicular to its boresight.
struct UlaSpec {
  int n_antennas = 64;
  double spacing_wavelengths = 0.5;
  double boresight_az_deg = 0.0;

  bool operator==(const UlaSpec &) const = default;
};

struct BaseStation {
  Vec3 position = Vec3::Zero();
  UlaSpec array;
  double tx_power_dbm = 30.0;

  bool operator==(const BaseStation &) const = default;
};

struct GridSpec {
  Vec2 origin = Vec2::Zero();
  Vec2 extent = Vec2::Zero();
  double resolution = 2.0;
  double height = 2.0;

  bool operator==(const GridSpec &) const = default;
};

struct Scene {
  int schema_version = kSceneSchemaVersion;
  std::string name;
  std::vector<Material> materials;
  /// Ground is the infinite plane z = 0.
  std::string ground_material;
  std::vector<Building> buildings;
  BaseStation bs;
  GridSpec grid;
  double carrier_hz = 3.5e9;
  double bandwidth_hz = 20e6;
  double subband_hz = 1e6;
  double subcarrier_hz = 15e3;

  bool operator==(const Scene &) const = default;

  const Material &material(const std::string &id) const;
  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  int n_subbands() const;
};

/// Candidate user positions: a row-major lattice with in-building cells masked out.
class PositionGrid {
public:
  PositionGrid() = default;
  PositionGrid(int rows, int cols, std::vector<Vec3> cell_centers, std::vector<bool> masked);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int cell_count() const { return rows_ * cols_; }
  int retained_count() const { return static_cast<int>(positions_.size()); }
  int masked_count() const { return cell_count() - retained_count(); }

  /// Retained positions in ascending cell order; position index p addresses this list.
  const std::vector<Vec3> &positions() const { return positions_; }
  const Vec3 &position(int p) const { return positions_.at(static_cast<std::size_t>(p)); }
  const Vec3 &cell_center(int cell) const { return centers_.at(static_cast<std::size_t>(cell)); }
  bool masked(int cell) const { return masked_.at(static_cast<std::size_t>(cell)); }

  int cell_of(int p) const { return cell_of_.at(static_cast<std::size_t>(p)); }
  /// Retained position index of a cell, or nullopt when the cell is masked or out of range.
  std::optional<int> index_of(int row, int col) const;
  std::optional<int> index_of_cell(int cell) const;

  bool operator==(const PositionGrid &) const = default;

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Vec3> centers_;
  std::vector<bool> masked_;
  std::vector<Vec3> positions_;
  std::vector<int> cell_of_;
  std::vector<int> index_of_cell_;
};

/// Parse scene text; throws ParseError on malformed input, ValidationError on invariant failures.
Scene parse_scene(const std::string &text);
Scene load_scene(const std::filesystem::path &path);
std::string scene_to_string(const Scene &scene);
void save_scene(const Scene &scene, const std::filesystem::path &path);

/// Checks every Scene invariant, normalizes footprints to counter-clockwise, and returns
/// non-fatal warnings (overlapping footprints).
std::vector<std::string> validate_scene(Scene &scene);

/// Hex SHA-256 of the canonical serialization.
std::string scene_hash(const Scene &scene);

PositionGrid generate_grid(const Scene &scene);
void write_grid_csv(const PositionGrid &grid, std::ostream &out);

/// Strictly inside some footprint (2D) and below that building's roof.
bool point_in_building(const Scene &scene, const Vec3 &point);
/// Strictly inside some footprint in the horizontal plane, ignoring height.
bool point_in_footprint(const Scene &scene, const Vec2 &point);

/// True iff the open segment (a, b) crosses a building face or the ground plane.
bool segment_occluded(const Scene &scene, const Vec3 &a, const Vec3 &b);

} // namespace dtloc
