// SPDX-License-Identifier: Apache-2.0
#include "dtloc/scene.hpp"

#include "dtloc/error.hpp"
#include "dtloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace dtloc {

const Material &Scene::material(const std::string &id) const {
  for (const auto &m : materials) {
    if (m.id == id) return m;
  }
  throw ValidationError("materials", "unknown material '" + id + "'");
}

int Scene::n_subbands() const { return static_cast<int>(std::llround(bandwidth_hz / subband_hz)); }

PositionGrid::PositionGrid(int rows, int cols, std::vector<Vec3> cell_centers,
                           std::vector<bool> masked)
    : rows_(rows), cols_(cols), centers_(std::move(cell_centers)), masked_(std::move(masked)) {
  index_of_cell_.assign(centers_.size(), -1);
  for (std::size_t c = 0; c < centers_.size(); ++c) {
    if (masked_[c]) continue;
    index_of_cell_[c] = static_cast<int>(positions_.size());
    positions_.push_back(centers_[c]);
    cell_of_.push_back(static_cast<int>(c));
  }
}

std::optional<int> PositionGrid::index_of(int row, int col) const {
  if (row < 0 || col < 0 || row >= rows_ || col >= cols_) return std::nullopt;
  return index_of_cell(row * cols_ + col);
}

std::optional<int> PositionGrid::index_of_cell(int cell) const {
  if (cell < 0 || cell >= cell_count()) return std::nullopt;
  const int p = index_of_cell_[static_cast<std::size_t>(cell)];
  if (p < 0) return std::nullopt;
  return p;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

void require(bool ok, const std::string &field, const std::string &what) {
  if (!ok) throw ValidationError(field, what);
}

int lattice_count(double extent, double resolution) {
  if (extent < resolution) return 0;
  return static_cast<int>(std::floor(extent / resolution + 1e-9)) + 1;
}

} // namespace

std::vector<std::string> validate_scene(Scene &scene) {
  std::vector<std::string> warnings;
  require(scene.schema_version == kSceneSchemaVersion, "schema_version",
          "unsupported version " + std::to_string(scene.schema_version));

  require(finite(scene.carrier_hz) && scene.carrier_hz > 0, "carrier_hz", "must be > 0");
  require(finite(scene.subcarrier_hz) && scene.subcarrier_hz > 0, "subcarrier_hz", "must be > 0");
  require(finite(scene.subband_hz) && scene.subband_hz >= scene.subcarrier_hz, "subband_hz",
          "must be >= subcarrier_hz");
  require(finite(scene.bandwidth_hz) && scene.bandwidth_hz >= scene.subband_hz, "bandwidth_hz",
          "must be >= subband_hz");
  const double ratio = scene.bandwidth_hz / scene.subband_hz;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio, "bandwidth_hz",
          "must be an integer multiple of subband_hz");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < scene.materials.size(); ++i) {
    const auto &m = scene.materials[i];
    const std::string f = "materials[" + std::to_string(i) + "]";
    require(!m.id.empty(), f + ".id", "must not be empty");
    require(ids.insert(m.id).second, f + ".id", "duplicate id '" + m.id + "'");
    require(finite(m.reflection_loss_db) && m.reflection_loss_db >= 0,
            f + ".reflection_loss_db", "must be >= 0");
  }
  require(ids.count(scene.ground_material) == 1, "ground.material",
          "unknown material '" + scene.ground_material + "'");

  for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
    auto &b = scene.buildings[i];
    const std::string f = "buildings[" + std::to_string(i) + "]";
    require(finite(b.height) && b.height > 0, f + ".height", "must be > 0");
    require(b.footprint.size() >= 3, f + ".footprint", "needs at least 3 vertices");
    for (const auto &v : b.footprint) {
      require(v.allFinite(), f + ".footprint", "non-finite vertex");
    }
    require(geom::polygon_is_simple<double>(b.footprint), f + ".footprint",
            "polygon is not simple");
    require(ids.count(b.material) == 1, f + ".material", "unknown material '" + b.material + "'");
    if (geom::signed_area<double>(b.footprint) < 0) {
      std::reverse(b.footprint.begin(), b.footprint.end());
    }
  }
  for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.buildings.size(); ++j) {
      if (geom::polygons_overlap<double>(scene.buildings[i].footprint,
                                         scene.buildings[j].footprint)) {
        warnings.push_back("buildings[" + std::to_string(i) + "] and buildings[" +
                           std::to_string(j) + "] overlap");
      }
    }
  }

  const auto &arr = scene.bs.array;
  require(arr.n_antennas >= 1, "base_station.array.n_antennas", "must be >= 1");
  require(finite(arr.spacing_wavelengths) && arr.spacing_wavelengths > 0,
          "base_station.array.spacing_wavelengths", "must be > 0");
  require(finite(arr.boresight_az_deg), "base_station.array.boresight_az_deg", "must be finite");
  require(finite(scene.bs.tx_power_dbm), "base_station.tx_power_dbm", "must be finite");
  require(scene.bs.position.allFinite(), "base_station.position", "must be finite");
  require(!point_in_building(scene, scene.bs.position), "base_station.position",
          "inside a building");

  const auto &g = scene.grid;
  require(finite(g.resolution) && g.resolution > 0, "grid.resolution", "must be > 0");
  require(g.extent.allFinite() && g.extent.x() > 0 && g.extent.y() > 0, "grid.extent",
          "components must be > 0");
  require(g.origin.allFinite(), "grid.origin", "must be finite");
  require(finite(g.height), "grid.height", "must be finite");
  return warnings;
}

PositionGrid generate_grid(const Scene &scene) {
  const auto &g = scene.grid;
  const int cols = lattice_count(g.extent.x(), g.resolution);
  const int rows = lattice_count(g.extent.y(), g.resolution);
  std::vector<Vec3> centers;
  std::vector<bool> masked;
  centers.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  masked.reserve(centers.capacity());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Vec2 xy = g.origin + Vec2(c * g.resolution, r * g.resolution);
      centers.emplace_back(xy.x(), xy.y(), g.height);
      masked.push_back(point_in_footprint(scene, xy));
    }
  }
  return PositionGrid(rows, cols, std::move(centers), std::move(masked));
}

void write_grid_csv(const PositionGrid &grid, std::ostream &out) {
  out << "index,x,y,z,masked\n";
  const auto prec = out.precision(17);
  for (int c = 0; c < grid.cell_count(); ++c) {
    const auto &p = grid.cell_center(c);
    out << c << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << (grid.masked(c) ? 1 : 0)
        << '\n';
  }
  out.precision(prec);
}

bool point_in_footprint(const Scene &scene, const Vec2 &point) {
  for (const auto &b : scene.buildings) {
    if (geom::point_in_polygon<double>(b.footprint, point)) return true;
  }
  return false;
}

bool point_in_building(const Scene &scene, const Vec3 &point) {
  const Vec2 xy = point.head<2>();
  for (const auto &b : scene.buildings) {
    if (point.z() < b.height && geom::point_in_polygon<double>(b.footprint, xy)) return true;
  }
  return false;
}

namespace {

// Strict sign change of a plane's signed distance along the segment; returns the crossing
// parameter or a negative value when the open segment does not cross.
double crossing(double da, double db, double tol) {
  if ((da > tol && db < -tol) || (da < -tol && db > tol)) return da / (da - db);
  return -1.0;
}

bool building_blocks(const Building &b, const Vec3 &a, const Vec3 &d, double t_tol) {
  const Vec3 e = d - a;
  const double zmin = std::min(a.z(), d.z());
  if (zmin >= b.height) return false;
  double xmin = b.footprint[0].x(), xmax = xmin, ymin = b.footprint[0].y(), ymax = ymin;
  for (const auto &v : b.footprint) {
    xmin = std::min(xmin, v.x());
    xmax = std::max(xmax, v.x());
    ymin = std::min(ymin, v.y());
    ymax = std::max(ymax, v.y());
  }
  if (std::max(a.x(), d.x()) <= xmin || std::min(a.x(), d.x()) >= xmax ||
      std::max(a.y(), d.y()) <= ymin || std::min(a.y(), d.y()) >= ymax) {
    return false;
  }

  const std::size_t n = b.footprint.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 &p0 = b.footprint[i];
    const Vec2 &p1 = b.footprint[(i + 1) % n];
    const Vec2 edge = p1 - p0;
    const double len = edge.norm();
    // Outward normal of a counter-clockwise footprint points to the right of each edge.
    const Vec2 normal(edge.y() / len, -edge.x() / len);
    const double da = normal.dot(a.head<2>() - p0);
    const double dd = normal.dot(d.head<2>() - p0);
    const double t = crossing(da, dd, geom::kEps);
    if (t <= t_tol || t >= 1.0 - t_tol) continue;
    const Vec3 x = a + t * e;
    const double u = edge.dot(x.head<2>() - p0) / (len * len);
    const double u_tol = geom::kEps / len;
    if (u > u_tol && u < 1.0 - u_tol && x.z() > geom::kEps && x.z() < b.height - geom::kEps) {
      return true;
    }
  }
  const double t = crossing(a.z() - b.height, d.z() - b.height, geom::kEps);
  if (t > t_tol && t < 1.0 - t_tol) {
    const Vec3 x = a + t * e;
    if (geom::point_in_polygon<double>(b.footprint, Vec2(x.head<2>()))) return true;
  }
  return false;
}

} // namespace

bool segment_occluded(const Scene &scene, const Vec3 &a, const Vec3 &b) {
  const double len = (b - a).norm();
  if (len <= geom::kEps) return false;
  const double t_tol = geom::kEps / len;
  const double tg = crossing(a.z(), b.z(), geom::kEps);
  if (tg > t_tol && tg < 1.0 - t_tol) return true;
  for (const auto &bld : scene.buildings) {
    if (building_blocks(bld, a, b, t_tol)) return true;
  }
  return false;
}

} // namespace dtloc
