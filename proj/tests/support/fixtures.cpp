// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include "oracles.hpp"

#include "dtloc/channel.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fixtures {

using namespace dtloc;

std::filesystem::path bundled_scene_path() { return std::filesystem::path(DTLOC_DATA_DIR) / "six_buildings.scene"; }

const Scene &bundled_scene() {
  static const Scene scene = load_scene(bundled_scene_path());
  return scene;
}

const RfMapDb &bundled_db() {
  static const RfMapDb db = [] {
    const Scene &s = bundled_scene();
    return build(s, generate_grid(s), dft_codebook(s.bs.array.n_antennas), BuildParams{}, 1);
  }();
  return db;
}

Scene free_space_scene(int n_antennas, double ground_loss_db, double bs_height) {
  Scene s;
  s.name = "free_space";
  s.materials = {{"ground", ground_loss_db, {}, {}}, {"concrete", 6.0, {}, {}}};
  s.ground_material = "ground";
  s.bs.position = Vec3(0.0, 0.0, bs_height);
  s.bs.array.n_antennas = n_antennas;
  s.bs.array.spacing_wavelengths = 0.5;
  s.bs.array.boresight_az_deg = 0.0;
  s.bs.tx_power_dbm = 30.0;
  s.grid.origin = Vec2(10.0, -10.0);
  s.grid.extent = Vec2(20.0, 20.0);
  s.grid.resolution = 5.0;
  s.grid.height = 2.0;
  validate_scene(s);
  return s;
}

Building box(double x0, double y0, double x1, double y1, double height, const std::string &material) {
  return {{Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)}, height, material};
}

RfMapDb toy_db(std::uint64_t seed, int n_beams, int n_subbands, double lo, double hi) {
  Scene s = free_space_scene(n_beams);
  s.grid.origin = Vec2(20.0, 0.0);
  s.grid.extent = Vec2(8.0, 2.0);
  s.grid.resolution = 2.0;
  s.bandwidth_hz = s.subband_hz * n_subbands;
  s.name = "toy";
  validate_scene(s);
  const PositionGrid grid = generate_grid(s);
  oracle::Gen gen(seed);
  BuildParams params;
  std::vector<std::int32_t> codes(static_cast<std::size_t>(n_beams * n_subbands * grid.retained_count()));
  for (auto &c : codes) c = quantize_code(gen.uniform(lo, hi), params.steps_per_dbm);
  return RfMapDb(s, params, n_beams, n_subbands, std::move(codes));
}

std::filesystem::path temp_dir(const std::string &tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dtloc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace fixtures
