// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/rfmap.hpp"
#include "dtloc/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace fixtures {

std::filesystem::path bundled_scene_path();
const dtloc::Scene &bundled_scene();
/// Default build of the bundled scene, built once per process.
const dtloc::RfMapDb &bundled_db();

/// No buildings; ground material with `ground_loss_db`; BS at (0, 0, bs_height).
dtloc::Scene free_space_scene(int n_antennas = 1, double ground_loss_db = 0.0, double bs_height = 10.0);

/// Box building with corners (x0, y0)-(x1, y1).
dtloc::Building box(double x0, double y0, double x1, double y1, double height,
                    const std::string &material = "concrete");

/// Ten-position database (grid 5 x 2) with uniform random codes in [lo, hi] dBm.
dtloc::RfMapDb toy_db(std::uint64_t seed, int n_beams = 4, int n_subbands = 3, double lo = -100.0,
                      double hi = -70.0);

/// Fresh empty directory under the system temp path.
std::filesystem::path temp_dir(const std::string &tag);

std::string read_file(const std::filesystem::path &path);

} // namespace fixtures
