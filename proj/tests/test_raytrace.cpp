// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "oracles.hpp"

#include "dtloc/error.hpp"
#include "dtloc/raytrace.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace dtloc;

namespace {

double unfolded_length(const Path &p, const Vec3 &tx, const Vec3 &rx) {
  double len = 0;
  Vec3 prev = tx;
  for (const auto &q : p.points) {
    len += (q - prev).norm();
    prev = q;
  }
  return len + (rx - prev).norm();
}

std::vector<std::pair<double, double>> delay_gain(const PathSet &ps) {
  std::vector<std::pair<double, double>> v;
  for (const auto &p : ps.paths) v.emplace_back(p.delay_s, p.gain_db);
  std::sort(v.begin(), v.end());
  return v;
}

} // namespace

TEST(Fspl, MatchesFriisOracle) {
  for (double d : {1.0, 10.0, 100.0, 1234.5}) {
    for (double f : {9e8, 3.5e9, 28e9}) EXPECT_NEAR(-fspl_db(d, f), oracle::friis_gain_db(d, f), 1e-9);
  }
}

TEST(Trace, FreeSpace300mHasLosAndGround) {
  Scene s = fixtures::free_space_scene(1, 0.0, 2.0);
  const PathSet ps = trace(s, Vec3(300, 0, 2), 5);
  ASSERT_EQ(ps.paths.size(), 2u);
  EXPECT_EQ(ps.paths[0].bounces, 0);
  EXPECT_NEAR(ps.paths[0].delay_s, 300.0 / oracle::kC, 1e-12 * 300.0 / oracle::kC);
  EXPECT_NEAR(ps.paths[0].delay_s * 1e6, 1.0007, 1e-4);
  EXPECT_EQ(ps.paths[1].bounces, 1);
}

TEST(Trace, LosGainAt100mAndCarrier35GHz) {
  Scene s = fixtures::free_space_scene(1, 0.0, 2.0);
  const PathSet ps = trace(s, Vec3(100, 0, 2), 0);
  ASSERT_EQ(ps.paths.size(), 1u);
  EXPECT_NEAR(ps.paths[0].gain_db, oracle::friis_gain_db(100.0, 3.5e9), 1e-9);
  EXPECT_NEAR(ps.paths[0].gain_db, -83.3, 0.05);
}

TEST(Trace, PhaseIsCarrierDelayPlusPiPerBounce) {
  Scene s = fixtures::free_space_scene(1, 3.0, 10.0);
  s.buildings.push_back(fixtures::box(0, 30, 100, 40, 20));
  validate_scene(s);
  const PathSet ps = trace(s, Vec3(60, 10, 2), 3);
  ASSERT_GE(ps.paths.size(), 3u);
  for (const auto &p : ps.paths) {
    const double expected = -2 * kPi * s.carrier_hz * p.delay_s + kPi * p.bounces;
    EXPECT_NEAR(std::remainder(p.phase_rad - expected, 2 * kPi), 0.0, 1e-6);
    double losses = 0;
    for (int f : p.faces) losses += f == 0 ? 3.0 : 6.0;
    EXPECT_NEAR(p.gain_db, -fspl_db(p.delay_s * kSpeedOfLight, s.carrier_hz) - losses, 1e-9);
  }
}

TEST(Trace, SingleWallMirrorDepthOne) {
  Scene s = fixtures::free_space_scene(1, 0.0, 10.0);
  // Wall face at y = 20 facing the transmitter.
  s.buildings.push_back(fixtures::box(-100, 20, 200, 30, 50));
  validate_scene(s);
  const Vec3 rx(50, 5, 2);
  const PathSet ps = trace(s, rx, 1);
  ASSERT_EQ(ps.paths.size(), 3u);
  int wall_paths = 0;
  for (const auto &p : ps.paths) {
    if (p.bounces == 1 && p.faces[0] != 0) {
      ++wall_paths;
      const Vec3 image(s.bs.position.x(), 2 * 20 - s.bs.position.y(), s.bs.position.z());
      EXPECT_NEAR(p.delay_s, (image - rx).norm() / oracle::kC, 1e-15);
      EXPECT_NEAR(p.points[0].y(), 20.0, 1e-9);
    }
  }
  EXPECT_EQ(wall_paths, 1);
}

TEST(Trace, ReceiverInsideBuildingRejected) {
  const Scene &s = fixtures::bundled_scene();
  const Vec3 inside(s.buildings[0].footprint[0].x() + 5, s.buildings[0].footprint[0].y() + 5, 2);
  EXPECT_THROW(trace(s, inside, 1), ValidationError);
}

TEST(Trace, EnclosedReceiverDepthZeroIsEmpty) {
  Scene s = fixtures::free_space_scene(1, 0.0, 10.0);
  // Courtyard enclosed by four walls; the transmitter is outside.
  s.buildings.push_back(fixtures::box(40, -20, 44, 20, 30));
  s.buildings.push_back(fixtures::box(76, -20, 80, 20, 30));
  s.buildings.push_back(fixtures::box(44, -20, 76, -16, 30));
  s.buildings.push_back(fixtures::box(44, 16, 76, 20, 30));
  validate_scene(s);
  EXPECT_TRUE(trace(s, Vec3(60, 0, 2), 0).paths.empty());
}

TEST(TraceAll, FreeSpaceGridHasTwoPathsEverywhere) {
  const Scene s = fixtures::free_space_scene();
  const PositionGrid g = generate_grid(s);
  const auto sets = trace_all(s, g, 5, 1);
  ASSERT_EQ(static_cast<int>(sets.size()), g.retained_count());
  for (const auto &ps : sets) EXPECT_EQ(ps.paths.size(), 2u);
}

TEST(TraceAll, LosPositionsHaveDirectPath) {
  const Scene &s = fixtures::bundled_scene();
  const PositionGrid g = generate_grid(s);
  const auto sets = trace_all(s, g, 2, 1);
  for (int p = 0; p < g.retained_count(); ++p) {
    const bool los = !segment_occluded(s, s.bs.position, g.position(p));
    const bool has_direct =
        std::any_of(sets[p].paths.begin(), sets[p].paths.end(), [](const Path &x) { return x.bounces == 0; });
    EXPECT_EQ(los, has_direct) << "position " << p;
  }
}

TEST(TraceAll, WorkerCountDoesNotChangeResult) {
  const Scene &s = fixtures::bundled_scene();
  const PositionGrid g = generate_grid(s);
  EXPECT_EQ(trace_all(s, g, 3, 1), trace_all(s, g, 3, 4));
}

class BundledPaths : public ::testing::Test {
protected:
  static std::vector<Vec3> receivers(int n, std::uint64_t seed) {
    const Scene &s = fixtures::bundled_scene();
    oracle::Gen gen(seed);
    std::vector<Vec3> out;
    while (static_cast<int>(out.size()) < n) {
      const Vec3 p(gen.uniform(0, 180), gen.uniform(0, 140), gen.uniform(1, 5));
      if (!point_in_building(s, p)) out.push_back(p);
    }
    return out;
  }
};

TEST_F(BundledPaths, PathInvariants) {
  const Scene &s = fixtures::bundled_scene();
  for (const Vec3 &rx : receivers(60, 1)) {
    const PathSet ps = trace(s, rx, 5);
    std::set<std::vector<int>> signatures;
    const double direct = (rx - s.bs.position).norm();
    for (std::size_t i = 0; i < ps.paths.size(); ++i) {
      const Path &p = ps.paths[i];
      if (i > 0) EXPECT_LE(ps.paths[i - 1].delay_s, p.delay_s);
      EXPECT_TRUE(signatures.insert(p.faces).second);
      EXPECT_EQ(p.bounces, static_cast<int>(p.faces.size()));
      EXPECT_EQ(p.points.size(), p.faces.size());
      EXPECT_GE(p.delay_s * oracle::kC, direct * (1 - 1e-12));
      const double len = unfolded_length(p, s.bs.position, rx);
      EXPECT_NEAR(p.delay_s * oracle::kC, len, 1e-9 * len);
      if (p.bounces == 0) EXPECT_NEAR(p.delay_s, direct / oracle::kC, 1e-12 * direct / oracle::kC);
      for (std::size_t j = 0; j + 1 < p.faces.size(); ++j) EXPECT_NE(p.faces[j], p.faces[j + 1]);
    }
  }
}

TEST_F(BundledPaths, ReflectionPointsObeyMirrorLaw) {
  const Scene &s = fixtures::bundled_scene();
  for (const Vec3 &rx : receivers(30, 2)) {
    for (const Path &p : trace(s, rx, 3).paths) {
      Vec3 prev = s.bs.position;
      for (std::size_t j = 0; j < p.points.size(); ++j) {
        const Vec3 next = j + 1 < p.points.size() ? p.points[j + 1] : rx;
        const Vec3 in = (p.points[j] - prev).normalized();
        const Vec3 out = (next - p.points[j]).normalized();
        // Equal angles: the tangential components match and normal components flip.
        const Vec3 sum = out - in;
        const Vec3 tangential = (in + out) * 0.5;
        EXPECT_NEAR(std::abs(sum.dot(tangential)), 0.0, 1e-9);
        prev = p.points[j];
      }
    }
  }
}

TEST_F(BundledPaths, Reciprocity) {
  const Scene &s = fixtures::bundled_scene();
  const auto rxs = receivers(25, 3);
  for (const Vec3 &rx : rxs) {
    const PathSet fwd = trace(s, s.bs.position, rx, 4);
    const PathSet rev = trace(s, rx, s.bs.position, 4);
    const auto a = delay_gain(fwd);
    const auto b = delay_gain(rev);
    ASSERT_EQ(a.size(), b.size()) << rx.transpose();
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i].first, b[i].first, 1e-15);
      EXPECT_NEAR(a[i].second, b[i].second, 1e-9);
    }
    for (const Path &p : fwd.paths) {
      auto rfaces = p.faces;
      std::reverse(rfaces.begin(), rfaces.end());
      const auto it = std::find_if(rev.paths.begin(), rev.paths.end(), [&](const Path &q) { return q.faces == rfaces; });
      ASSERT_NE(it, rev.paths.end());
      EXPECT_NEAR(std::remainder(it->aod_az_deg - p.aoa_az_deg, 360.0), 0.0, 1e-6);
      EXPECT_NEAR(it->aod_el_deg, p.aoa_el_deg, 1e-6);
      EXPECT_NEAR(std::remainder(it->aoa_az_deg - p.aod_az_deg, 360.0), 0.0, 1e-6);
      EXPECT_NEAR(it->aoa_el_deg, p.aod_el_deg, 1e-6);
    }
  }
}

TEST_F(BundledPaths, MonotoneInDepth) {
  const Scene &s = fixtures::bundled_scene();
  for (const Vec3 &rx : receivers(20, 4)) {
    PathSet prev = trace(s, rx, 0);
    for (int depth = 1; depth <= 5; ++depth) {
      const PathSet next = trace(s, rx, depth);
      for (const Path &p : prev.paths) {
        EXPECT_NE(std::find(next.paths.begin(), next.paths.end(), p), next.paths.end());
      }
      EXPECT_GE(next.paths.size(), prev.paths.size());
      prev = next;
    }
  }
}

TEST_F(BundledPaths, DepartureAnglesPointAtFirstInteraction) {
  const Scene &s = fixtures::bundled_scene();
  for (const Vec3 &rx : receivers(10, 5)) {
    for (const Path &p : trace(s, rx, 3).paths) {
      const Vec3 first = p.points.empty() ? rx : p.points.front();
      const Vec3 d = (first - s.bs.position).normalized();
      EXPECT_NEAR(std::remainder(p.aod_az_deg - rad2deg(std::atan2(d.y(), d.x())), 360.0), 0.0, 1e-9);
      EXPECT_NEAR(p.aod_el_deg, rad2deg(std::asin(d.z())), 1e-9);
      const Vec3 last = p.points.empty() ? s.bs.position : p.points.back();
      const Vec3 a = (last - rx).normalized();
      EXPECT_NEAR(std::remainder(p.aoa_az_deg - rad2deg(std::atan2(a.y(), a.x())), 360.0), 0.0, 1e-9);
    }
  }
}

TEST(PathSetIo, RoundTrip) {
  const Scene &s = fixtures::bundled_scene();
  const PositionGrid g = generate_grid(s);
  auto sets = trace_all(s, g, 2, 1);
  sets.resize(50);
  std::stringstream io;
  write_pathsets(io, sets);
  const auto back = read_pathsets(io);
  ASSERT_EQ(back.size(), sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    ASSERT_EQ(back[i].paths.size(), sets[i].paths.size());
    for (std::size_t j = 0; j < sets[i].paths.size(); ++j) {
      EXPECT_EQ(back[i].paths[j].faces, sets[i].paths[j].faces);
      EXPECT_DOUBLE_EQ(back[i].paths[j].delay_s, sets[i].paths[j].delay_s);
      EXPECT_DOUBLE_EQ(back[i].paths[j].gain_db, sets[i].paths[j].gain_db);
    }
  }
}
