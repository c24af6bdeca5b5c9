// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"
#include "oracles.hpp"

#include "dtloc/error.hpp"
#include "dtloc/rfmap.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dtloc;

namespace {

std::string serialize(const RfMapDb &db) {
  std::ostringstream out;
  save(db, out);
  return out.str();
}

RfMapDb deserialize(const std::string &bytes) {
  std::istringstream in(bytes);
  return load(in);
}

RfMapDb free_space_db(int depth, int workers = 1) {
  const Scene s = fixtures::free_space_scene(1, 0.0, 10.0);
  BuildParams params;
  params.max_depth = depth;
  return build(s, generate_grid(s), dft_codebook(1), params, workers);
}

} // namespace

TEST(Quantize, RoundHalfEven) {
  EXPECT_EQ(quantize_code(-80.0005, 1000), -80000);
  EXPECT_EQ(quantize_code(-80.0015, 1000), -80002);
  EXPECT_EQ(quantize_code(0.0025, 1000), 2);
  EXPECT_EQ(quantize_code(-174.0, 1000), -174000);
  EXPECT_DOUBLE_EQ(dequantize(-83301, 1000), -83.301);
}

TEST(Quantize, ErrorIsAtMostHalfStep) {
  oracle::Gen gen(21);
  for (int i = 0; i < 10000; ++i) {
    const double v = gen.uniform(-180, 20);
    const int steps = gen.integer(1, 4) == 1 ? 100 : 1000;
    EXPECT_LE(std::abs(dequantize(quantize_code(v, steps), steps) - v), 0.5 / steps + 1e-12);
  }
}

TEST(Build, BundledTensorDimensions) {
  const RfMapDb &db = fixtures::bundled_db();
  EXPECT_EQ(db.n_beams(), 64);
  EXPECT_EQ(db.n_subbands(), 20);
  EXPECT_EQ(db.n_positions(), 4286);
  EXPECT_EQ(db.data().rows(), 64 * 20);
  EXPECT_EQ(db.codes().size(), 64u * 20u * 4286u);
}

TEST(Build, ValuesAreOnQuantizationGridAndAboveFloor) {
  const RfMapDb &db = fixtures::bundled_db();
  const auto codes = db.codes();
  for (std::size_t i = 0; i < codes.size(); i += 101) {
    EXPECT_EQ(db.data().data()[i], dequantize(codes[i], 1000));
    EXPECT_GE(db.data().data()[i], kDefaultFloorDbm);
  }
}

TEST(Build, FingerprintLayoutIsBeamFastest) {
  const RfMapDb db = fixtures::toy_db(4);
  for (int p = 0; p < db.n_positions(); ++p) {
    const auto fp = db.fingerprint(p);
    ASSERT_EQ(fp.rows(), db.n_beams());
    ASSERT_EQ(fp.cols(), db.n_subbands());
    for (int b = 0; b < db.n_subbands(); ++b) {
      for (int k = 0; k < db.n_beams(); ++k) {
        const std::size_t flat = static_cast<std::size_t>((p * db.n_subbands() + b) * db.n_beams() + k);
        EXPECT_EQ(fp(k, b), dequantize(db.codes()[flat], 1000));
        EXPECT_EQ(fp(k, b), db.value(k, b, p));
      }
    }
  }
}

TEST(Build, MaskedCellThrowsOutOfRange) {
  const RfMapDb &db = fixtures::bundled_db();
  const PositionGrid &g = db.grid();
  int masked = -1;
  for (int c = 0; c < g.cell_count() && masked < 0; ++c) {
    if (g.masked(c)) masked = c;
  }
  ASSERT_GE(masked, 0);
  EXPECT_THROW(db.fingerprint_at_cell(masked), std::out_of_range);
  EXPECT_THROW(db.fingerprint(db.n_positions()), std::out_of_range);
  EXPECT_THROW(db.fingerprint(-1), std::out_of_range);
}

TEST(Build, DepthZeroPutsNlosAtFloor) {
  const Scene &s = fixtures::bundled_scene();
  BuildParams params;
  params.max_depth = 0;
  const RfMapDb db = build(s, generate_grid(s), dft_codebook(64), params, 1);
  int nlos = 0;
  for (int p = 0; p < db.n_positions(); ++p) {
    const bool occluded = segment_occluded(s, s.bs.position, db.grid().position(p));
    const double best = db.fingerprint(p).maxCoeff();
    if (occluded) {
      EXPECT_EQ(best, kDefaultFloorDbm) << p;
      ++nlos;
    } else {
      EXPECT_GT(best, kDefaultFloorDbm) << p;
    }
  }
  EXPECT_GT(nlos, 0);
}

TEST(Build, FreeSpaceMatchesTwoRayOracle) {
  const Scene s = fixtures::free_space_scene(1, 0.0, 10.0);
  const RfMapDb db = free_space_db(1);
  const SubcarrierLayout layout = subcarrier_layout(s);
  for (int p = 0; p < db.n_positions(); p += 3) {
    const Vec3 rx = db.grid().position(p);
    const double d = rx.head<2>().norm();
    for (int b = 0; b < db.n_subbands(); b += 4) {
      std::vector<double> offsets;
      for (std::size_t n = 0; n < layout.offsets_hz.size(); ++n) {
        if (layout.subband[n] == b) offsets.push_back(layout.offsets_hz[n]);
      }
      EXPECT_NEAR(db.value(0, b, p), oracle::two_ray_subband_dbm(d, 10, 2, s.carrier_hz, offsets, 30.0), 0.1);
    }
  }
}

TEST(Build, FromPathsEqualsBuild) {
  const Scene s = fixtures::free_space_scene(8, 3.0, 10.0);
  const PositionGrid grid = generate_grid(s);
  BuildParams params;
  params.max_depth = 1;
  std::vector<PathSet> paths;
  for (const Vec3 &p : grid.positions()) paths.push_back(trace(s, p, 1));
  const Codebook cb = dft_codebook(8);
  EXPECT_TRUE(build_from_paths(s, paths, cb, params) == build(s, grid, cb, params));
}

TEST(Build, WorkerCountDoesNotChangeBytes) {
  EXPECT_EQ(serialize(free_space_db(2, 1)), serialize(free_space_db(2, 4)));
  const Scene &s = fixtures::bundled_scene();
  const RfMapDb four = build(s, generate_grid(s), dft_codebook(64), BuildParams{}, 4);
  EXPECT_EQ(serialize(four), serialize(fixtures::bundled_db()));
}

TEST(Build, StatsAreReported) {
  const Scene &s = fixtures::bundled_scene();
  BuildParams params;
  params.max_depth = 1;
  BuildStats stats;
  const RfMapDb db = build(s, generate_grid(s), dft_codebook(64), params, 1, &stats);
  std::size_t total = 0;
  for (const auto &[paths, count] : stats.path_count_histogram) total += count;
  EXPECT_EQ(total, static_cast<std::size_t>(db.n_positions()));
  EXPECT_GT(stats.image_tree_nodes, 1u);
  EXPECT_GT(stats.los_positions, 0u);
  EXPECT_LE(stats.los_positions, total);
}

TEST(Persistence, RoundTripIsBitExact) {
  const RfMapDb &db = fixtures::bundled_db();
  const auto dir = fixtures::temp_dir("rfmap_rt");
  save(db, dir / "a.rfmap");
  const RfMapDb back = load(dir / "a.rfmap");
  EXPECT_TRUE(back == db);
  EXPECT_EQ(back.scene_hash(), db.scene_hash());
  EXPECT_EQ(back.params(), db.params());
  save(back, dir / "b.rfmap");
  EXPECT_EQ(fixtures::read_file(dir / "a.rfmap"), fixtures::read_file(dir / "b.rfmap"));
}

TEST(Persistence, RandomToyDatabasesRoundTrip) {
  oracle::Gen gen(8);
  for (int i = 0; i < 30; ++i) {
    const RfMapDb db = fixtures::toy_db(gen.next(), gen.integer(1, 8), gen.integer(1, 5), -170, 10);
    EXPECT_TRUE(deserialize(serialize(db)) == db);
  }
}

TEST(Persistence, FlippedByteIsChecksumError) {
  std::string bytes = serialize(fixtures::toy_db(1));
  bytes[bytes.size() - 10] ^= 0x01;
  EXPECT_THROW(deserialize(bytes), ChecksumError);
}

TEST(Persistence, VersionMismatch) {
  std::string bytes = serialize(fixtures::toy_db(1));
  bytes[8] = 7;
  EXPECT_THROW(deserialize(bytes), VersionError);
}

TEST(Persistence, Truncated) {
  const std::string bytes = serialize(fixtures::toy_db(1));
  EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 5)), TruncatedError);
  EXPECT_THROW(deserialize(bytes.substr(0, 10)), TruncatedError);
  EXPECT_THROW(deserialize(bytes.substr(0, 40)), TruncatedError);
}

TEST(Persistence, BadMagic) {
  std::string bytes = serialize(fixtures::toy_db(1));
  bytes[0] = 'X';
  EXPECT_THROW(deserialize(bytes), FormatError);
}

TEST(Persistence, TrailingBytes) {
  EXPECT_THROW(deserialize(serialize(fixtures::toy_db(1)) + "x"), FormatError);
}

TEST(Persistence, SceneMismatch) {
  const auto dir = fixtures::temp_dir("rfmap_mismatch");
  const RfMapDb db = fixtures::toy_db(3);
  save(db, dir / "t.rfmap");
  EXPECT_NO_THROW(load(dir / "t.rfmap", db.scene()));
  Scene other = db.scene();
  other.bs.tx_power_dbm += 1.0;
  EXPECT_THROW(load(dir / "t.rfmap", other), SceneMismatchError);
}

TEST(Csv, HeaderAndRowCount) {
  const RfMapDb db = fixtures::toy_db(5);
  std::ostringstream out;
  write_rfmap_csv(db, out);
  const std::string csv = out.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "beam,subband,position_index,rss_dbm");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + db.n_beams() * db.n_subbands() * db.n_positions());
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  std::ostringstream expected;
  char value[32];
  std::snprintf(value, sizeof value, "%.3f", db.value(0, 0, 0));
  expected << "0,0,0," << value;
  EXPECT_EQ(line, expected.str());
}
