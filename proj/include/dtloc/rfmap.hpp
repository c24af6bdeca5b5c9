// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/channel.hpp"
#include "dtloc/scene.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dtloc {

inline constexpr std::uint32_t kRfMapSchemaVersion = 1;
/// RSS resolution of the database, expressed as steps per dBm (1e-3 dBm).
inline constexpr int kDefaultStepsPerDbm = 1000;

struct BuildParams {
  int max_depth = 5;
  int oversampling = 1;
  Aggregation aggregation = Aggregation::Coherent;
  double floor_dbm = kDefaultFloorDbm;
  int steps_per_dbm = kDefaultStepsPerDbm;

  double quant_step_dbm() const { return 1.0 / steps_per_dbm; }
  ChannelConfig channel() const { return {aggregation, floor_dbm, oversampling}; }
  bool operator==(const BuildParams &) const = default;
};

/// Round-half-even onto the 1/steps_per_dbm grid; returns the integer code.
std::int32_t quantize_code(double dbm, int steps_per_dbm);
inline double dequantize(std::int32_t code, int steps_per_dbm) {
  return static_cast<double>(code) / static_cast<double>(steps_per_dbm);
}

/// Fingerprint database: quantized RSS over beams x subbands x positions.
///
/// Storage is position-major: column p of `data()` holds position p's fingerprint with the
/// beam index varying fastest, so a fingerprint is a contiguous n_beams x n_subbands block.
class RfMapDb {
public:
  RfMapDb() = default;
  RfMapDb(Scene scene, BuildParams params, int n_beams, int n_subbands,
          std::vector<std::int32_t> codes);

  int n_beams() const { return n_beams_; }
  int n_subbands() const { return n_subbands_; }
  int n_positions() const { return static_cast<int>(values_.cols()); }

  const Scene &scene() const { return scene_; }
  const std::string &scene_hash() const { return scene_hash_; }
  const PositionGrid &grid() const { return grid_; }
  const BuildParams &params() const { return params_; }
  int n_antennas() const { return scene_.bs.array.n_antennas; }

  /// (n_beams * n_subbands) x n_positions, dBm.
  const Eigen::MatrixXd &data() const { return values_; }
  std::span<const std::int32_t> codes() const { return codes_; }

  double value(int beam, int subband, int position) const {
    return values_(beam + subband * n_beams_, position);
  }

  /// n_beams x n_subbands view of one retained position; throws std::out_of_range.
  Eigen::Map<const Eigen::MatrixXd> fingerprint(int position) const;
  /// Same, addressed by grid cell; masked cells throw std::out_of_range.
  Eigen::Map<const Eigen::MatrixXd> fingerprint_at_cell(int cell) const;

  bool operator==(const RfMapDb &other) const;

private:
  Scene scene_;
  std::string scene_hash_;
  PositionGrid grid_;
  BuildParams params_;
  int n_beams_ = 0;
  int n_subbands_ = 0;
  std::vector<std::int32_t> codes_;
  Eigen::MatrixXd values_;
};

struct BuildStats {
  double seconds = 0.0;
  std::size_t image_tree_nodes = 0;
  /// path count -> number of positions with that many paths
  std::map<std::size_t, std::size_t> path_count_histogram;
  std::size_t los_positions = 0;
};

RfMapDb build(const Scene &scene, const PositionGrid &grid, const Codebook &codebook,
              const BuildParams &params, int workers = 1, BuildStats *stats = nullptr);

/// Builds from externally supplied paths (one PathSet per retained position).
RfMapDb build_from_paths(const Scene &scene, const std::vector<PathSet> &paths,
                         const Codebook &codebook, const BuildParams &params, int workers = 1);

void save(const RfMapDb &db, std::ostream &out);
void save(const RfMapDb &db, const std::filesystem::path &path);
/// Throws FormatError (bad magic, trailing data), VersionError, TruncatedError, ChecksumError.
RfMapDb load(std::istream &in);
RfMapDb load(const std::filesystem::path &path);
/// Also rejects a database built from a different scene with SceneMismatchError.
RfMapDb load(const std::filesystem::path &path, const Scene &expected);

/// `beam,subband,position_index,rss_dbm`
void write_rfmap_csv(const RfMapDb &db, std::ostream &out);

} // namespace dtloc
