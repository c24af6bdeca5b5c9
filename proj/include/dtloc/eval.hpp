// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/locate.hpp"
#include "dtloc/rfmap.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtloc {

/// Report dimensions (|K|, |B|, |T|).
struct Combo {
  int n_beams = 1;
  int n_subbands = 1;
  int n_times = 1;

  bool operator==(const Combo &) const = default;
  std::string label() const;
};

/// Where to evaluate: explicit position indices, or the automatically chosen
/// line-of-sight / non-line-of-sight representatives.
struct PositionSelection {
  bool automatic = true;
  std::vector<int> indices;
};

struct ExperimentConfig {
  std::filesystem::path db_path;
  std::filesystem::path output_dir = "results";
  int trials = 1000;
  std::uint64_t seed = 1;
  int bootstrap_resamples = 1000;
  double sigma_dbm = kDefaultSigmaDbm;
  std::optional<double> estimator_sigma_dbm;
  double delta_dbm = kDefaultDeltaDbm;

  bool error_map = true;
  /// Empty means every retained position.
  std::vector<int> error_map_positions;
  Combo error_map_combo;

  bool sweep = true;
  std::vector<int> ladder{1, 2, 4, 6};
  PositionSelection sweep_positions;

  bool percentiles = true;
  std::vector<double> quantiles{0.8, 0.9, 0.99};
  std::vector<Combo> percentile_combos{{1, 1, 1}, {2, 2, 2}, {4, 4, 4}, {6, 6, 6}};
  PositionSelection percentile_positions;
};

/// Parses the JSON experiment config and checks everything that does not need the database.
ExperimentConfig parse_experiment_config(const std::string &text);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);
void validate_experiment_config(const ExperimentConfig &config);
/// Checks that every combo, ladder rung and position fits the database.
void validate_experiment_config(const ExperimentConfig &config, const RfMapDb &db);

struct TrialSettings {
  double sigma_dbm = kDefaultSigmaDbm;
  std::optional<double> estimator_sigma_dbm;
  double delta_dbm = kDefaultDeltaDbm;
  std::uint64_t seed = 1;

  static TrialSettings from(const ExperimentConfig &config);
};

/// Localization errors of `trials` independent reports at one position. Trial i uses a seed
/// derived from (seed, position, combo, i), so a given combo reproduces everywhere.
std::vector<double> run_trials(const RfMapDb &db, int position, const Combo &combo, int trials,
                               const TrialSettings &settings, int workers = 1);

/// Nearest-rank empirical quantile; q = 1 is the maximum.
double empirical_quantile(std::vector<double> values, double q);
double mean(const std::vector<double> &values);
/// Pearson correlation; 0 when either input has zero variance.
double pearson(const std::vector<double> &x, const std::vector<double> &y);
/// Half-width of the 95% percentile-bootstrap interval of the mean.
double bootstrap_half_width(const std::vector<double> &values, int resamples, std::uint64_t seed);

/// Strongest value in a position's fingerprint (best beam and subband), dBm.
double best_rss(const RfMapDb &db, int position);

struct RepresentativePositions {
  int los = -1;
  int nlos = -1;
};
/// Highest-RSS line-of-sight cell near 50 m and highest-RSS non-line-of-sight cell near 80 m
/// (horizontal distance from the base station).
RepresentativePositions select_representative_positions(const RfMapDb &db);

struct ErrorStats {
  std::vector<int> positions;
  std::vector<double> mean_error_m;
  std::vector<double> best_rss_dbm;
  double correlation = 0.0;
  std::vector<double> quantiles;
  /// Quantiles of the per-position mean error, aligned with `quantiles`.
  std::vector<double> quantile_values;
};

ErrorStats run_error_map(const RfMapDb &db, const ExperimentConfig &config, int workers = 1);
void write_error_map_csv(const RfMapDb &db, const ErrorStats &stats, std::ostream &out);

struct SweepPoint {
  std::string sweep; ///< "beams", "subbands", "times" or "joint"
  int value = 1;
  Combo combo;
  double mean_error_m = 0.0;
  double ci_half_width_m = 0.0;
  std::vector<double> errors;
};

struct SweepResult {
  int position = -1;
  std::vector<SweepPoint> points;

  const SweepPoint &at(const std::string &sweep, int value) const;
};

SweepResult run_sweep(const RfMapDb &db, const ExperimentConfig &config, int position,
                      int workers = 1);
void write_sweep_csv(const SweepResult &sweep, std::ostream &out);

struct PercentileRow {
  std::string label;
  int position = -1;
  double quantile = 0.0;
  std::vector<double> values; ///< one per combo
  std::vector<std::optional<double>> reference; ///< reference values, where they exist
};

struct PercentileTable {
  std::vector<Combo> combos;
  std::vector<PercentileRow> rows;
};

PercentileTable percentile_table(const RfMapDb &db, const ExperimentConfig &config,
                                 const std::vector<std::pair<std::string, int>> &positions,
                                 int workers = 1);
void write_percentile_csv(const PercentileTable &table, std::ostream &out);

/// Runs every enabled experiment and writes CSVs plus manifest.json into config.output_dir.
/// Wall-clock timings go to timings.json, the only output that varies between runs.
void run_experiment(const RfMapDb &db, const ExperimentConfig &config, int workers = 1);

} // namespace dtloc
