// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/rfmap.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtloc {

inline constexpr double kDefaultSigmaDbm = 2.0;
inline constexpr double kDefaultDeltaDbm = 1e-4;
inline constexpr int kReportSchemaVersion = 1;

enum class SubbandPolicy {
  Even,     ///< evenly spaced across the band (centres of n equal slices)
  Explicit, ///< the indices listed in ReportSpec::subbands
};

struct ReportSpec {
  int n_beams = 1;
  int n_subbands = 1;
  int n_times = 1;
  SubbandPolicy policy = SubbandPolicy::Even;
  std::vector<int> subbands;
  /// Measurement noise; 0 yields noiseless reports.
  double sigma_dbm = kDefaultSigmaDbm;
  std::uint64_t seed = 0;
  /// Choose top beams on a noisy draw instead of the noiseless fingerprint.
  bool noisy_beam_selection = false;
};

struct ReportEntry {
  int beam = 0;
  int subband = 0;
  int time = 0;
  double rss_dbm = 0.0;

  bool operator==(const ReportEntry &) const = default;
};

/// A user's measurement set. `true_position` is carried for scoring only; the estimator
/// never reads it.
struct MeasurementReport {
  std::vector<ReportEntry> entries;
  std::optional<int> true_position;
  std::string scene_hash;
  double sigma_dbm = kDefaultSigmaDbm;

  bool operator==(const MeasurementReport &) const = default;
};

struct LocateOptions {
  /// Estimator noise; defaults to the report's sigma (or kDefaultSigmaDbm for noiseless reports).
  std::optional<double> sigma_dbm;
  /// Half-width of the probability interval around each measurement.
  double delta_dbm = kDefaultDeltaDbm;
};

struct LocalizationResult {
  int estimate = -1;
  Vec3 estimate_position = Vec3::Zero();
  /// One value per retained position.
  Eigen::VectorXd log_likelihood;
  std::optional<double> error_m;
  double runtime_s = 0.0;
};

/// Subband indices measured under `policy`; Even picks floor((2i+1) * total / (2n)).
std::vector<int> select_subbands(int total, const ReportSpec &spec);

/// The n strongest beams in `subband`, strongest first; ties go to the lower index.
std::vector<int> select_top_beams(const Eigen::Ref<const Eigen::MatrixXd> &fingerprint, int n,
                                  int subband);

/// Throws ValidationError if the report dimensions do not fit the database dimensions.
void validate_report_spec(const ReportSpec &spec, const RfMapDb &db);

/// Gaussian draws around the database fingerprint of `true_position`.
MeasurementReport sample_report(const RfMapDb &db, int true_position, const ReportSpec &spec);

double estimator_sigma(const MeasurementReport &report, const LocateOptions &options);

/// Log of the product of per-entry interval probabilities, using the midpoint rule
/// pdf * 2 * delta for each interval.
double log_likelihood(const RfMapDb &db, const MeasurementReport &report, int candidate,
                      const LocateOptions &options = {});

/// Exhaustive argmax over all retained positions; ties resolve to the lowest index.
LocalizationResult localize(const RfMapDb &db, const MeasurementReport &report,
                            const LocateOptions &options = {});

/// Positions ordered by descending log-likelihood (ties by index), truncated to n.
std::vector<int> top_candidates(const LocalizationResult &result, int n);

void write_report(std::ostream &out, const MeasurementReport &report);
MeasurementReport read_report(std::istream &in);

} // namespace dtloc
