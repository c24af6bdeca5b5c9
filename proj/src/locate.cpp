// SPDX-License-Identifier: Apache-2.0
#include "dtloc/locate.hpp"

#include "dtloc/error.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace dtloc {

std::vector<int> select_subbands(int total, const ReportSpec &spec) {
  if (spec.policy == SubbandPolicy::Explicit) {
    if (static_cast<int>(spec.subbands.size()) != spec.n_subbands) {
      throw ValidationError("subbands", "explicit list length must equal n_subbands");
    }
    for (int b : spec.subbands) {
      if (b < 0 || b >= total) throw ValidationError("subbands", "index out of range");
    }
    return spec.subbands;
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(spec.n_subbands));
  for (int i = 0; i < spec.n_subbands; ++i) out.push_back((2 * i + 1) * total / (2 * spec.n_subbands));
  return out;
}

std::vector<int> select_top_beams(const Eigen::Ref<const Eigen::MatrixXd> &fingerprint, int n,
                                  int subband) {
  const int total = static_cast<int>(fingerprint.rows());
  if (n < 1 || n > total) throw ValidationError("n_beams", "must be in [1, beam count]");
  std::vector<int> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return fingerprint(a, subband) > fingerprint(b, subband);
  });
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

void validate_report_spec(const ReportSpec &spec, const RfMapDb &db) {
  if (spec.n_beams < 1 || spec.n_beams > db.n_beams()) {
    throw ValidationError("n_beams", "must be in [1, " + std::to_string(db.n_beams()) + "]");
  }
  if (spec.n_subbands < 1 || spec.n_subbands > db.n_subbands()) {
    throw ValidationError("n_subbands", "must be in [1, " + std::to_string(db.n_subbands()) + "]");
  }
  if (spec.n_times < 1) throw ValidationError("n_times", "must be >= 1");
  if (!(spec.sigma_dbm >= 0.0) || !std::isfinite(spec.sigma_dbm)) {
    throw ValidationError("sigma_dbm", "must be >= 0");
  }
}

MeasurementReport sample_report(const RfMapDb &db, int true_position, const ReportSpec &spec) {
  validate_report_spec(spec, db);
  const auto fp = db.fingerprint(true_position);
  const std::vector<int> subbands = select_subbands(db.n_subbands(), spec);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](double mean) { return spec.sigma_dbm > 0 ? mean + spec.sigma_dbm * noise(rng) : mean; };

  std::vector<int> beams;
  if (spec.noisy_beam_selection) {
    Eigen::MatrixXd noisy = fp;
    for (Eigen::Index k = 0; k < noisy.rows(); ++k) noisy(k, subbands.front()) = draw(fp(k, subbands.front()));
    beams = select_top_beams(noisy, spec.n_beams, subbands.front());
  } else {
    beams = select_top_beams(fp, spec.n_beams, subbands.front());
  }

  MeasurementReport report;
  report.true_position = true_position;
  report.scene_hash = db.scene_hash();
  report.sigma_dbm = spec.sigma_dbm;
  report.entries.reserve(beams.size() * subbands.size() * static_cast<std::size_t>(spec.n_times));
  for (int t = 0; t < spec.n_times; ++t) {
    for (int b : subbands) {
      for (int k : beams) report.entries.push_back({k, b, t, draw(fp(k, b))});
    }
  }
  return report;
}

double estimator_sigma(const MeasurementReport &report, const LocateOptions &options) {
  const double sigma = options.sigma_dbm.value_or(report.sigma_dbm > 0 ? report.sigma_dbm : kDefaultSigmaDbm);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma_dbm", "estimator sigma must be > 0");
  return sigma;
}

namespace {

struct Scorer {
  std::vector<Eigen::Index> offsets;
  std::vector<double> measured;
  double inv_sigma = 1.0;
  double entry_constant = 0.0;

  Scorer(const RfMapDb &db, const MeasurementReport &report, const LocateOptions &options) {
    if (report.scene_hash != db.scene_hash()) {
      throw SceneMismatchError("report scene hash " + report.scene_hash +
                               " does not match database scene hash " + db.scene_hash());
    }
    if (!(options.delta_dbm > 0.0)) throw ValidationError("delta_dbm", "must be > 0");
    const double sigma = estimator_sigma(report, options);
    inv_sigma = 1.0 / sigma;
    entry_constant = std::log(2.0 * options.delta_dbm) - std::log(sigma * std::sqrt(2.0 * kPi));
    offsets.reserve(report.entries.size());
    measured.reserve(report.entries.size());
    for (const auto &e : report.entries) {
      if (e.beam < 0 || e.beam >= db.n_beams() || e.subband < 0 || e.subband >= db.n_subbands()) {
        throw ValidationError("entries", "beam or subband index outside the database");
      }
      offsets.push_back(e.beam + static_cast<Eigen::Index>(e.subband) * db.n_beams());
      measured.push_back(e.rss_dbm);
    }
  }

  double operator()(const double *column) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      const double z = (measured[i] - column[offsets[i]]) * inv_sigma;
      acc += -0.5 * z * z + entry_constant;
    }
    return acc;
  }
};

} // namespace

double log_likelihood(const RfMapDb &db, const MeasurementReport &report, int candidate,
                      const LocateOptions &options) {
  const Scorer score(db, report, options);
  if (candidate < 0 || candidate >= db.n_positions()) {
    throw std::out_of_range("candidate position out of range");
  }
  return score(db.data().col(candidate).data());
}

LocalizationResult localize(const RfMapDb &db, const MeasurementReport &report,
                            const LocateOptions &options) {
  const auto start = std::chrono::steady_clock::now();
  if (db.n_positions() == 0) throw Error("localize: empty database");
  const Scorer score(db, report, options);
  LocalizationResult result;
  result.log_likelihood.resize(db.n_positions());
  int best = 0;
  for (int p = 0; p < db.n_positions(); ++p) {
    const double ll = score(db.data().col(p).data());
    result.log_likelihood(p) = ll;
    if (ll > result.log_likelihood(best)) best = p;
  }
  result.estimate = best;
  result.estimate_position = db.grid().position(best);
  if (report.true_position) {
    result.error_m = (db.grid().position(*report.true_position) - result.estimate_position).norm();
  }
  result.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<int> top_candidates(const LocalizationResult &result, int n) {
  std::vector<int> idx(static_cast<std::size_t>(result.log_likelihood.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto keep = static_cast<std::size_t>(std::clamp<Eigen::Index>(n, 0, result.log_likelihood.size()));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), [&](int a, int b) {
    const double la = result.log_likelihood(a);
    const double lb = result.log_likelihood(b);
    return la > lb || (la == lb && a < b);
  });
  idx.resize(keep);
  return idx;
}

void write_report(std::ostream &out, const MeasurementReport &report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto &e : report.entries) {
    entries.push_back({{"beam", e.beam}, {"subband", e.subband}, {"time", e.time}, {"rss_dbm", e.rss_dbm}});
  }
  nlohmann::json j{{"schema_version", kReportSchemaVersion},
                   {"scene_hash", report.scene_hash},
                   {"sigma_dbm", report.sigma_dbm},
                   {"entries", std::move(entries)}};
  if (report.true_position) j["true_position"] = *report.true_position;
  out << j.dump(2) << '\n';
}

MeasurementReport read_report(std::istream &in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  using detail::field;
  const int version = field<int>(j, "schema_version", "report");
  if (version != kReportSchemaVersion) {
    throw ValidationError("report.schema_version", "unsupported version " + std::to_string(version));
  }
  MeasurementReport r;
  r.scene_hash = field<std::string>(j, "scene_hash", "report");
  r.sigma_dbm = field<double>(j, "sigma_dbm", "report");
  if (j.contains("true_position") && !j.at("true_position").is_null()) {
    r.true_position = field<int>(j, "true_position", "report");
  }
  const auto &entries = detail::member(j, "entries", "report");
  if (!entries.is_array()) throw ParseError("report.entries: expected an array");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string p = "report.entries[" + std::to_string(i) + "]";
    r.entries.push_back({field<int>(entries[i], "beam", p), field<int>(entries[i], "subband", p),
                         field<int>(entries[i], "time", p), field<double>(entries[i], "rss_dbm", p)});
  }
  return r;
}

} // namespace dtloc
