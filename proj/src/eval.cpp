// SPDX-License-Identifier: Apache-2.0
#include "dtloc/eval.hpp"

#include "dtloc/error.hpp"
#include "dtloc/parallel.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace dtloc {

using nlohmann::json;
using detail::field;

std::string Combo::label() const {
  return std::to_string(n_beams) + "_" + std::to_string(n_subbands) + "_" + std::to_string(n_times);
}

namespace {

std::uint64_t combo_id(const Combo &c) {
  return (static_cast<std::uint64_t>(c.n_beams) << 40) | (static_cast<std::uint64_t>(c.n_subbands) << 20) |
         static_cast<std::uint64_t>(c.n_times);
}

Combo parse_combo(const json &j, const std::string &path) {
  if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected [beams, subbands, times]");
  return {detail::as<int>(j[0], path), detail::as<int>(j[1], path), detail::as<int>(j[2], path)};
}

json combo_json(const Combo &c) { return json::array({c.n_beams, c.n_subbands, c.n_times}); }

PositionSelection parse_selection(const json &j, const std::string &path, bool allow_all) {
  PositionSelection sel;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "auto" && !allow_all) return sel;
    if (s == "all" && allow_all) return sel;
    throw ParseError(path + ": unexpected value '" + s + "'");
  }
  sel.automatic = false;
  sel.indices = detail::as<std::vector<int>>(j, path);
  return sel;
}

json selection_json(const PositionSelection &s, const char *automatic_name) {
  if (s.automatic) return automatic_name;
  return s.indices;
}

// Reference quantiles for the representative positions, keyed by (label, quantile, combo).
struct Reference {
  const char *label;
  double quantile;
  std::array<double, 4> values; // combos (1,1,1) (2,2,2) (4,4,4) (6,6,6)
};
constexpr std::array<Reference, 6> kReferenceTable{{
    {"los", 0.99, {48.1, 31.7, 2.1, 1.8}},
    {"los", 0.90, {40.8, 9.4, 2.0, 1.6}},
    {"los", 0.80, {32.3, 3.0, 1.9, 1.6}},
    {"nlos", 0.99, {123.7, 121.5, 81.4, 1.4}},
    {"nlos", 0.90, {111.2, 116.7, 66.1, 0.8}},
    {"nlos", 0.80, {91.6, 112.8, 0.8, 0.7}},
}};

std::optional<double> reference_value(const std::string &label, double q, const Combo &c) {
  if (c.n_beams != c.n_subbands || c.n_beams != c.n_times) return std::nullopt;
  constexpr std::array<int, 4> rungs{1, 2, 4, 6};
  const auto it = std::find(rungs.begin(), rungs.end(), c.n_beams);
  if (it == rungs.end()) return std::nullopt;
  for (const auto &r : kReferenceTable) {
    if (label == r.label && std::abs(q - r.quantile) < 1e-12) {
      return r.values[static_cast<std::size_t>(it - rungs.begin())];
    }
  }
  return std::nullopt;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string &text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("experiment config: expected a JSON object");
  ExperimentConfig c;
  if (j.contains("db")) c.db_path = field<std::string>(j, "db", "");
  if (j.contains("output_dir")) c.output_dir = field<std::string>(j, "output_dir", "");
  if (j.contains("trials")) c.trials = field<int>(j, "trials", "");
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", "");
  if (j.contains("bootstrap_resamples")) c.bootstrap_resamples = field<int>(j, "bootstrap_resamples", "");
  if (j.contains("sigma_dbm")) c.sigma_dbm = field<double>(j, "sigma_dbm", "");
  if (j.contains("estimator_sigma_dbm") && !j.at("estimator_sigma_dbm").is_null()) {
    c.estimator_sigma_dbm = field<double>(j, "estimator_sigma_dbm", "");
  }
  if (j.contains("delta_dbm")) c.delta_dbm = field<double>(j, "delta_dbm", "");

  if (j.contains("error_map")) {
    const json &e = j.at("error_map");
    c.error_map = e.value("enabled", true);
    if (e.contains("positions")) {
      const auto sel = parse_selection(e.at("positions"), "error_map.positions", true);
      c.error_map_positions = sel.indices;
    }
    if (e.contains("combo")) c.error_map_combo = parse_combo(e.at("combo"), "error_map.combo");
  }
  if (j.contains("sweep")) {
    const json &s = j.at("sweep");
    c.sweep = s.value("enabled", true);
    if (s.contains("ladder")) c.ladder = field<std::vector<int>>(s, "ladder", "sweep");
    if (s.contains("positions")) c.sweep_positions = parse_selection(s.at("positions"), "sweep.positions", false);
  }
  if (j.contains("percentiles")) {
    const json &p = j.at("percentiles");
    c.percentiles = p.value("enabled", true);
    if (p.contains("quantiles")) c.quantiles = field<std::vector<double>>(p, "quantiles", "percentiles");
    if (p.contains("combos")) {
      c.percentile_combos.clear();
      const json &combos = p.at("combos");
      if (!combos.is_array()) throw ParseError("percentiles.combos: expected an array");
      for (std::size_t i = 0; i < combos.size(); ++i) {
        c.percentile_combos.push_back(parse_combo(combos[i], "percentiles.combos[" + std::to_string(i) + "]"));
      }
    }
    if (p.contains("positions")) {
      c.percentile_positions = parse_selection(p.at("positions"), "percentiles.positions", false);
    }
  }
  validate_experiment_config(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

void validate_experiment_config(const ExperimentConfig &c) {
  if (c.trials < 1) throw ValidationError("trials", "must be >= 1");
  if (c.bootstrap_resamples < 1) throw ValidationError("bootstrap_resamples", "must be >= 1");
  if (!(c.sigma_dbm >= 0.0)) throw ValidationError("sigma_dbm", "must be >= 0");
  if (c.estimator_sigma_dbm && !(*c.estimator_sigma_dbm > 0.0)) {
    throw ValidationError("estimator_sigma_dbm", "must be > 0");
  }
  if (!(c.delta_dbm > 0.0)) throw ValidationError("delta_dbm", "must be > 0");
  for (double q : c.quantiles) {
    if (!(q > 0.0 && q <= 1.0)) throw ValidationError("percentiles.quantiles", "each quantile must lie in (0, 1]");
  }
  for (int v : c.ladder) {
    if (v < 1) throw ValidationError("sweep.ladder", "values must be >= 1");
  }
  auto check_combo = [](const Combo &k, const std::string &f) {
    if (k.n_beams < 1 || k.n_subbands < 1 || k.n_times < 1) throw ValidationError(f, "counts must be >= 1");
  };
  check_combo(c.error_map_combo, "error_map.combo");
  for (const auto &k : c.percentile_combos) check_combo(k, "percentiles.combos");
}

void validate_experiment_config(const ExperimentConfig &c, const RfMapDb &db) {
  validate_experiment_config(c);
  auto check_combo = [&](const Combo &k, const std::string &f) {
    if (k.n_beams > db.n_beams()) throw ValidationError(f, "more beams than the database holds");
    if (k.n_subbands > db.n_subbands()) throw ValidationError(f, "more subbands than the database holds");
  };
  check_combo(c.error_map_combo, "error_map.combo");
  for (const auto &k : c.percentile_combos) check_combo(k, "percentiles.combos");
  for (int v : c.ladder) check_combo({v, v, v}, "sweep.ladder");
  auto check_positions = [&](const std::vector<int> &idx, const std::string &f) {
    for (int p : idx) {
      if (p < 0 || p >= db.n_positions()) throw ValidationError(f, "position " + std::to_string(p) + " out of range");
    }
  };
  check_positions(c.error_map_positions, "error_map.positions");
  check_positions(c.sweep_positions.indices, "sweep.positions");
  check_positions(c.percentile_positions.indices, "percentiles.positions");
}

TrialSettings TrialSettings::from(const ExperimentConfig &c) {
  return {c.sigma_dbm, c.estimator_sigma_dbm, c.delta_dbm, c.seed};
}

std::vector<double> run_trials(const RfMapDb &db, int position, const Combo &combo, int trials,
                               const TrialSettings &settings, int workers) {
  std::vector<double> errors(static_cast<std::size_t>(trials));
  LocateOptions options;
  options.sigma_dbm = settings.estimator_sigma_dbm;
  options.delta_dbm = settings.delta_dbm;
  parallel_for(errors.size(), workers, [&](std::size_t i) {
    ReportSpec spec;
    spec.n_beams = combo.n_beams;
    spec.n_subbands = combo.n_subbands;
    spec.n_times = combo.n_times;
    spec.sigma_dbm = settings.sigma_dbm;
    spec.seed = derive_seed(settings.seed, static_cast<std::uint64_t>(position), combo_id(combo), i);
    const MeasurementReport report = sample_report(db, position, spec);
    errors[i] = *localize(db, report, options).error_m;
  });
  return errors;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("values", "empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("quantile", "must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) - 1e-9));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

double mean(const std::vector<double> &values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2) return 0.0;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double bootstrap_half_width(const std::vector<double> &values, int resamples, std::uint64_t seed) {
  if (values.size() < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto &m : means) {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += values[pick(rng)];
    m = acc / static_cast<double>(values.size());
  }
  const double lo = empirical_quantile(means, 0.025);
  const double hi = empirical_quantile(means, 0.975);
  return 0.5 * (hi - lo);
}

double best_rss(const RfMapDb &db, int position) { return db.fingerprint(position).maxCoeff(); }

RepresentativePositions select_representative_positions(const RfMapDb &db) {
  const Scene &scene = db.scene();
  const Vec2 bs = scene.bs.position.head<2>();
  auto pick = [&](double target, bool los) {
    for (double tol = 5.0; tol <= 200.0; tol += 5.0) {
      int best = -1;
      double best_val = 0.0;
      for (int p = 0; p < db.n_positions(); ++p) {
        const Vec3 &pos = db.grid().position(p);
        if (std::abs((pos.head<2>() - bs).norm() - target) > tol) continue;
        if (segment_occluded(scene, scene.bs.position, pos) == los) continue;
        const double v = best_rss(db, p);
        if (!los && v <= db.params().floor_dbm) continue;
        if (best < 0 || v > best_val) {
          best = p;
          best_val = v;
        }
      }
      if (best >= 0) return best;
    }
    return -1;
  };
  return {pick(50.0, true), pick(80.0, false)};
}

ErrorStats run_error_map(const RfMapDb &db, const ExperimentConfig &config, int workers) {
  validate_experiment_config(config, db);
  ErrorStats stats;
  if (config.error_map_positions.empty()) {
    stats.positions.resize(static_cast<std::size_t>(db.n_positions()));
    std::iota(stats.positions.begin(), stats.positions.end(), 0);
  } else {
    stats.positions = config.error_map_positions;
  }
  const auto n = stats.positions.size();
  stats.mean_error_m.resize(n);
  stats.best_rss_dbm.resize(n);
  const TrialSettings settings = TrialSettings::from(config);
  parallel_for(n, workers, [&](std::size_t i) {
    const int p = stats.positions[i];
    stats.mean_error_m[i] = mean(run_trials(db, p, config.error_map_combo, config.trials, settings, 1));
    stats.best_rss_dbm[i] = best_rss(db, p);
  });
  stats.correlation = pearson(stats.best_rss_dbm, stats.mean_error_m);
  stats.quantiles = config.quantiles;
  for (double q : config.quantiles) stats.quantile_values.push_back(empirical_quantile(stats.mean_error_m, q));
  return stats;
}

void write_error_map_csv(const RfMapDb &db, const ErrorStats &stats, std::ostream &out) {
  out << "position_index,cell,x,y,z,best_rss_dbm,mean_error_m\n";
  for (std::size_t i = 0; i < stats.positions.size(); ++i) {
    const int p = stats.positions[i];
    const Vec3 &pos = db.grid().position(p);
    out << p << ',' << db.grid().cell_of(p) << ',' << fmt(pos.x()) << ',' << fmt(pos.y()) << ','
        << fmt(pos.z()) << ',' << fmt(stats.best_rss_dbm[i]) << ',' << fmt(stats.mean_error_m[i]) << '\n';
  }
}

const SweepPoint &SweepResult::at(const std::string &sweep, int value) const {
  for (const auto &p : points) {
    if (p.sweep == sweep && p.value == value) return p;
  }
  throw std::out_of_range("no sweep point " + sweep + "=" + std::to_string(value));
}

SweepResult run_sweep(const RfMapDb &db, const ExperimentConfig &config, int position, int workers) {
  validate_experiment_config(config, db);
  if (position < 0 || position >= db.n_positions()) throw std::out_of_range("sweep position out of range");
  SweepResult result;
  result.position = position;
  const TrialSettings settings = TrialSettings::from(config);
  for (const char *sweep : {"beams", "subbands", "times", "joint"}) {
    const std::string name = sweep;
    for (int v : config.ladder) {
      SweepPoint pt;
      pt.sweep = name;
      pt.value = v;
      pt.combo = name == "beams"      ? Combo{v, 1, 1}
                 : name == "subbands" ? Combo{1, v, 1}
                 : name == "times"    ? Combo{1, 1, v}
                                      : Combo{v, v, v};
      pt.errors = run_trials(db, position, pt.combo, config.trials, settings, workers);
      pt.mean_error_m = mean(pt.errors);
      pt.ci_half_width_m = bootstrap_half_width(
          pt.errors, config.bootstrap_resamples,
          derive_seed(config.seed, static_cast<std::uint64_t>(position), combo_id(pt.combo), 0xB0075ULL));
      result.points.push_back(std::move(pt));
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult &sweep, std::ostream &out) {
  out << "position_index,sweep,value,n_beams,n_subbands,n_times,trials,mean_error_m,ci95_half_width_m\n";
  for (const auto &p : sweep.points) {
    out << sweep.position << ',' << p.sweep << ',' << p.value << ',' << p.combo.n_beams << ','
        << p.combo.n_subbands << ',' << p.combo.n_times << ',' << p.errors.size() << ','
        << fmt(p.mean_error_m) << ',' << fmt(p.ci_half_width_m) << '\n';
  }
}

PercentileTable percentile_table(const RfMapDb &db, const ExperimentConfig &config,
                                 const std::vector<std::pair<std::string, int>> &positions, int workers) {
  validate_experiment_config(config, db);
  PercentileTable table;
  table.combos = config.percentile_combos;
  const TrialSettings settings = TrialSettings::from(config);
  for (const auto &[label, p] : positions) {
    std::vector<std::vector<double>> errors;
    for (const auto &c : table.combos) errors.push_back(run_trials(db, p, c, config.trials, settings, workers));
    for (double q : config.quantiles) {
      PercentileRow row;
      row.label = label;
      row.position = p;
      row.quantile = q;
      for (std::size_t ci = 0; ci < table.combos.size(); ++ci) {
        row.values.push_back(empirical_quantile(errors[ci], q));
        row.reference.push_back(reference_value(label, q, table.combos[ci]));
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

void write_percentile_csv(const PercentileTable &table, std::ostream &out) {
  out << "label,position_index,quantile";
  for (const auto &c : table.combos) out << ",err_" << c.label() << "_m";
  for (const auto &c : table.combos) out << ",reference_" << c.label() << "_m";
  out << '\n';
  for (const auto &r : table.rows) {
    out << r.label << ',' << r.position << ',' << fmt(r.quantile);
    for (double v : r.values) out << ',' << fmt(v);
    for (const auto &ref : r.reference) out << ',' << (ref ? fmt(*ref) : std::string{});
    out << '\n';
  }
}

namespace {

std::vector<std::pair<std::string, int>> resolve_positions(const RfMapDb &db, const PositionSelection &sel) {
  std::vector<std::pair<std::string, int>> out;
  if (sel.automatic) {
    const auto reps = select_representative_positions(db);
    if (reps.los >= 0) out.emplace_back("los", reps.los);
    if (reps.nlos >= 0) out.emplace_back("nlos", reps.nlos);
  } else {
    for (int p : sel.indices) out.emplace_back("p" + std::to_string(p), p);
  }
  return out;
}

void write_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot write");
  out << content;
}

} // namespace

void run_experiment(const RfMapDb &db, const ExperimentConfig &config, int workers) {
  validate_experiment_config(config, db);
  std::filesystem::create_directories(config.output_dir);
  using clock = std::chrono::steady_clock;
  json timings = json::object();
  json outputs = json::array();
  json summary = json::object();

  if (config.error_map) {
    const auto t0 = clock::now();
    const ErrorStats stats = run_error_map(db, config, workers);
    std::ostringstream csv;
    write_error_map_csv(db, stats, csv);
    write_file(config.output_dir / "error_map.csv", csv.str());
    outputs.push_back("error_map.csv");
    summary["error_map"] = {{"positions", stats.positions.size()},
                            {"correlation_best_rss_vs_mean_error", stats.correlation},
                            {"mean_error_m", mean(stats.mean_error_m)}};
    timings["error_map_s"] = std::chrono::duration<double>(clock::now() - t0).count();
  }
  if (config.sweep) {
    const auto t0 = clock::now();
    for (const auto &[label, p] : resolve_positions(db, config.sweep_positions)) {
      const SweepResult sweep = run_sweep(db, config, p, workers);
      std::ostringstream csv;
      write_sweep_csv(sweep, csv);
      const std::string name = "sweep_" + label + ".csv";
      write_file(config.output_dir / name, csv.str());
      outputs.push_back(name);
      summary["sweep_positions"][label] = p;
    }
    timings["sweep_s"] = std::chrono::duration<double>(clock::now() - t0).count();
  }
  if (config.percentiles) {
    const auto t0 = clock::now();
    const PercentileTable table =
        percentile_table(db, config, resolve_positions(db, config.percentile_positions), workers);
    std::ostringstream csv;
    write_percentile_csv(table, csv);
    write_file(config.output_dir / "percentiles.csv", csv.str());
    outputs.push_back("percentiles.csv");
    timings["percentiles_s"] = std::chrono::duration<double>(clock::now() - t0).count();
  }

  json combos = json::array();
  for (const auto &c : config.percentile_combos) combos.push_back(combo_json(c));
  json manifest{
      {"scene_hash", db.scene_hash()},
      {"config",
       {{"db", config.db_path.string()},
        {"trials", config.trials},
        {"seed", config.seed},
        {"bootstrap_resamples", config.bootstrap_resamples},
        {"sigma_dbm", config.sigma_dbm},
        {"estimator_sigma_dbm", config.estimator_sigma_dbm ? json(*config.estimator_sigma_dbm) : json(nullptr)},
        {"delta_dbm", config.delta_dbm},
        {"error_map",
         {{"enabled", config.error_map},
          {"positions", config.error_map_positions.empty() ? json("all") : json(config.error_map_positions)},
          {"combo", combo_json(config.error_map_combo)}}},
        {"sweep",
         {{"enabled", config.sweep},
          {"ladder", config.ladder},
          {"positions", selection_json(config.sweep_positions, "auto")}}},
        {"percentiles",
         {{"enabled", config.percentiles},
          {"quantiles", config.quantiles},
          {"combos", combos},
          {"positions", selection_json(config.percentile_positions, "auto")}}}}},
      {"trial_seed_scheme", "splitmix64(seed, position, combo, trial)"},
      {"outputs", outputs},
      {"summary", summary}};
  write_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  write_file(config.output_dir / "timings.json", timings.dump(2) + "\n");
}

} // namespace dtloc
