// SPDX-License-Identifier: Apache-2.0
#include "dtloc/cli.hpp"

#include "dtloc/error.hpp"
#include "dtloc/eval.hpp"
#include "dtloc/locate.hpp"
#include "dtloc/parallel.hpp"
#include "dtloc/rfmap.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace dtloc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Retained-position count of the reference layout, printed for comparison.
constexpr int kReferenceRetained = 4286;

struct Globals {
  int workers = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

struct ValidateArgs {
  std::string scene;
};

struct BuildArgs {
  std::string scene;
  std::string output;
  std::string csv;
  int depth = 5;
  int oversampling = 1;
  std::string aggregation = "coherent";
};

struct LocalizeArgs {
  std::string db;
  std::string report;
  std::string scene;
  std::vector<std::int64_t> simulate;
  double sigma = kDefaultSigmaDbm;
  std::optional<double> estimator_sigma;
  double delta = kDefaultDeltaDbm;
  int top = 5;
};

struct EvaluateArgs {
  std::string db;
  std::string config;
  std::string output_dir;
  std::optional<int> trials;
};

json position_json(const Vec3 &p) { return json::array({p.x(), p.y(), p.z()}); }

int cmd_validate(const ValidateArgs &a, std::ostream &out, std::ostream &err) {
  Scene scene = load_scene(fs::absolute(a.scene));
  for (const auto &w : validate_scene(scene)) err << "warning: " << w << '\n';
  const PositionGrid grid = generate_grid(scene);
  out << "scene: " << scene.name << '\n'
      << "buildings: " << scene.buildings.size() << '\n'
      << "grid: " << grid.rows() << " x " << grid.cols() << " = " << grid.cell_count() << " cells\n"
      << "masked: " << grid.masked_count() << '\n'
      << "retained: " << grid.retained_count() << " (reference scene: " << kReferenceRetained << ")\n"
      << "subbands: " << scene.n_subbands() << '\n'
      << "scene_hash: " << scene_hash(scene) << '\n';
  return kExitOk;
}

int cmd_build(const BuildArgs &a, const Globals &g, std::ostream &out, std::ostream &err) {
  const fs::path scene_path = fs::absolute(a.scene);
  const fs::path out_path = fs::absolute(a.output);
  const Scene scene = load_scene(scene_path);
  BuildParams params;
  params.max_depth = a.depth;
  params.oversampling = a.oversampling;
  params.aggregation = aggregation_from_string(a.aggregation);
  const PositionGrid grid = generate_grid(scene);
  const Codebook codebook = dft_codebook(scene.bs.array.n_antennas, params.oversampling);
  BuildStats stats;
  const RfMapDb db = build(scene, grid, codebook, params, g.workers, &stats);
  save(db, out_path);
  if (!a.csv.empty()) {
    std::ofstream csv(fs::absolute(a.csv), std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(a.csv + ": cannot write");
    write_rfmap_csv(db, csv);
  }
  out << "wrote " << out_path.string() << '\n'
      << "tensor: " << db.n_beams() << " beams x " << db.n_subbands() << " subbands x " << db.n_positions()
      << " positions\n"
      << "image_tree_nodes: " << stats.image_tree_nodes << '\n'
      << "los_positions: " << stats.los_positions << '\n'
      << "seconds: " << stats.seconds << '\n'
      << "positions_per_s: " << (stats.seconds > 0 ? db.n_positions() / stats.seconds : 0.0) << '\n'
      << "path_count_histogram:\n";
  for (const auto &[paths, count] : stats.path_count_histogram) out << "  " << paths << ": " << count << '\n';
  if (g.verbose) err << "scene_hash: " << db.scene_hash() << '\n';
  return kExitOk;
}

int cmd_localize(const LocalizeArgs &a, const Globals &g, std::ostream &out, std::ostream &err) {
  const fs::path db_path = fs::absolute(a.db);
  const RfMapDb db = a.scene.empty() ? load(db_path) : load(db_path, load_scene(fs::absolute(a.scene)));
  MeasurementReport report;
  if (!a.simulate.empty()) {
    const auto &s = a.simulate;
    if (s[0] < 0 || s[0] >= db.n_positions()) throw ValidationError("simulate.position", "out of range");
    ReportSpec spec;
    spec.n_beams = static_cast<int>(s[1]);
    spec.n_subbands = static_cast<int>(s[2]);
    spec.n_times = static_cast<int>(s[3]);
    spec.seed = static_cast<std::uint64_t>(s[4]);
    spec.sigma_dbm = a.sigma;
    report = sample_report(db, static_cast<int>(s[0]), spec);
  } else {
    std::ifstream in(fs::absolute(a.report), std::ios::binary);
    if (!in) throw Error(a.report + ": cannot open");
    report = read_report(in);
  }
  LocateOptions options;
  options.sigma_dbm = a.estimator_sigma;
  options.delta_dbm = a.delta;
  const LocalizationResult result = localize(db, report, options);

  json top = json::array();
  for (int p : top_candidates(result, a.top)) {
    top.push_back({{"position_index", p},
                   {"position", position_json(db.grid().position(p))},
                   {"log_likelihood", result.log_likelihood(p)}});
  }
  json record{{"estimate", result.estimate},
              {"position", position_json(result.estimate_position)},
              {"log_likelihood", result.log_likelihood(result.estimate)},
              {"entries", report.entries.size()},
              {"top", std::move(top)}};
  if (report.true_position) {
    record["true_position"] = *report.true_position;
    record["error_m"] = *result.error_m;
  }
  out << record.dump() << '\n';
  if (g.verbose) err << "runtime_s: " << result.runtime_s << '\n';
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs &a, const Globals &g, std::ostream &out, std::ostream &err) {
  ExperimentConfig config = load_experiment_config(fs::absolute(a.config));
  config.db_path = fs::absolute(a.db);
  if (!a.output_dir.empty()) config.output_dir = a.output_dir;
  config.output_dir = fs::absolute(config.output_dir);
  if (a.trials) config.trials = *a.trials;
  if (g.seed) config.seed = *g.seed;
  validate_experiment_config(config);
  const RfMapDb db = load(config.db_path);
  validate_experiment_config(config, db);
  run_experiment(db, config, g.workers);
  out << "wrote " << config.output_dir.string() << '\n';
  if (g.verbose) {
    std::ifstream timings(config.output_dir / "timings.json");
    err << timings.rdbuf();
  }
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Digital-twin RF fingerprint localization: scene validation, RF-map building, "
               "localization and Monte-Carlo evaluation.\n\n"
               "Exit codes: 0 ok, 1 failure, 2 parse error, 3 invalid input, 4 scene mismatch, "
               "5 bad database file, 64 usage error."};
  app.set_config("--config", "", "TOML/INI file with default flag values (flags override it)");
  app.require_subcommand(1);

  Globals g;
  g.workers = default_workers();
  app.add_option("-j,--workers", g.workers, "Worker threads for build/evaluate")
      ->envname("DTLOC_WORKERS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Master seed for evaluate (overrides the experiment config)");
  app.add_flag("-v,--verbose", g.verbose, "Print timings and extra diagnostics to stderr");

  ValidateArgs va;
  auto *validate = app.add_subcommand("validate", "Check a scene file and summarize its grid");
  validate->add_option("scene", va.scene, "Scene file (JSON)")->required();

  BuildArgs ba;
  auto *build_cmd = app.add_subcommand("build", "Trace the scene and write the RF-map database");
  build_cmd->add_option("scene", ba.scene, "Scene file (JSON)")->required();
  build_cmd->add_option("-o,--output", ba.output, "Database output path")->required();
  build_cmd->add_option("--depth", ba.depth, "Maximum reflection order (0 = direct path only)")
      ->check(CLI::Range(0, 16))
      ->capture_default_str();
  build_cmd->add_option("--oversampling", ba.oversampling, "Codebook oversampling factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build_cmd->add_option("--aggregation", ba.aggregation, "Subband aggregation: coherent or power")
      ->check(CLI::IsMember({"coherent", "power"}))
      ->capture_default_str();
  build_cmd->add_option("--csv", ba.csv, "Also write beam,subband,position_index,rss_dbm rows");

  LocalizeArgs la;
  auto *localize_cmd = app.add_subcommand("localize", "Localize one measurement report");
  localize_cmd->add_option("db", la.db, "RF-map database")->required();
  auto *report_opt = localize_cmd->add_option("--report", la.report, "Measurement report (JSON)");
  auto *sim_opt = localize_cmd->add_option("--simulate", la.simulate,
                                           "Simulate a report: POSITION BEAMS SUBBANDS TIMES SEED")
                      ->expected(5);
  report_opt->excludes(sim_opt);
  sim_opt->excludes(report_opt);
  localize_cmd->add_option("--sigma", la.sigma, "Measurement noise for --simulate, dB (0 = noiseless)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  localize_cmd->add_option("--estimator-sigma", la.estimator_sigma, "Estimator noise, dB");
  localize_cmd->add_option("--delta", la.delta, "Likelihood interval half-width, dB")->capture_default_str();
  localize_cmd->add_option("--scene", la.scene, "Reject the database unless it was built from this scene");
  localize_cmd->add_option("--top", la.top, "Number of candidates to list")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  EvaluateArgs ea;
  auto *evaluate_cmd = app.add_subcommand("evaluate", "Run the experiments of a config file");
  evaluate_cmd->add_option("db", ea.db, "RF-map database")->required();
  evaluate_cmd->add_option("config", ea.config, "Experiment config (JSON)")->required();
  evaluate_cmd->add_option("-o,--output-dir", ea.output_dir, "Override output_dir from the config");
  evaluate_cmd->add_option("--trials", ea.trials, "Override trials from the config");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (localize_cmd->parsed() && la.simulate.empty() && la.report.empty()) {
    err << "error: localize needs --report or --simulate\n";
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(va, out, err);
    if (build_cmd->parsed()) return cmd_build(ba, g, out, err);
    if (localize_cmd->parsed()) return cmd_localize(la, g, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(ea, g, out, err);
  } catch (const SceneMismatchError &e) {
    err << "error: scene mismatch: " << e.what() << '\n';
    return kExitSceneMismatch;
  } catch (const FormatError &e) {
    err << "error: bad database: " << e.what() << '\n';
    return kExitBadDatabase;
  } catch (const ParseError &e) {
    err << "error: parse: " << e.what() << '\n';
    return kExitParseError;
  } catch (const ValidationError &e) {
    err << "error: invalid " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::out_of_range &e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

} // namespace dtloc
