#include "lmpf/cli.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmpf/case_io.hpp"
#include "lmpf/dcrg.hpp"
#include "lmpf/errors.hpp"
#include "lmpf/evaluation.hpp"
#include "lmpf/forecast.hpp"
#include "lmpf/mpp.hpp"
#include "lmpf/opf.hpp"
#include "lmpf/regions.hpp"
#include "lmpf/serialize.hpp"
#include "lmpf/stochastic.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct RunConfig {
  std::string case_path;
  std::string scenario_path;
  std::string store_path;
  int horizon = 4;
  int time = 0;
  std::vector<double> theta;
  long long samples = 10'000;
  std::uint64_t seed = 1;
  std::string mode = "offline";
  std::string out;
  std::string stream_out;
  std::string marginals_out;
  int workers = 1;
  bool contingencies = false;
  int observed_config = -1;
  int replications = 200;
  int last_issue = -1;
  int bins = 10;
};

/// Collects output documents and writes them only once the command has
/// succeeded. If a write fails, files already written are removed.
class Outputs {
 public:
  explicit Outputs(std::ostream& out) : out_(out) {}

  void add(const std::string& path, std::string text) { docs_.emplace_back(path, std::move(text)); }

  void commit() {
    std::vector<std::string> written;
    try {
      for (const auto& [path, text] : docs_) {
        if (path.empty()) {
          out_ << text;
          continue;
        }
        write_text_file(path, text);
        written.push_back(path);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) std::filesystem::remove(p, ec);
      throw;
    }
  }

 private:
  std::ostream& out_;
  std::vector<std::pair<std::string, std::string>> docs_;
};

VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_configuration(const CaseDocument& doc, int k) {
  if (k < 0 || k >= doc.contingencies.configuration_count())
    throw InvalidInput("configuration " + std::to_string(k) + " does not exist (the case has " +
                       std::to_string(doc.contingencies.configuration_count()) + ")");
}

MppProblem program_at(const CaseDocument& doc, int configuration, int time) {
  check_configuration(doc, configuration);
  const GridCase g = apply_contingency(doc.grid, doc.contingencies, configuration);
  return build_mpp(snapshot_at(g, doc.schedule, time));
}

VectorXd observed_theta(const RunConfig& c, const ScenarioModel& model) {
  if (c.time < 0 || c.time >= model.length()) throw InvalidInput("issue time lies outside the mean trajectory");
  if (c.theta.empty()) return model.mean_trajectory[c.time];
  VectorXd th = to_vector(c.theta);
  if (th.size() != model.dimension())
    throw InvalidInput("--theta has " + std::to_string(th.size()) + " values, the scenario has dimension " +
                       std::to_string(model.dimension()));
  return th;
}

ConditionalLaw law_for(const RunConfig& c, const ScenarioModel& model) {
  if (c.horizon < 0) throw InvalidInput("horizon must be non-negative");
  if (c.time + c.horizon >= model.length()) throw InvalidInput("issue time plus horizon exceeds the mean trajectory");
  return conditional_law(model, observed_theta(c, model), c.time, c.horizon);
}

void require_samples(const RunConfig& c) {
  if (c.samples < 1) throw InvalidInput("--samples must be at least 1");
  if (c.workers < 1) throw InvalidInput("--workers must be at least 1");
}

void cmd_solve(const RunConfig& c, Outputs& outputs) {
  const CaseDocument doc = read_case_file(c.case_path);
  const MppProblem p = program_at(doc, std::max(0, c.observed_config), c.time);
  if (static_cast<int>(c.theta.size()) != p.parameter_count())
    throw InvalidInput("--theta needs " + std::to_string(p.parameter_count()) + " values");
  outputs.add(c.out, save_dispatch(solve_dcopf(p, to_vector(c.theta)), p));
}

void cmd_enumerate(const RunConfig& c, Outputs& outputs) {
  const CaseDocument doc = read_case_file(c.case_path);
  const int k = std::max(0, c.observed_config);
  EnumerateOptions eo;
  eo.seed = c.seed;
  eo.configuration = k;
  outputs.add(c.out, save_region_store(enumerate_regions(program_at(doc, k, c.time), eo)));
}

ForecastDistribution forecast_one(const RunConfig& c, const CaseDocument& doc, int k, const ConditionalLaw& law,
                                  std::uint64_t seed) {
  const MppProblem p = program_at(doc, k, c.time + c.horizon);
  if (c.mode == "dcrg") {
    DcrgCache cache = make_dcrg_cache(p, k);
    DcrgOptions dopt;
    dopt.workers = c.workers;
    return forecast_dcrg(p, law, c.samples, seed, cache, dopt);
  }
  RegionStore store;
  if (!c.store_path.empty()) {
    store = load_region_store(read_text_file(c.store_path));
    if (store.configuration() != k)
      throw InvalidInput("--store holds configuration " + std::to_string(store.configuration()) + ", not " +
                         std::to_string(k));
    store.attach(p);
  } else {
    EnumerateOptions eo;
    eo.seed = c.seed;
    eo.configuration = k;
    store = enumerate_regions(p, eo);
  }
  ForecastOptions fo;
  fo.samples = c.samples;
  fo.seed = seed;
  fo.workers = c.workers;
  fo.issue_time = c.time;
  return p.is_quadratic() ? forecast_lmp_density_quadratic(store, law, fo) : forecast_regions(store, law, fo);
}

void cmd_forecast(const RunConfig& c, Outputs& outputs) {
  require_samples(c);
  if (c.mode != "offline" && c.mode != "dcrg") throw InvalidInput("--mode must be 'offline' or 'dcrg'");
  const CaseDocument doc = read_case_file(c.case_path);
  const ScenarioModel model = load_scenario(read_text_file(c.scenario_path));
  const ConditionalLaw law = law_for(c, model);

  ForecastDistribution result;
  if (!c.contingencies && c.observed_config < 0) {
    result = forecast_one(c, doc, 0, law, c.seed);
  } else {
    if (c.observed_config >= 0) check_configuration(doc, c.observed_config);
    if (!c.store_path.empty()) throw InvalidInput("--store serves a single configuration; drop --contingencies");
    const auto probs = doc.contingencies.probabilities();
    std::vector<ForecastDistribution> per(probs.size());
    for (int k = 0; k < static_cast<int>(probs.size()); ++k) {
      const bool needed = c.observed_config >= 0 ? k == c.observed_config : probs[k] > 0.0;
      if (needed) per[k] = forecast_one(c, doc, k, law, split_seed(c.seed, static_cast<std::uint64_t>(k)));
    }
    std::optional<int> observed;
    if (c.observed_config >= 0) observed = c.observed_config;
    result = mix_forecasts(per, probs, observed);
    result.seed = c.seed;
  }
  result.issue_time = c.time;
  result.horizon = c.horizon;
  outputs.add(c.out, save_forecast(result));
}

void cmd_simulate(const RunConfig& c, Outputs& outputs) {
  require_samples(c);
  const CaseDocument doc = read_case_file(c.case_path);
  const ScenarioModel model = load_scenario(read_text_file(c.scenario_path));
  const ConditionalLaw law = law_for(c, model);
  const int k = std::max(0, c.observed_config);
  const MppProblem p = program_at(doc, k, c.time + c.horizon);
  DcrgCache cache = make_dcrg_cache(p, k);
  DcrgOptions dopt;
  dopt.workers = c.workers;
  const SampleStream stream = dcrg_simulate(p, law, c.samples, c.seed, cache, dopt);
  outputs.add(c.out, save_dcrg_summary(cache, stream));
  if (!c.stream_out.empty()) outputs.add(c.stream_out, sample_stream_csv(stream));
  if (!c.marginals_out.empty()) outputs.add(c.marginals_out, marginals_csv(summarize_marginals(stream.lmp)));
}

void cmd_evaluate(const RunConfig& c, Outputs& outputs) {
  const CaseDocument doc = read_case_file(c.case_path);
  const ScenarioModel model = load_scenario(read_text_file(c.scenario_path));
  ExperimentOptions eo;
  eo.horizon = c.horizon;
  eo.replications = c.replications;
  eo.samples = c.samples;
  eo.seed = c.seed;
  eo.workers = c.workers;
  eo.last_issue = c.last_issue;
  eo.reliability_bins = c.bins;
  eo.contingencies = c.contingencies;
  const EvaluationReport report = run_trajectory_experiment(doc, model, eo);
  if (c.out.empty()) {
    outputs.add("", save_report(report));
    return;
  }
  const std::filesystem::path dir(c.out);
  outputs.add((dir / "report.json").string(), save_report(report));
  outputs.add((dir / "brier.csv").string(), brier_csv(report));
  outputs.add((dir / "reliability.csv").string(), reliability_csv(report.reliability));
}

void cmd_bench(const RunConfig& c, Outputs& outputs) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  require_samples(c);
  const CaseDocument doc = read_case_file(c.case_path);
  const ScenarioModel model = load_scenario(read_text_file(c.scenario_path));
  const ConditionalLaw law = law_for(c, model);
  const MppProblem p = program_at(doc, 0, c.time + c.horizon);
  const MatrixXd thetas = draw_parameters(law, c.samples, c.seed, p.box_lo, p.box_hi);

  auto t0 = clock::now();
  const SampleStream direct = direct_simulate(p, thetas, c.workers);
  const double t_mc = seconds(t0);

  DcrgCache cache = make_dcrg_cache(p);
  DcrgOptions dopt;
  dopt.workers = c.workers;
  t0 = clock::now();
  const SampleStream dcrg = dcrg_simulate(p, thetas, cache, dopt);
  const double t_dcrg = seconds(t0);

  bool identical = direct.size() == dcrg.size();
  for (long long i = 0; identical && i < direct.size(); ++i) {
    identical = direct.feasible[i] == dcrg.feasible[i];
    if (identical && direct.feasible[i]) identical = direct.lmp.row(i) == dcrg.lmp.row(i);
  }

  EnumerateOptions eo;
  eo.seed = c.seed;
  t0 = clock::now();
  const RegionStore store = enumerate_regions(p, eo);
  const double t_enum = seconds(t0);
  ForecastOptions fo;
  fo.samples = c.samples;
  fo.seed = c.seed;
  fo.workers = c.workers;
  t0 = clock::now();
  if (p.is_quadratic())
    forecast_lmp_density_quadratic(store, law, fo);
  else
    forecast_regions(store, law, fo);
  const double t_forecast = seconds(t0);

  nlohmann::ordered_json root;
  root["samples"] = c.samples;
  root["seed"] = c.seed;
  root["workers"] = c.workers;
  root["parameters"] = p.parameter_count();
  nlohmann::ordered_json mc, dc, ap;
  mc["opf_solves"] = direct.size();
  mc["seconds"] = t_mc;
  dc["opf_solves"] = cache.counters.opf_solves;
  dc["regions"] = cache.store.size();
  dc["cache_hits"] = cache.counters.cache_hits;
  dc["seconds"] = t_dcrg;
  dc["solve_ratio"] = static_cast<double>(cache.counters.opf_solves) / static_cast<double>(direct.size());
  dc["identical_to_direct"] = identical;
  ap["regions"] = store.size();
  ap["enumeration_opf_solves"] = store.stats.opf_solves;
  ap["enumeration_seconds"] = t_enum;
  ap["forecast_seconds"] = t_forecast;
  root["alg_mc"] = mc;
  root["alg_dcrg"] = dc;
  root["alg_p"] = ap;
  outputs.add(c.out, root.dump(2) + "\n");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Probabilistic locational marginal price forecasting", "lmpf"};
  app.require_subcommand(1);

  auto add_case = [&](CLI::App* s) { s->add_option("--case", c.case_path, "Case JSON")->required(); };
  auto add_out = [&](CLI::App* s, const char* what) { s->add_option("--out", c.out, what); };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", c.seed, "Root seed"); };
  auto add_workers = [&](CLI::App* s) {
    s->add_option("--workers", c.workers, "Worker threads (1 = deterministic sequential run)");
  };
  auto add_law = [&](CLI::App* s) {
    s->add_option("--scenario", c.scenario_path, "Scenario JSON")->required();
    s->add_option("--horizon", c.horizon, "Forecast horizon T in steps");
    s->add_option("--time", c.time, "Issue time t");
    s->add_option("--theta", c.theta, "Observed parameters at t (default: mean trajectory)")->delimiter(',');
    s->add_option("--samples", c.samples, "Sample count");
  };

  auto* solve = app.add_subcommand("solve-opf", "Solve one dispatch and report LMPs and congestion");
  add_case(solve);
  solve->add_option("--theta", c.theta, "Stochastic unit values (MW)")->required()->delimiter(',');
  solve->add_option("--time", c.time, "Time index for the constraint schedule");
  solve->add_option("--observed-config", c.observed_config, "Contingency configuration");
  add_out(solve, "Output JSON");

  auto* enumerate = app.add_subcommand("enumerate", "Enumerate critical regions into a store");
  add_case(enumerate);
  enumerate->add_option("--time", c.time, "Time index for the constraint schedule");
  enumerate->add_option("--observed-config", c.observed_config, "Contingency configuration");
  add_seed(enumerate);
  add_out(enumerate, "Output store JSON");

  auto* forecast = app.add_subcommand("forecast", "Forecast the LMP distribution at t+T");
  add_case(forecast);
  add_law(forecast);
  add_seed(forecast);
  add_workers(forecast);
  forecast->add_option("--mode", c.mode, "offline (region store) or dcrg");
  forecast->add_option("--store", c.store_path, "Precomputed region store for offline mode");
  forecast->add_flag("--contingencies", c.contingencies, "Mix over the case's contingency configurations");
  forecast->add_option("--observed-config", c.observed_config, "Known configuration at t+T");
  add_out(forecast, "Output forecast JSON");

  auto* simulate = app.add_subcommand("simulate-dcrg", "Price samples of theta_{t+T} with DCRG");
  add_case(simulate);
  add_law(simulate);
  add_seed(simulate);
  add_workers(simulate);
  simulate->add_option("--observed-config", c.observed_config, "Contingency configuration");
  simulate->add_option("--stream", c.stream_out, "Per-sample CSV");
  simulate->add_option("--marginals", c.marginals_out, "Per-bus marginal histogram CSV");
  add_out(simulate, "Output summary JSON");

  auto* evaluate = app.add_subcommand("evaluate", "Replicated trajectory experiment with Brier scores");
  add_case(evaluate);
  evaluate->add_option("--scenario", c.scenario_path, "Scenario JSON")->required();
  evaluate->add_option("--horizon", c.horizon, "Forecast horizon T in steps");
  evaluate->add_option("--samples", c.samples, "Importance samples per region and forecast");
  evaluate->add_option("--replications", c.replications, "Simulated trajectories");
  evaluate->add_option("--last-issue", c.last_issue, "Last issue time (default: end of the trajectory)");
  evaluate->add_option("--bins", c.bins, "Reliability bins");
  evaluate->add_flag("--contingencies", c.contingencies, "Draw outages and forecast with the mixture");
  add_seed(evaluate);
  add_workers(evaluate);
  add_out(evaluate, "Output directory (report.json, brier.csv, reliability.csv)");

  auto* bench = app.add_subcommand("bench", "Compare per-sample solving, DCRG and region-store forecasting");
  add_case(bench);
  add_law(bench);
  add_seed(bench);
  add_workers(bench);
  add_out(bench, "Output JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  if (evaluate->parsed()) c.samples = evaluate->count("--samples") ? c.samples : 2048;

  Outputs outputs(out);
  try {
    if (solve->parsed()) cmd_solve(c, outputs);
    if (enumerate->parsed()) cmd_enumerate(c, outputs);
    if (forecast->parsed()) cmd_forecast(c, outputs);
    if (simulate->parsed()) cmd_simulate(c, outputs);
    if (evaluate->parsed()) cmd_evaluate(c, outputs);
    if (bench->parsed()) cmd_bench(c, outputs);
    outputs.commit();
  } catch (const std::exception& e) {
    err << "lmpf: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace lmpf
