#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmpf/case_io.hpp"
#include "lmpf/forecast.hpp"
#include "lmpf/regions.hpp"
#include "lmpf/stochastic.hpp"

namespace lmpf {

/// Squared 2-norm distance between a forecast and the unit vector of the
/// realized outcome. Lies in [0, 2].
double brier_term(const Eigen::VectorXd& forecast, int realized);
/// Mean of brier_term over events. Forecasts must sum to one within 1e-6.
double brier_score(const std::vector<Eigen::VectorXd>& forecasts, const std::vector<int>& realized);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;
  long long count = 0;
  long long occurred = 0;
  double mean_forecast = 0.0;  // NaN when empty
  double observed = 0.0;       // observed frequency, NaN when empty
  bool defined() const { return count > 0; }
};

/// Equal-width bins on the forecast probability; the last bin is closed.
std::vector<ReliabilityBin> reliability_diagram(const std::vector<double>& probabilities,
                                                const std::vector<char>& outcomes, int bins = 10);

enum class BaselineKind { Deterministic, CertaintyEquivalent };

struct PointForecast {
  Eigen::VectorXd theta;
  int region = -1;
  Eigen::VectorXd lmp;
};

/// Deterministic: the unconditional mean trajectory at t+T. Certainty
/// equivalent: the conditional mean given theta_t. Throws EmptyRegion when the
/// point lies outside every region of the store.
PointForecast baseline_point_forecast(BaselineKind kind, const RegionStore& store, const ScenarioModel& model,
                                      const Eigen::VectorXd& theta_t, int t, int horizon);

struct MarginalSummary {
  int bus = 0;
  long long samples = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double mean_standard_error = 0.0;
  std::vector<double> edges;  // bins + 1 edges; one bin when the samples are constant
  std::vector<long long> counts;
  double fit_mean = 0.0;  // Gaussian overlay parameters
  double fit_sd = 0.0;
};

/// Per-bus summary of price samples (rows = samples). Rows with NaN are skipped.
std::vector<MarginalSummary> summarize_marginals(const Eigen::MatrixXd& lmp_samples, int bins = 20);

/// Outcome categories keyed by LMP label: regions with the same price vector
/// (to 1e-6) share a category, and a final category collects infeasible
/// outcomes and unexplored probability mass.
class PriceCategories {
 public:
  void add(const Eigen::VectorXd& lmp);
  int size() const { return static_cast<int>(labels_.size()) + 1; }
  int outside() const { return static_cast<int>(labels_.size()); }
  /// Category of a price vector; outside() when it matches no label.
  int of(const Eigen::VectorXd& lmp) const;
  const std::vector<Eigen::VectorXd>& labels() const { return labels_; }
  std::string name(int category) const;

  /// Probability vector of a forecast over these categories.
  Eigen::VectorXd distribution(const ForecastDistribution& dist) const;
  Eigen::VectorXd unit(int category) const;

 private:
  std::vector<Eigen::VectorXd> labels_;
};

struct ExperimentOptions {
  int horizon = 4;
  int replications = 200;
  long long samples = 2048;  // per region and forecast
  std::uint64_t seed = 1;
  int workers = 1;
  int first_issue = 0;
  int last_issue = -1;  // -1: as late as the mean trajectory allows
  int reliability_bins = 10;
  /// Draw the realized configuration at each target time and forecast with
  /// the contingency mixture.
  bool contingencies = false;
};

struct EvaluationReport {
  std::vector<int> target_times;
  std::vector<double> brier_forecast;       // probabilistic forecast (Alg-P)
  std::vector<double> brier_deterministic;  // Alg-D
  std::vector<double> brier_certainty;      // Alg-C
  double mean_forecast = 0.0;
  double mean_deterministic = 0.0;
  double mean_certainty = 0.0;
  std::vector<ReliabilityBin> reliability;  // pooled per-category events of Alg-P
  std::vector<std::string> categories;
  int horizon = 0;
  int replications = 0;
  long long samples = 0;
  std::uint64_t seed = 0;
  long long opf_solves = 0;
};

/// Replicated trajectory experiment: for every replication a path is drawn
/// from the model; at every issue time t the three algorithms forecast the
/// price category at t+T, which is then scored against the realized price.
/// Time-varying limits follow the case's constraint schedule.
EvaluationReport run_trajectory_experiment(const CaseDocument& doc, const ScenarioModel& model,
                                           const ExperimentOptions& options);

std::string brier_csv(const EvaluationReport& report);
std::string reliability_csv(const std::vector<ReliabilityBin>& bins);
std::string marginals_csv(const std::vector<MarginalSummary>& marginals);

}  // namespace lmpf
