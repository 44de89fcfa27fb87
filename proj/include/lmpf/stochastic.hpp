#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmpf/network.hpp"

namespace lmpf {

/// Random stream used everywhere in the library: a 64-bit Mersenne Twister
/// with the standard library's normal and uniform distributions. Gaussian
/// vectors are filled in index order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Independent child seed for stream `index` (SplitMix64 finalizer).
std::uint64_t split_seed(std::uint64_t root, std::uint64_t index);

/// Draws from N(0, cov). Uses a Cholesky factor, falling back to a symmetric
/// eigendecomposition for singular covariances.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  explicit GaussianSampler(const Eigen::MatrixXd& covariance);
  int dimension() const { return static_cast<int>(factor_.rows()); }
  bool singular() const { return singular_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  Eigen::VectorXd draw(Rng& rng) const;

 private:
  Eigen::MatrixXd factor_;
  bool singular_ = false;
};

enum class ScenarioKind { RandomWalk, AR1 };

/// How the AR(1) cumulative covariance is formed: sum_i Phi^i Sigma Phi^i
/// (variance of a sum of independent terms) or sum_i phi^i Sigma (kept only
/// for comparison, scalar phi).
enum class CovarianceForm { Corrected, Literal };

struct ScenarioModel {
  ScenarioKind kind = ScenarioKind::RandomWalk;
  std::vector<Eigen::VectorXd> mean_trajectory;  // index = time
  Eigen::MatrixXd sigma;                         // innovation covariance
  Eigen::VectorXd phi;                           // AR(1) coefficient per dimension
  CovarianceForm covariance_form = CovarianceForm::Corrected;
  std::uint64_t seed = 0;

  int dimension() const { return static_cast<int>(sigma.rows()); }
  int length() const { return static_cast<int>(mean_trajectory.size()); }
};

/// Throws InvalidInput on a broken model (non-PSD sigma, |phi| >= 1, ...).
void validate(const ScenarioModel& model);

ScenarioModel load_scenario(const std::string& text);
std::string save_scenario(const ScenarioModel& model);

/// Law of theta_{t+T} given theta_t.
struct ConditionalLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  int horizon = 0;
  int dimension() const { return static_cast<int>(mean.size()); }
};

/// Random walk: mean theta_t + mbar_{t+T} - mbar_t, covariance T Sigma.
/// AR(1): mean mbar_{t+T} + Phi^T (theta_t - mbar_t), covariance
/// sum_{i<T} Phi^i Sigma Phi^i. T = 0 gives a point mass at theta_t.
ConditionalLaw conditional_law(const ScenarioModel& model, const Eigen::VectorXd& theta_t, int t, int horizon);

/// Simulates theta_0 .. theta_steps by the model recursion, starting on the
/// mean trajectory.
std::vector<Eigen::VectorXd> sample_path(const ScenarioModel& model, std::uint64_t seed, int steps);
std::vector<Eigen::VectorXd> sample_path(const ScenarioModel& model, Rng& rng, int steps);

/// Draws `count` parameter vectors from the law, clamped to [lo, hi], in a
/// fixed order from one seeded stream. Rows are samples.
Eigen::MatrixXd draw_parameters(const ConditionalLaw& law, long long count, std::uint64_t seed,
                                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Index k with probability p[k]; p must sum to one within 1e-12.
int sample_category(const std::vector<double>& p, Rng& rng);
int sample_contingency(const ContingencyModel& model, Rng& rng);
int sample_contingency(const ContingencyModel& model, std::uint64_t seed);

}  // namespace lmpf
