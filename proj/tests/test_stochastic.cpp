#include <doctest.h>

#include <cmath>

#include "lmpf/errors.hpp"
#include "lmpf/stochastic.hpp"
#include "test_support.hpp"

using namespace lmpf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ScenarioModel scalar_model(ScenarioKind kind, double phi, double sigma2, int length) {
  ScenarioModel m;
  m.kind = kind;
  for (int t = 0; t < length; ++t) m.mean_trajectory.push_back(vec1(100.0 + 2.0 * t));
  m.sigma = MatrixXd::Constant(1, 1, sigma2);
  m.phi = VectorXd::Constant(1, phi);
  return m;
}

ScenarioModel two_dim_ar1() {
  ScenarioModel m;
  m.kind = ScenarioKind::AR1;
  for (int t = 0; t < 12; ++t) {
    VectorXd v(2);
    v << 50.0 + t, 80.0 - 0.5 * t;
    m.mean_trajectory.push_back(v);
  }
  m.sigma.resize(2, 2);
  m.sigma << 2.0, 0.6, 0.6, 1.0;
  m.phi.resize(2);
  m.phi << 0.9, 0.5;
  return m;
}

}  // namespace

TEST_CASE("AR(1) covariance sums squared coefficients") {
  const ScenarioModel m = scalar_model(ScenarioKind::AR1, 0.9, 1.0, 10);
  const ConditionalLaw law = conditional_law(m, vec1(104.0), 2, 2);
  CHECK(law.covariance(0, 0) == doctest::Approx(1.81).epsilon(1e-14));
  // mean: mbar_4 + 0.81 (theta_2 - mbar_2)
  CHECK(law.mean(0) == doctest::Approx(108.0).epsilon(1e-14));

  ScenarioModel lit = m;
  lit.covariance_form = CovarianceForm::Literal;
  CHECK(conditional_law(lit, vec1(104.0), 2, 2).covariance(0, 0) == doctest::Approx(1.9).epsilon(1e-14));
}

TEST_CASE("random walk law") {
  ScenarioModel m = scalar_model(ScenarioKind::RandomWalk, 0.0, 1.5, 10);
  const ConditionalLaw law = conditional_law(m, vec1(97.0), 1, 4);
  CHECK(law.mean(0) == doctest::Approx(97.0 + 8.0));
  CHECK(law.covariance(0, 0) == doctest::Approx(6.0));
  CHECK(law.horizon == 4);
}

TEST_CASE("zero horizon is a point mass at the observation") {
  for (auto kind : {ScenarioKind::RandomWalk, ScenarioKind::AR1}) {
    const ScenarioModel m = scalar_model(kind, 0.7, 1.0, 5);
    const ConditionalLaw law = conditional_law(m, vec1(91.5), 3, 0);
    CHECK(law.mean(0) == 91.5);
    CHECK(law.covariance(0, 0) == 0.0);
  }
}

TEST_CASE("law rejects horizons past the trajectory and bad observations") {
  const ScenarioModel m = scalar_model(ScenarioKind::RandomWalk, 0.0, 1.0, 5);
  CHECK_THROWS_AS(conditional_law(m, vec1(1.0), 2, 3), InvalidInput);
  CHECK_THROWS_AS(conditional_law(m, VectorXd::Zero(2), 0, 1), InvalidInput);
  CHECK_NOTHROW(conditional_law(m, vec1(1.0), 2, 2));
}

TEST_CASE("AR(1) laws compose over consecutive horizons") {
  const ScenarioModel m = two_dim_ar1();
  VectorXd theta(2);
  theta << 53.0, 77.0;
  const ConditionalLaw a = conditional_law(m, theta, 1, 3);
  const ConditionalLaw b_unit = conditional_law(m, m.mean_trajectory[4], 4, 2);
  const ConditionalLaw direct = conditional_law(m, theta, 1, 5);
  const VectorXd phi2 = m.phi.array().square().matrix();
  const VectorXd mean = m.mean_trajectory[6] + phi2.cwiseProduct(a.mean - m.mean_trajectory[4]);
  const MatrixXd cov = phi2.asDiagonal() * a.covariance * phi2.asDiagonal() + b_unit.covariance;
  CHECK((mean - direct.mean).norm() < 1e-12);
  CHECK((cov - direct.covariance).norm() < 1e-12);
}

TEST_CASE("simulated path moments match the conditional laws") {
  const int n = 20000;
  SUBCASE("random walk") {
    ScenarioModel m = scalar_model(ScenarioKind::RandomWalk, 0.0, 2.0, 8);
    const ConditionalLaw law = conditional_law(m, m.mean_trajectory[0], 0, 5);
    Rng rng(7);
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sample_path(m, rng, 5)[5](0);
      s += x;
      ss += x * x;
    }
    const double mean = s / n, var = ss / n - mean * mean;
    const double sd = std::sqrt(law.covariance(0, 0));
    CHECK(std::abs(mean - law.mean(0)) < 3.0 * sd / std::sqrt(n));
    CHECK(std::abs(var - law.covariance(0, 0)) < 3.0 * law.covariance(0, 0) * std::sqrt(2.0 / n));
  }
  SUBCASE("two-dimensional AR(1)") {
    const ScenarioModel m = two_dim_ar1();
    const ConditionalLaw law = conditional_law(m, m.mean_trajectory[0], 0, 6);
    Rng rng(11);
    VectorXd s = VectorXd::Zero(2);
    MatrixXd ss = MatrixXd::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
      const VectorXd x = sample_path(m, rng, 6)[6];
      s += x;
      ss += x * x.transpose();
    }
    const VectorXd mean = s / n;
    const MatrixXd cov = ss / n - mean * mean.transpose();
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(mean(i) - law.mean(i)) < 3.0 * std::sqrt(law.covariance(i, i) / n));
      for (int j = 0; j < 2; ++j) {
        const double se = std::sqrt((law.covariance(i, i) * law.covariance(j, j) +
                                     law.covariance(i, j) * law.covariance(i, j)) / n);
        CHECK(std::abs(cov(i, j) - law.covariance(i, j)) < 3.0 * se);
      }
    }
  }
}

TEST_CASE("paths are reproducible from the seed") {
  const ScenarioModel m = two_dim_ar1();
  const auto a = sample_path(m, 42, 10);
  const auto b = sample_path(m, 42, 10);
  const auto c = sample_path(m, 43, 10);
  REQUIRE(a.size() == 11);
  CHECK(a[0] == m.mean_trajectory[0]);
  for (int t = 0; t <= 10; ++t) CHECK(a[t] == b[t]);
  CHECK(a[5] != c[5]);
  CHECK(split_seed(5, 0) != split_seed(5, 1));
  CHECK(split_seed(5, 0) == split_seed(5, 0));
}

TEST_CASE("singular covariance sampling stays in the support") {
  MatrixXd cov(2, 2);
  cov << 1.0, 1.0, 1.0, 1.0;
  GaussianSampler g(cov);
  CHECK(g.singular());
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const VectorXd x = g.draw(rng);
    CHECK(std::abs(x(0) - x(1)) < 1e-9);
  }
  MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianSampler{bad}, InvalidInput);
}

TEST_CASE("category and contingency sampling") {
  Rng rng(19);
  const std::vector<double> p{0.2, 0.5, 0.3};
  std::vector<int> count(3, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++count[sample_category(p, rng)];
  for (int k = 0; k < 3; ++k) CHECK(std::abs(count[k] / double(n) - p[k]) < 4.0 * std::sqrt(p[k] * (1 - p[k]) / n));
  CHECK_THROWS_AS(sample_category({0.5, 0.6}, rng), InvalidInput);
  CHECK_THROWS_AS(sample_category({}, rng), InvalidInput);
  CHECK(sample_category({0.0, 1.0}, rng) == 1);

  const ContingencyModel model = three_bus_document().contingencies;
  int outages = 0;
  for (int i = 0; i < 20000; ++i) outages += sample_contingency(model, rng) == 1;
  CHECK(outages > 100);
  CHECK(outages < 300);
  CHECK(sample_contingency(model, 5) == sample_contingency(model, 5));
}

TEST_CASE("scenario documents round-trip and reject bad input") {
  const std::string text = R"({"model": "ar1", "mean_trajectory": [[1, 2], [3, 4], [5, 6]],
    "sigma": [1, 2], "phi": 0.5, "seed": 9})";
  const ScenarioModel m = load_scenario(text);
  CHECK(m.kind == ScenarioKind::AR1);
  CHECK(m.dimension() == 2);
  CHECK(m.sigma(1, 1) == 2.0);
  CHECK(m.sigma(0, 1) == 0.0);
  CHECK(m.seed == 9);
  const std::string saved = save_scenario(m);
  CHECK(save_scenario(load_scenario(saved)) == saved);

  CHECK_THROWS_AS(load_scenario(R"({"model": "ar1", "mean_trajectory": [1, 2], "sigma": 1, "phi": 1.0})"),
                  InvalidInput);
  CHECK_THROWS_AS(load_scenario(R"({"model": "rw", "mean_trajectory": [1, 2], "sigma": -1})"), InvalidInput);
  CHECK_THROWS_AS(load_scenario(R"({"model": "rw", "mean_trajectory": [], "sigma": 1})"), InvalidInput);
  CHECK_THROWS_AS(load_scenario(R"({"model": "rw", "mean_trajectory": [1], "sigma": 1, "extra": 0})"),
                  InvalidInput);
  CHECK_THROWS_AS(load_scenario("{not json"), InvalidInput);
}
