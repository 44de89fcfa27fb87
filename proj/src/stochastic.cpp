#include "lmpf/stochastic.hpp"

#include <cmath>

#include <json.hpp>

#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

GaussianSampler::GaussianSampler(const MatrixXd& covariance) {
  const int d = static_cast<int>(covariance.rows());
  if (covariance.cols() != d) throw InvalidInput("covariance must be square");
  const MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<MatrixXd> llt(sym);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    factor_ = llt.matrixL();
    const double scale = std::max(1e-300, sym.diagonal().cwiseAbs().maxCoeff());
    for (int i = 0; i < d && ok; ++i)
      if (factor_(i, i) <= 1e-7 * std::sqrt(scale)) ok = false;
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    const VectorXd lam = es.eigenvalues();
    if (d > 0 && lam.minCoeff() < -1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff()))
      throw InvalidInput("covariance is not positive semidefinite");
    factor_ = es.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    singular_ = true;
  }
}

VectorXd GaussianSampler::draw(Rng& rng) const {
  VectorXd z(factor_.cols());
  for (int j = 0; j < z.size(); ++j) z(j) = rng.gaussian();
  return factor_ * z;
}

void validate(const ScenarioModel& m) {
  const int d = m.dimension();
  if (d < 1 || m.sigma.cols() != d) throw InvalidInput("scenario: sigma must be a square matrix of size >= 1");
  if (m.mean_trajectory.empty()) throw InvalidInput("scenario: mean trajectory is empty");
  for (const auto& v : m.mean_trajectory) {
    if (v.size() != d) throw InvalidInput("scenario: mean trajectory dimension does not match sigma");
    if (!v.allFinite()) throw InvalidInput("scenario: mean trajectory has non-finite entries");
  }
  if (!m.sigma.allFinite()) throw InvalidInput("scenario: sigma has non-finite entries");
  if ((m.sigma - m.sigma.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * std::max(1.0, m.sigma.lpNorm<Eigen::Infinity>()))
    throw InvalidInput("scenario: sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.sigma);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw InvalidInput("scenario: sigma is not positive semidefinite");
  if (m.kind == ScenarioKind::AR1) {
    if (m.phi.size() != d) throw InvalidInput("scenario: phi must have one entry per dimension");
    for (int i = 0; i < d; ++i)
      if (!(std::abs(m.phi(i)) < 1.0)) throw InvalidInput("scenario: AR(1) coefficients must satisfy |phi| < 1");
    if (m.covariance_form == CovarianceForm::Literal && (m.phi.array() != m.phi(0)).any())
      throw InvalidInput("scenario: the literal covariance form needs a scalar phi");
  }
}

namespace {

VectorXd json_vector(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string("scenario: ") + what + " must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput(std::string("scenario: ") + what + " must hold numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

}  // namespace

ScenarioModel load_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InvalidInput("scenario must be a JSON object");
  for (auto it = root.begin(); it != root.end(); ++it) {
    static const char* known[] = {"model", "mean_trajectory", "sigma", "phi", "seed", "covariance_form", "name"};
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw InvalidInput("scenario: unknown key '" + it.key() + "'");
  }
  ScenarioModel m;
  const std::string kind = root.value("model", std::string{});
  if (kind == "rw")
    m.kind = ScenarioKind::RandomWalk;
  else if (kind == "ar1")
    m.kind = ScenarioKind::AR1;
  else
    throw InvalidInput("scenario: model must be 'rw' or 'ar1'");

  if (!root.contains("mean_trajectory") || !root["mean_trajectory"].is_array() || root["mean_trajectory"].empty())
    throw InvalidInput("scenario: mean_trajectory must be a non-empty array");
  for (const auto& step : root["mean_trajectory"]) {
    if (step.is_number()) {
      m.mean_trajectory.push_back(VectorXd::Constant(1, step.get<double>()));
    } else {
      m.mean_trajectory.push_back(json_vector(step, "mean_trajectory entries"));
    }
  }
  const int d = static_cast<int>(m.mean_trajectory.front().size());

  if (!root.contains("sigma")) throw InvalidInput("scenario: missing 'sigma'");
  const json& s = root["sigma"];
  if (s.is_number()) {
    m.sigma = s.get<double>() * MatrixXd::Identity(d, d);
  } else if (s.is_array() && !s.empty() && s[0].is_array()) {
    m.sigma.resize(s.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      VectorXd row = json_vector(s[i], "sigma rows");
      if (row.size() != static_cast<int>(s.size())) throw InvalidInput("scenario: sigma must be square");
      m.sigma.row(i) = row.transpose();
    }
  } else {
    m.sigma = json_vector(s, "sigma").asDiagonal();
  }

  if (root.contains("phi")) {
    const json& p = root["phi"];
    m.phi = p.is_number() ? VectorXd::Constant(d, p.get<double>()) : json_vector(p, "phi");
  } else if (m.kind == ScenarioKind::AR1) {
    throw InvalidInput("scenario: AR(1) model needs 'phi'");
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw InvalidInput("scenario: seed must be a non-negative integer");
    m.seed = root["seed"].get<std::uint64_t>();
  }
  const std::string form = root.value("covariance_form", std::string("corrected"));
  if (form == "corrected")
    m.covariance_form = CovarianceForm::Corrected;
  else if (form == "literal")
    m.covariance_form = CovarianceForm::Literal;
  else
    throw InvalidInput("scenario: covariance_form must be 'corrected' or 'literal'");
  validate(m);
  return m;
}

std::string save_scenario(const ScenarioModel& m) {
  json root;
  root["model"] = m.kind == ScenarioKind::RandomWalk ? "rw" : "ar1";
  json traj = json::array();
  for (const auto& v : m.mean_trajectory) traj.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  root["mean_trajectory"] = traj;
  json sig = json::array();
  for (int i = 0; i < m.sigma.rows(); ++i) {
    Eigen::RowVectorXd r = m.sigma.row(i);
    sig.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  root["sigma"] = sig;
  if (m.phi.size() > 0) root["phi"] = std::vector<double>(m.phi.data(), m.phi.data() + m.phi.size());
  root["seed"] = m.seed;
  root["covariance_form"] = m.covariance_form == CovarianceForm::Corrected ? "corrected" : "literal";
  return root.dump(2) + "\n";
}

ConditionalLaw conditional_law(const ScenarioModel& m, const VectorXd& theta_t, int t, int horizon) {
  const int d = m.dimension();
  if (theta_t.size() != d) throw InvalidInput("observed parameter has the wrong dimension");
  if (t < 0 || horizon < 0) throw InvalidInput("time and horizon must be non-negative");
  if (t + horizon >= m.length())
    throw InvalidInput("horizon reaches past the mean trajectory (t + T = " + std::to_string(t + horizon) +
                       ", trajectory length " + std::to_string(m.length()) + ")");
  ConditionalLaw law;
  law.horizon = horizon;
  const VectorXd& mt = m.mean_trajectory[t];
  const VectorXd& mtt = m.mean_trajectory[t + horizon];
  if (m.kind == ScenarioKind::RandomWalk) {
    law.mean = theta_t + mtt - mt;
    law.covariance = static_cast<double>(horizon) * m.sigma;
    return law;
  }
  const VectorXd phi_t = m.phi.array().pow(static_cast<double>(horizon)).matrix();
  law.mean = mtt + phi_t.cwiseProduct(theta_t - mt);
  law.covariance = MatrixXd::Zero(d, d);
  VectorXd phi_i = VectorXd::Ones(d);
  for (int i = 0; i < horizon; ++i) {
    if (m.covariance_form == CovarianceForm::Corrected)
      law.covariance += phi_i.asDiagonal() * m.sigma * phi_i.asDiagonal();
    else
      law.covariance += phi_i(0) * m.sigma;
    phi_i = phi_i.cwiseProduct(m.phi);
  }
  law.covariance = 0.5 * (law.covariance + law.covariance.transpose());
  return law;
}

std::vector<VectorXd> sample_path(const ScenarioModel& m, Rng& rng, int steps) {
  if (steps < 0 || steps >= m.length()) throw InvalidInput("path length exceeds the mean trajectory");
  GaussianSampler noise(m.sigma);
  std::vector<VectorXd> path;
  path.reserve(steps + 1);
  path.push_back(m.mean_trajectory[0]);
  for (int t = 0; t < steps; ++t) {
    const VectorXd eps = noise.draw(rng);
    const VectorXd& prev = path.back();
    if (m.kind == ScenarioKind::RandomWalk)
      path.push_back(prev + (m.mean_trajectory[t + 1] - m.mean_trajectory[t]) + eps);
    else
      path.push_back(m.mean_trajectory[t + 1] + m.phi.cwiseProduct(prev - m.mean_trajectory[t]) + eps);
  }
  return path;
}

std::vector<VectorXd> sample_path(const ScenarioModel& m, std::uint64_t seed, int steps) {
  Rng rng(seed);
  return sample_path(m, rng, steps);
}

MatrixXd draw_parameters(const ConditionalLaw& law, long long count, std::uint64_t seed, const VectorXd& lo,
                         const VectorXd& hi) {
  GaussianSampler sampler(law.covariance);
  Rng rng(seed);
  MatrixXd out(count, law.dimension());
  for (long long j = 0; j < count; ++j) {
    VectorXd s = law.mean + sampler.draw(rng);
    out.row(j) = s.cwiseMax(lo).cwiseMin(hi).transpose();
  }
  return out;
}

int sample_category(const std::vector<double>& p, Rng& rng) {
  if (p.empty()) throw InvalidInput("no categories to sample from");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidInput("probabilities must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("probabilities must sum to one");
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return static_cast<int>(k);
  }
  for (std::size_t k = p.size(); k-- > 0;)
    if (p[k] > 0.0) return static_cast<int>(k);
  return 0;
}

int sample_contingency(const ContingencyModel& model, Rng& rng) {
  validate(model);
  return sample_category(model.probabilities(), rng);
}

int sample_contingency(const ContingencyModel& model, std::uint64_t seed) {
  Rng rng(seed);
  return sample_contingency(model, rng);
}

}  // namespace lmpf
