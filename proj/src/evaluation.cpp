#include "lmpf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "lmpf/errors.hpp"
#include "lmpf/opf.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double brier_term(const VectorXd& forecast, int realized) {
  if (realized < 0 || realized >= forecast.size())
    throw InvalidInput("realized outcome " + std::to_string(realized) + " is not a valid category");
  VectorXd d = forecast;
  d(realized) -= 1.0;
  return d.squaredNorm();
}

double brier_score(const std::vector<VectorXd>& forecasts, const std::vector<int>& realized) {
  if (forecasts.size() != realized.size())
    throw InvalidInput("brier score: " + std::to_string(forecasts.size()) + " forecasts but " +
                       std::to_string(realized.size()) + " outcomes");
  if (forecasts.empty()) throw InvalidInput("brier score needs at least one event");
  double total = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    if (std::abs(forecasts[i].sum() - 1.0) > 1e-6) throw InvalidInput("forecast probabilities must sum to one");
    if ((forecasts[i].array() < -1e-12).any()) throw InvalidInput("forecast probabilities must be non-negative");
    total += brier_term(forecasts[i], realized[i]);
  }
  return total / static_cast<double>(forecasts.size());
}

std::vector<ReliabilityBin> reliability_diagram(const std::vector<double>& probabilities,
                                                const std::vector<char>& outcomes, int bins) {
  if (bins < 2) throw InvalidInput("reliability diagram needs at least two bins");
  if (probabilities.size() != outcomes.size()) throw InvalidInput("reliability diagram: length mismatch");
  std::vector<ReliabilityBin> out(bins);
  std::vector<double> psum(bins, 0.0);
  for (int b = 0; b < bins; ++b) {
    out[b].lo = static_cast<double>(b) / bins;
    out[b].hi = static_cast<double>(b + 1) / bins;
    out[b].center = 0.5 * (out[b].lo + out[b].hi);
  }
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("forecast probability outside [0, 1]");
    const int b = std::min(bins - 1, static_cast<int>(std::floor(p * bins)));
    ++out[b].count;
    out[b].occurred += outcomes[i] ? 1 : 0;
    psum[b] += p;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int b = 0; b < bins; ++b) {
    if (out[b].count == 0) {
      out[b].mean_forecast = nan;
      out[b].observed = nan;
    } else {
      out[b].mean_forecast = psum[b] / static_cast<double>(out[b].count);
      out[b].observed = static_cast<double>(out[b].occurred) / static_cast<double>(out[b].count);
    }
  }
  return out;
}

PointForecast baseline_point_forecast(BaselineKind kind, const RegionStore& store, const ScenarioModel& model,
                                      const VectorXd& theta_t, int t, int horizon) {
  PointForecast f;
  if (kind == BaselineKind::Deterministic) {
    if (t < 0 || horizon < 0 || t + horizon >= model.length())
      throw InvalidInput("horizon reaches past the mean trajectory");
    f.theta = model.mean_trajectory[t + horizon];
  } else {
    f.theta = conditional_law(model, theta_t, t, horizon).mean;
  }
  if (f.theta.size() != store.parameter_count()) throw InvalidInput("model and store dimensions differ");
  const auto id = store.locate(f.theta);
  if (!id) throw EmptyRegion("point forecast lies outside every region");
  f.region = *id;
  f.lmp = store.region(*id).lmp_at(f.theta);
  return f;
}

std::vector<MarginalSummary> summarize_marginals(const MatrixXd& lmp_samples, int bins) {
  if (bins < 1) throw InvalidInput("histogram needs at least one bin");
  std::vector<MarginalSummary> out;
  for (int b = 0; b < lmp_samples.cols(); ++b) {
    std::vector<double> v;
    for (int i = 0; i < lmp_samples.rows(); ++i)
      if (std::isfinite(lmp_samples(i, b))) v.push_back(lmp_samples(i, b));
    if (v.size() < 2) throw InvalidInput("marginal summary needs at least two finite samples");
    MarginalSummary s;
    s.bus = b;
    s.samples = static_cast<long long>(v.size());
    const double n = static_cast<double>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= n;
    for (double x : v) s.variance += (x - s.mean) * (x - s.mean);
    s.variance /= n - 1.0;
    s.mean_standard_error = std::sqrt(s.variance / n);
    s.fit_mean = s.mean;
    s.fit_sd = std::sqrt(s.variance);
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
      s.edges = {lo, hi};
      s.counts = {s.samples};
    } else {
      s.edges.resize(bins + 1);
      for (int k = 0; k <= bins; ++k) s.edges[k] = lo + (hi - lo) * k / bins;
      s.counts.assign(bins, 0);
      for (double x : v) ++s.counts[std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins))];
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

bool same_label(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() && (a - b).lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, a.lpNorm<Eigen::Infinity>());
}

}  // namespace

void PriceCategories::add(const VectorXd& lmp) {
  for (const auto& l : labels_)
    if (same_label(l, lmp)) return;
  labels_.push_back(lmp);
}

int PriceCategories::of(const VectorXd& lmp) const {
  for (std::size_t k = 0; k < labels_.size(); ++k)
    if (same_label(labels_[k], lmp)) return static_cast<int>(k);
  return outside();
}

std::string PriceCategories::name(int category) const {
  if (category == outside()) return "outside";
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < labels_[category].size(); ++i) os << (i ? "," : "") << labels_[category](i);
  os << ")";
  return os.str();
}

VectorXd PriceCategories::distribution(const ForecastDistribution& dist) const {
  VectorXd v = VectorXd::Zero(size());
  for (const auto& e : dist.entries) v(of(e.lmp)) += e.probability;
  v(outside()) += dist.unexplored_mass;
  return v;
}

VectorXd PriceCategories::unit(int category) const {
  VectorXd v = VectorXd::Zero(size());
  v(category) = 1.0;
  return v;
}

namespace {

struct Stage {
  MppProblem program;
  RegionStore store;
  std::vector<Anchor> anchors;
};

struct ReplicationResult {
  std::vector<double> bs_p, bs_d, bs_c;
  std::vector<double> event_prob;
  std::vector<char> event_outcome;
  long long solves = 0;
};

int schedule_stage(const ConstraintSchedule& schedule, int t) {
  int s = 0;
  for (const auto& e : schedule.entries)
    if (e.time <= t) ++s;
  return s;
}

}  // namespace

EvaluationReport run_trajectory_experiment(const CaseDocument& doc, const ScenarioModel& model,
                                           const ExperimentOptions& options) {
  validate(model);
  if (doc.grid.cost_kind != CostKind::Linear)
    throw InvalidInput("the trajectory experiment scores LMP labels and needs a linear-cost case");
  if (model.dimension() != static_cast<int>(doc.grid.stochastic_units.size()))
    throw InvalidInput("scenario dimension does not match the case's stochastic units");
  const int horizon = options.horizon;
  if (horizon < 1) throw InvalidInput("horizon must be at least 1");
  if (options.replications < 1) throw InvalidInput("need at least one replication");
  const int last = options.last_issue < 0 ? model.length() - 1 - horizon : options.last_issue;
  if (options.first_issue < 0 || last < options.first_issue || last + horizon >= model.length())
    throw InvalidInput("issue times do not fit the mean trajectory");

  const int configs = options.contingencies ? doc.contingencies.configuration_count() : 1;
  const std::vector<double> config_prob =
      options.contingencies ? doc.contingencies.probabilities() : std::vector<double>{1.0};

  // One program and region store per (configuration, schedule stage).
  std::map<std::pair<int, int>, Stage> stages;
  long long enumeration_solves = 0;
  for (int t = options.first_issue; t <= last; ++t) {
    const int stage = schedule_stage(doc.schedule, t + horizon);
    for (int k = 0; k < configs; ++k) {
      if (stages.count({k, stage})) continue;
      const GridCase g = apply_contingency(doc.grid, doc.contingencies, k);
      Stage s;
      s.program = build_mpp(snapshot_at(g, doc.schedule, t + horizon));
      EnumerateOptions eo;
      eo.seed = options.seed;
      eo.configuration = k;
      s.store = enumerate_regions(s.program, eo);
      enumeration_solves += s.store.stats.opf_solves;
      s.anchors = region_anchors(s.store);
      stages.emplace(std::make_pair(k, stage), std::move(s));
    }
  }
  PriceCategories cats;
  for (const auto& [key, s] : stages)
    for (const auto* r : s.store.all()) cats.add(r->price);

  const int times = last - options.first_issue + 1;
  std::vector<ReplicationResult> results(options.replications);

  auto run_replication = [&](int r) {
    ReplicationResult& res = results[r];
    const std::uint64_t rep_seed = split_seed(options.seed, static_cast<std::uint64_t>(r));
    const auto path = sample_path(model, rep_seed, last + horizon);
    Rng outage_rng(split_seed(rep_seed, 0x6f757461ULL));
    for (int t = options.first_issue; t <= last; ++t) {
      const int target = t + horizon;
      const int stage = schedule_stage(doc.schedule, target);
      const ConditionalLaw law = conditional_law(model, path[t], t, horizon);

      ForecastOptions fo;
      fo.samples = options.samples;
      fo.seed = split_seed(rep_seed, static_cast<std::uint64_t>(t) + 1);
      VectorXd p_vec;
      if (configs == 1) {
        const Stage& s = stages.at({0, stage});
        p_vec = cats.distribution(forecast_regions(s.store, law, s.anchors, fo));
      } else {
        std::vector<ForecastDistribution> per(configs);
        for (int k = 0; k < configs; ++k) {
          if (config_prob[k] == 0.0) continue;
          const Stage& s = stages.at({k, stage});
          ForecastOptions ko = fo;
          ko.seed = split_seed(fo.seed, static_cast<std::uint64_t>(k));
          per[k] = forecast_regions(s.store, law, s.anchors, ko);
        }
        p_vec = cats.distribution(mix_forecasts(per, config_prob, std::nullopt));
      }

      const Stage& normal = stages.at({0, stage});
      auto point_category = [&](BaselineKind kind) {
        try {
          return cats.of(baseline_point_forecast(kind, normal.store, model, path[t], t, horizon).lmp);
        } catch (const EmptyRegion&) {
          return cats.outside();
        }
      };
      const int d_cat = point_category(BaselineKind::Deterministic);
      const int c_cat = point_category(BaselineKind::CertaintyEquivalent);

      const int k_real = configs == 1 ? 0 : sample_category(config_prob, outage_rng);
      int realized = cats.outside();
      ++res.solves;
      try {
        realized = cats.of(solve_dcopf(stages.at({k_real, stage}).program, path[target]).lmp);
      } catch (const Infeasible&) {
      }

      res.bs_p.push_back(brier_term(p_vec, realized));
      res.bs_d.push_back(brier_term(cats.unit(d_cat), realized));
      res.bs_c.push_back(brier_term(cats.unit(c_cat), realized));
      for (int c = 0; c < cats.outside(); ++c) {
        res.event_prob.push_back(std::clamp(p_vec(c), 0.0, 1.0));
        res.event_outcome.push_back(realized == c ? 1 : 0);
      }
    }
  };

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.workers))
  for (int r = 0; r < options.replications; ++r) {
    try {
      run_replication(r);
    } catch (...) {
#pragma omp critical(lmpf_experiment_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EvaluationReport rep;
  rep.horizon = horizon;
  rep.replications = options.replications;
  rep.samples = options.samples;
  rep.seed = options.seed;
  rep.opf_solves = enumeration_solves;
  for (int c = 0; c < cats.size(); ++c) rep.categories.push_back(cats.name(c));
  std::vector<double> probs;
  std::vector<char> outcomes;
  for (int i = 0; i < times; ++i) {
    rep.target_times.push_back(options.first_issue + i + horizon);
    double p = 0.0, d = 0.0, c = 0.0;
    for (const auto& res : results) {
      p += res.bs_p[i];
      d += res.bs_d[i];
      c += res.bs_c[i];
    }
    rep.brier_forecast.push_back(p / options.replications);
    rep.brier_deterministic.push_back(d / options.replications);
    rep.brier_certainty.push_back(c / options.replications);
  }
  for (const auto& res : results) {
    rep.opf_solves += res.solves;
    probs.insert(probs.end(), res.event_prob.begin(), res.event_prob.end());
    outcomes.insert(outcomes.end(), res.event_outcome.begin(), res.event_outcome.end());
  }
  for (int i = 0; i < times; ++i) {
    rep.mean_forecast += rep.brier_forecast[i] / times;
    rep.mean_deterministic += rep.brier_deterministic[i] / times;
    rep.mean_certainty += rep.brier_certainty[i] / times;
  }
  rep.reliability = reliability_diagram(probs, outcomes, options.reliability_bins);
  return rep;
}

namespace {

std::string number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

std::string brier_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "target_time,bs_alg_p,bs_alg_d,bs_alg_c\n";
  for (std::size_t i = 0; i < report.target_times.size(); ++i)
    os << report.target_times[i] << ',' << number(report.brier_forecast[i]) << ','
       << number(report.brier_deterministic[i]) << ',' << number(report.brier_certainty[i]) << '\n';
  return os.str();
}

std::string reliability_csv(const std::vector<ReliabilityBin>& bins) {
  std::ostringstream os;
  os << "bin_center,observed_freq,count\n";
  for (const auto& b : bins) os << number(b.center) << ',' << number(b.observed) << ',' << b.count << '\n';
  return os.str();
}

std::string marginals_csv(const std::vector<MarginalSummary>& marginals) {
  std::ostringstream os;
  os << "bus,bin_lo,bin_hi,count,mean,variance\n";
  for (const auto& m : marginals)
    for (std::size_t k = 0; k < m.counts.size(); ++k)
      os << m.bus << ',' << number(m.edges[k]) << ',' << number(m.edges[k + 1]) << ',' << m.counts[k] << ','
         << number(m.mean) << ',' << number(m.variance) << '\n';
  return os.str();
}

}  // namespace lmpf
