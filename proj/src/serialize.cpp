#include "lmpf/serialize.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "lmpf/errors.hpp"

namespace lmpf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::ordered_json;

namespace {

constexpr int kStoreFormat = 1;
constexpr int kForecastFormat = 1;

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json mat_json(const MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(where + ": missing field '" + key + "'");
  return *it;
}

double to_double(const json& j, const std::string& where) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw InvalidInput(where + ": expected a number");
  return j.get<double>();
}

VectorXd json_vec(const json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(j[i], where);
  return v;
}

MatrixXd json_mat(const json& j, Eigen::Index cols, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array of rows");
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = json_vec(j[r], where);
    if (row.size() != cols) throw InvalidInput(where + ": row length mismatch");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

std::vector<int> json_ints(const json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array");
  std::vector<int> out;
  for (const auto& x : j) {
    if (!x.is_number_integer()) throw InvalidInput(where + ": expected integers");
    out.push_back(x.get<int>());
  }
  return out;
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(what + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

const char* cost_name(CostKind k) { return k == CostKind::Linear ? "linear" : "quadratic"; }

}  // namespace

std::string save_region_store(const RegionStore& store) {
  json root;
  root["format"] = kStoreFormat;
  root["parameter_count"] = store.parameter_count();
  root["cost"] = cost_name(store.cost_kind());
  root["provenance"] = store.provenance() == Provenance::Offline ? "offline" : "dcrg";
  root["configuration"] = store.configuration();
  json stats;
  stats["opf_solves"] = store.stats.opf_solves;
  stats["jitter_retries"] = store.stats.jitter_retries;
  stats["infeasible_probes"] = store.stats.infeasible_probes;
  stats["gap_fill_points"] = store.stats.gap_fill_points;
  stats["gap_fill_regions"] = store.stats.gap_fill_regions;
  root["stats"] = stats;
  json regions = json::array();
  for (const auto* r : store.all()) {
    json j;
    j["id"] = r->id;
    j["active_set"] = r->active.rows;
    j["C"] = mat_json(r->polytope.C);
    j["e"] = vec_json(r->polytope.e);
    j["interior_center"] = vec_json(r->interior.center);
    j["interior_radius"] = number(r->interior.radius);
    j["congestion"] = r->congestion;
    if (r->price_kind == PriceMapKind::Constant) {
      j["price_map"] = "constant";
      j["lmp"] = vec_json(r->price);
    } else {
      j["price_map"] = "affine";
      j["U"] = mat_json(r->price_gain);
      j["v"] = vec_json(r->price_offset);
      j["lmp"] = vec_json(r->price);
    }
    regions.push_back(std::move(j));
  }
  root["regions"] = std::move(regions);
  return dump(root);
}

RegionStore load_region_store(const std::string& text) {
  const json root = parse(text, "region store");
  const std::string where = "region store";
  if (field(root, "format", where) != kStoreFormat) throw InvalidInput("region store: unsupported format");
  const int dim = field(root, "parameter_count", where).get<int>();
  if (dim < 1) throw InvalidInput("region store: parameter_count must be positive");
  const std::string cost = field(root, "cost", where).get<std::string>();
  if (cost != "linear" && cost != "quadratic") throw InvalidInput("region store: unknown cost kind");
  const std::string prov = field(root, "provenance", where).get<std::string>();
  if (prov != "offline" && prov != "dcrg") throw InvalidInput("region store: unknown provenance");
  RegionStore store(dim, cost == "linear" ? CostKind::Linear : CostKind::Quadratic,
                    prov == "offline" ? Provenance::Offline : Provenance::Dcrg,
                    field(root, "configuration", where).get<int>());
  if (root.contains("stats")) {
    const json& s = root["stats"];
    store.stats.opf_solves = s.value("opf_solves", 0LL);
    store.stats.jitter_retries = s.value("jitter_retries", 0LL);
    store.stats.infeasible_probes = s.value("infeasible_probes", 0LL);
    store.stats.gap_fill_points = s.value("gap_fill_points", 0LL);
    store.stats.gap_fill_regions = s.value("gap_fill_regions", 0LL);
  }
  const json& regions = field(root, "regions", where);
  if (!regions.is_array()) throw InvalidInput("region store: 'regions' must be an array");
  int expected = 0;
  for (const auto& j : regions) {
    const std::string rw = "region " + std::to_string(expected);
    if (field(j, "id", rw).get<int>() != expected) throw InvalidInput(rw + ": ids must be 0, 1, 2, ... in order");
    CriticalRegion r;
    r.active.rows = json_ints(field(j, "active_set", rw), rw);
    r.polytope.C = json_mat(field(j, "C", rw), dim, rw);
    r.polytope.e = json_vec(field(j, "e", rw), rw);
    if (r.polytope.e.size() != r.polytope.C.rows()) throw InvalidInput(rw + ": C and e disagree in length");
    r.interior.center = json_vec(field(j, "interior_center", rw), rw);
    r.interior.radius = to_double(field(j, "interior_radius", rw), rw);
    r.congestion = json_ints(field(j, "congestion", rw), rw);
    const std::string kind = field(j, "price_map", rw).get<std::string>();
    r.price = json_vec(field(j, "lmp", rw), rw);
    if (kind == "constant") {
      r.price_kind = PriceMapKind::Constant;
    } else if (kind == "affine") {
      r.price_kind = PriceMapKind::Affine;
      r.price_offset = json_vec(field(j, "v", rw), rw);
      r.price_gain = json_mat(field(j, "U", rw), dim, rw);
      if (r.price_gain.rows() != r.price_offset.size()) throw InvalidInput(rw + ": U and v disagree in length");
    } else {
      throw InvalidInput(rw + ": unknown price map kind '" + kind + "'");
    }
    auto [id, added] = store.insert(std::move(r));
    if (!added) throw InvalidInput(rw + ": duplicate active set");
    (void)id;
    ++expected;
  }
  return store;
}

std::string save_forecast(const ForecastDistribution& d) {
  json root;
  root["format"] = kForecastFormat;
  json meta;
  meta["issue_time"] = d.issue_time;
  meta["horizon"] = d.horizon;
  meta["seed"] = d.seed;
  meta["samples"] = d.samples;
  meta["method"] = d.method;
  meta["plain_monte_carlo"] = d.plain_monte_carlo;
  meta["rescaled"] = d.rescaled;
  root["metadata"] = meta;
  root["unexplored_mass"] = number(d.unexplored_mass);
  root["warnings"] = d.warnings;
  json entries = json::array();
  for (const auto& e : d.entries) {
    json j;
    j["configuration"] = e.configuration;
    j["region"] = e.region;
    j["probability"] = number(e.probability);
    j["standard_error"] = number(e.standard_error);
    j["lmp"] = vec_json(e.lmp);
    j["congestion"] = e.congestion;
    if (e.price_gain.size() > 0) {
      j["U"] = mat_json(e.price_gain);
      j["v"] = vec_json(e.price_offset);
      j["component_mean"] = vec_json(e.component_mean);
      j["component_covariance"] = mat_json(e.component_covariance);
      j["codomain_lo"] = vec_json(e.codomain_lo);
      j["codomain_hi"] = vec_json(e.codomain_hi);
    }
    entries.push_back(std::move(j));
  }
  root["entries"] = std::move(entries);
  return dump(root);
}

ForecastDistribution load_forecast(const std::string& text) {
  const json root = parse(text, "forecast");
  const std::string where = "forecast";
  if (field(root, "format", where) != kForecastFormat) throw InvalidInput("forecast: unsupported format");
  ForecastDistribution d;
  const json& meta = field(root, "metadata", where);
  d.issue_time = field(meta, "issue_time", where).get<int>();
  d.horizon = field(meta, "horizon", where).get<int>();
  d.seed = field(meta, "seed", where).get<std::uint64_t>();
  d.samples = field(meta, "samples", where).get<long long>();
  d.method = field(meta, "method", where).get<std::string>();
  d.plain_monte_carlo = meta.value("plain_monte_carlo", false);
  d.rescaled = meta.value("rescaled", false);
  d.unexplored_mass = to_double(field(root, "unexplored_mass", where), where);
  if (root.contains("warnings")) d.warnings = root["warnings"].get<std::vector<std::string>>();
  for (const auto& j : field(root, "entries", where)) {
    ForecastEntry e;
    e.configuration = field(j, "configuration", where).get<int>();
    e.region = field(j, "region", where).get<int>();
    e.probability = to_double(field(j, "probability", where), where);
    e.standard_error = to_double(field(j, "standard_error", where), where);
    e.lmp = json_vec(field(j, "lmp", where), where);
    e.congestion = json_ints(field(j, "congestion", where), where);
    if (j.contains("U")) {
      e.price_offset = json_vec(j["v"], where);
      const Eigen::Index dim = j["U"].empty() ? 0 : static_cast<Eigen::Index>(j["U"][0].size());
      e.price_gain = json_mat(j["U"], dim, where);
      e.component_mean = json_vec(field(j, "component_mean", where), where);
      e.component_covariance =
          json_mat(field(j, "component_covariance", where), e.component_mean.size(), where);
      e.codomain_lo = json_vec(field(j, "codomain_lo", where), where);
      e.codomain_hi = json_vec(field(j, "codomain_hi", where), where);
    }
    d.entries.push_back(std::move(e));
  }
  return d;
}

std::string save_dispatch(const DispatchSolution& sol, const MppProblem& p) {
  json root;
  root["theta"] = vec_json(sol.theta);
  root["objective"] = number(sol.objective);
  root["dispatch"] = vec_json(sol.g);
  root["lmp"] = vec_json(sol.lmp);
  root["energy_price"] = number(sol.lambda);
  root["flows"] = vec_json(sol.flows);
  root["congestion"] = extract_congestion(sol, p);
  root["line_upper_duals"] = vec_json(sol.mu_upper);
  root["line_lower_duals"] = vec_json(sol.mu_lower);
  root["active_set"] = sol.active.rows;
  root["degenerate"] = sol.degenerate;
  return dump(root);
}

std::string save_dcrg_summary(const DcrgCache& cache, const SampleStream& stream, long long direct_solves) {
  const auto& c = cache.counters;
  json root;
  root["samples"] = c.samples;
  root["opf_solves"] = c.opf_solves;
  root["cache_hits"] = c.cache_hits;
  root["regions_added"] = c.regions;
  root["regions_total"] = cache.store.size();
  root["infeasible"] = c.infeasible;
  root["degenerate"] = c.degenerate;
  if (direct_solves >= 0) root["direct_solves"] = direct_solves;
  json visits = json::array();
  const auto counts = region_visits(stream, cache.store.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& r = cache.store.region(static_cast<int>(i));
    json v;
    v["region"] = static_cast<int>(i);
    v["visits"] = counts[i];
    v["lmp"] = vec_json(r.price);
    v["congestion"] = r.congestion;
    visits.push_back(std::move(v));
  }
  root["regions"] = std::move(visits);
  return dump(root);
}

std::string sample_stream_csv(const SampleStream& stream) {
  std::ostringstream out;
  out.precision(17);
  out << "sample,region,feasible";
  for (Eigen::Index b = 0; b < stream.lmp.cols(); ++b) out << ",lmp_" << (b + 1);
  out << "\n";
  for (long long i = 0; i < stream.size(); ++i) {
    out << i << ',' << stream.region[i] << ',' << (stream.feasible[i] ? 1 : 0);
    for (Eigen::Index b = 0; b < stream.lmp.cols(); ++b) {
      out << ',';
      if (stream.feasible[i]) out << stream.lmp(i, b);
    }
    out << "\n";
  }
  return out.str();
}

std::string save_report(const EvaluationReport& r) {
  json root;
  json meta;
  meta["horizon"] = r.horizon;
  meta["replications"] = r.replications;
  meta["samples"] = r.samples;
  meta["seed"] = r.seed;
  meta["opf_solves"] = r.opf_solves;
  root["metadata"] = meta;
  root["categories"] = r.categories;
  json mean;
  mean["forecast"] = number(r.mean_forecast);
  mean["deterministic"] = number(r.mean_deterministic);
  mean["certainty_equivalent"] = number(r.mean_certainty);
  root["mean_brier"] = mean;
  json series = json::array();
  for (std::size_t i = 0; i < r.target_times.size(); ++i) {
    json s;
    s["target_time"] = r.target_times[i];
    s["forecast"] = number(r.brier_forecast[i]);
    s["deterministic"] = number(r.brier_deterministic[i]);
    s["certainty_equivalent"] = number(r.brier_certainty[i]);
    series.push_back(std::move(s));
  }
  root["brier"] = std::move(series);
  json bins = json::array();
  for (const auto& b : r.reliability) {
    json j;
    j["lo"] = b.lo;
    j["hi"] = b.hi;
    j["center"] = b.center;
    j["count"] = b.count;
    j["occurred"] = b.occurred;
    j["mean_forecast"] = number(b.mean_forecast);
    j["observed"] = number(b.observed);
    bins.push_back(std::move(j));
  }
  root["reliability"] = std::move(bins);
  return dump(root);
}

}  // namespace lmpf
