#include "lmpf/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "lmpf/errors.hpp"

namespace lmpf {

namespace {

bool finite(double v) { return std::isfinite(v); }

std::string line_label(const Line& l) {
  std::ostringstream os;
  os << "line " << l.id << " (" << l.from << "-" << l.to << ")";
  return os.str();
}

// Buses reachable from the reference bus over in-service lines.
std::vector<bool> reachable(const GridCase& grid) {
  std::vector<std::vector<int>> adj(grid.bus_count);
  for (const auto& l : grid.lines) {
    if (!l.in_service) continue;
    adj[l.from - 1].push_back(l.to - 1);
    adj[l.to - 1].push_back(l.from - 1);
  }
  std::vector<bool> seen(grid.bus_count, false);
  std::queue<int> q;
  q.push(grid.reference_bus - 1);
  seen[grid.reference_bus - 1] = true;
  while (!q.empty()) {
    int b = q.front();
    q.pop();
    for (int nb : adj[b]) {
      if (!seen[nb]) {
        seen[nb] = true;
        q.push(nb);
      }
    }
  }
  return seen;
}

}  // namespace

Eigen::VectorXd GridCase::fixed_withdrawals() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(bus_count);
  for (const auto& l : loads) d(l.bus - 1) += l.mw;
  return d;
}

int GridCase::generator_index(int generator_id) const {
  for (std::size_t i = 0; i < generators.size(); ++i)
    if (generators[i].id == generator_id) return static_cast<int>(i);
  throw InvalidInput("unknown generator id " + std::to_string(generator_id));
}

int GridCase::line_index(int line_id) const {
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].id == line_id) return static_cast<int>(i);
  throw InvalidInput("unknown line id " + std::to_string(line_id));
}

void validate(const GridCase& grid) {
  if (grid.bus_count < 1) throw InvalidInput("case has no buses");
  if (!(grid.base_mva > 0.0) || !finite(grid.base_mva)) throw InvalidInput("base_mva must be positive");
  auto valid_bus = [&](int b) { return b >= 1 && b <= grid.bus_count; };
  if (!valid_bus(grid.reference_bus)) throw InvalidInput("reference bus is missing or not a bus");

  std::set<int> ids;
  for (const auto& l : grid.lines) {
    if (!ids.insert(l.id).second) throw InvalidInput("duplicate line id " + std::to_string(l.id));
    if (!valid_bus(l.from) || !valid_bus(l.to)) throw InvalidInput(line_label(l) + " references an unknown bus");
    if (l.from == l.to) throw InvalidInput(line_label(l) + " is a self loop");
    if (!finite(l.reactance) || !(l.reactance > 0.0))
      throw InvalidInput(line_label(l) + " must have a strictly positive reactance");
    if (!finite(l.limit_min) || !finite(l.limit_max))
      throw InvalidInput(line_label(l) + " has non-finite limits");
    if (l.limit_min > 0.0 || l.limit_max < 0.0 || !(l.limit_min < l.limit_max))
      throw InvalidInput(line_label(l) + " limits must satisfy limit_min <= 0 <= limit_max, limit_min < limit_max");
  }

  ids.clear();
  std::set<int> gen_buses;
  for (const auto& g : grid.generators) {
    const std::string label = "generator " + std::to_string(g.id);
    if (!ids.insert(g.id).second) throw InvalidInput("duplicate " + label);
    if (!valid_bus(g.bus)) throw InvalidInput(label + " references an unknown bus");
    if (!gen_buses.insert(g.bus).second)
      throw InvalidInput("bus " + std::to_string(g.bus) + " has more than one generator");
    if (!finite(g.linear_cost) || !finite(g.quadratic_cost) || !finite(g.p_min) || !finite(g.p_max))
      throw InvalidInput(label + " has non-finite data");
    if (g.p_min > g.p_max) throw InvalidInput(label + " has p_min > p_max");
    if (grid.cost_kind == CostKind::Quadratic && !(g.quadratic_cost > 0.0))
      throw InvalidInput(label + " needs a positive quadratic cost in a quadratic-cost case");
    if (grid.cost_kind == CostKind::Linear && g.quadratic_cost != 0.0)
      throw InvalidInput(label + " has a quadratic cost in a linear-cost case");
  }
  if (grid.generators.empty()) throw InvalidInput("case has no generators");

  std::set<int> load_buses;
  for (const auto& l : grid.loads) {
    if (!valid_bus(l.bus)) throw InvalidInput("load references an unknown bus");
    if (!finite(l.mw)) throw InvalidInput("load has non-finite MW");
    if (!load_buses.insert(l.bus).second)
      throw InvalidInput("bus " + std::to_string(l.bus) + " has more than one fixed load");
  }

  ids.clear();
  std::set<std::pair<int, int>> unit_slots;
  for (const auto& u : grid.stochastic_units) {
    const std::string label = "stochastic unit " + std::to_string(u.id);
    if (!ids.insert(u.id).second) throw InvalidInput("duplicate " + label);
    if (!valid_bus(u.bus)) throw InvalidInput(label + " references an unknown bus");
    if (!unit_slots.insert({u.bus, static_cast<int>(u.kind)}).second)
      throw InvalidInput("bus " + std::to_string(u.bus) + " has two stochastic units of the same kind");
    if (!finite(u.min) || !finite(u.max) || u.min > u.max)
      throw InvalidInput(label + " has an invalid parameter range");
  }

  auto seen = reachable(grid);
  for (int b = 0; b < grid.bus_count; ++b)
    if (!seen[b]) throw TopologyError("network is disconnected: bus " + std::to_string(b + 1) + " is islanded");
}

Eigen::MatrixXd compute_shift_factors(const GridCase& grid) {
  const int n = grid.bus_count;
  const int m = static_cast<int>(grid.lines.size());
  auto seen = reachable(grid);
  for (int b = 0; b < n; ++b)
    if (!seen[b]) throw TopologyError("network is disconnected: bus " + std::to_string(b + 1) + " is islanded");

  // Susceptance matrix in per unit; the base cancels in the flow ratios.
  Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : grid.lines) {
    if (!l.in_service) continue;
    const double b = 1.0 / l.reactance;
    const int f = l.from - 1, t = l.to - 1;
    bbus(f, f) += b;
    bbus(t, t) += b;
    bbus(f, t) -= b;
    bbus(t, f) -= b;
  }

  const int ref = grid.reference_bus - 1;
  std::vector<int> keep;
  for (int b = 0; b < n; ++b)
    if (b != ref) keep.push_back(b);

  Eigen::MatrixXd angles = Eigen::MatrixXd::Zero(n, n);  // angle per unit injection, column = injection bus
  if (!keep.empty()) {
    const int r = static_cast<int>(keep.size());
    Eigen::MatrixXd reduced(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) reduced(i, j) = bbus(keep[i], keep[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(reduced);
    if (!lu.isInvertible()) throw TopologyError("singular susceptance matrix");
    Eigen::MatrixXd inv = lu.inverse();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) angles(keep[i], keep[j]) = inv(i, j);
  }

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, n);
  for (int k = 0; k < m; ++k) {
    const auto& l = grid.lines[k];
    if (!l.in_service) continue;
    const double b = 1.0 / l.reactance;
    s.row(k) = b * (angles.row(l.from - 1) - angles.row(l.to - 1));
  }
  s.col(ref).setZero();
  return s;
}

GridCase apply_delta(const GridCase& grid, const CaseDelta& delta) {
  GridCase out = grid;
  for (const auto& o : delta.line_limits) {
    auto& l = out.lines[out.line_index(o.line)];
    if (o.limit_min) l.limit_min = *o.limit_min;
    if (o.limit_max) l.limit_max = *o.limit_max;
  }
  for (const auto& o : delta.generator_limits) {
    auto& g = out.generators[out.generator_index(o.generator)];
    if (o.p_min) g.p_min = *o.p_min;
    if (o.p_max) g.p_max = *o.p_max;
  }
  for (int id : delta.line_outages) out.lines[out.line_index(id)].in_service = false;
  for (int id : delta.line_restorations) out.lines[out.line_index(id)].in_service = true;
  validate(out);
  return out;
}

void validate(const ConstraintSchedule& schedule) {
  for (std::size_t i = 0; i < schedule.entries.size(); ++i) {
    if (schedule.entries[i].time < 0) throw InvalidInput("schedule time indices must be non-negative");
    if (i > 0 && schedule.entries[i].time <= schedule.entries[i - 1].time)
      throw InvalidInput("schedule time indices must be strictly increasing");
  }
}

double ContingencyModel::normal_probability() const {
  double s = 0.0;
  for (const auto& c : contingencies) s += c.probability;
  return std::max(0.0, 1.0 - s);
}

std::vector<double> ContingencyModel::probabilities() const {
  std::vector<double> p{normal_probability()};
  for (const auto& c : contingencies) p.push_back(c.probability);
  return p;
}

void validate(const ContingencyModel& model) {
  double s = 0.0;
  for (const auto& c : model.contingencies) {
    if (!std::isfinite(c.probability) || c.probability < 0.0)
      throw InvalidInput("contingency '" + c.name + "' has a negative or non-finite probability");
    s += c.probability;
  }
  if (s > 1.0 + 1e-12) throw InvalidInput("contingency probabilities exceed one");
}

SystemSnapshot SystemSnapshot::from(GridCase grid) {
  validate(grid);
  SystemSnapshot snap;
  snap.shift_factors = compute_shift_factors(grid);
  snap.grid = std::move(grid);
  return snap;
}

SystemSnapshot snapshot_at(const GridCase& grid, const ConstraintSchedule& schedule, int t) {
  if (t < 0) throw InvalidInput("snapshot time must be non-negative");
  validate(schedule);
  GridCase cur = grid;
  for (const auto& e : schedule.entries) {
    if (e.time > t) break;
    cur = apply_delta(cur, e.delta);
  }
  return SystemSnapshot::from(std::move(cur));
}

GridCase apply_contingency(const GridCase& grid, const ContingencyModel& model, int k) {
  validate(model);
  if (k < 0 || k >= model.configuration_count())
    throw InvalidInput("contingency index " + std::to_string(k) + " out of range");
  if (k == 0) return grid;
  return apply_delta(grid, model.contingencies[k - 1].delta);
}

}  // namespace lmpf
