#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lmpf {

enum class CostKind { Linear, Quadratic };

/// Stochastic units are parameters of the dispatch. A generation unit enters
/// the balance as a negative load.
enum class UnitKind { Load, Generation };

struct Line {
  int id = 0;
  int from = 0;  // bus id
  int to = 0;    // bus id
  double reactance = 0.0;  // per unit on base_mva
  double limit_min = 0.0;  // MW, flow from->to
  double limit_max = 0.0;  // MW
  bool in_service = true;
};

/// Aggregate generator at a bus. Cost is linear_cost * g + 0.5 * quadratic_cost * g^2.
struct Generator {
  int id = 0;
  int bus = 0;
  double linear_cost = 0.0;     // $/MWh
  double quadratic_cost = 0.0;  // $/MWh^2, zero for linear-cost cases
  double p_min = 0.0;           // MW
  double p_max = 0.0;           // MW
};

struct FixedLoad {
  int bus = 0;
  double mw = 0.0;
};

struct StochasticUnit {
  int id = 0;
  int bus = 0;
  UnitKind kind = UnitKind::Load;
  double min = 0.0;  // parameter box, MW
  double max = 0.0;
  double capacity() const { return max; }
  /// Contribution of one MW of this unit to the withdrawal at its bus.
  double withdrawal_sign() const { return kind == UnitKind::Load ? 1.0 : -1.0; }
};

struct GridCase {
  std::string name;
  double base_mva = 100.0;
  int bus_count = 0;  // buses carry ids 1..bus_count
  int reference_bus = 0;
  CostKind cost_kind = CostKind::Linear;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<FixedLoad> loads;
  std::vector<StochasticUnit> stochastic_units;

  int parameter_count() const { return static_cast<int>(stochastic_units.size()); }
  /// Fixed withdrawal per bus (0-based index).
  Eigen::VectorXd fixed_withdrawals() const;
  int generator_index(int generator_id) const;
  int line_index(int line_id) const;
};

/// Throws InvalidInput / TopologyError on any broken invariant.
void validate(const GridCase& grid);

/// Lines x buses matrix of MW flow per MW injected at a bus and withdrawn at
/// the reference bus. Out-of-service lines have zero rows.
Eigen::MatrixXd compute_shift_factors(const GridCase& grid);

struct LineOverride {
  int line = 0;
  std::optional<double> limit_min;
  std::optional<double> limit_max;
};

struct GeneratorOverride {
  int generator = 0;
  std::optional<double> p_min;
  std::optional<double> p_max;
};

/// A set of changes to a case: limit overrides, outages and restorations.
struct CaseDelta {
  std::vector<LineOverride> line_limits;
  std::vector<GeneratorOverride> generator_limits;
  std::vector<int> line_outages;
  std::vector<int> line_restorations;

  bool empty() const {
    return line_limits.empty() && generator_limits.empty() && line_outages.empty() &&
           line_restorations.empty();
  }
  bool changes_topology() const { return !line_outages.empty() || !line_restorations.empty(); }
};

/// Returns a validated copy of `grid` with `delta` applied.
GridCase apply_delta(const GridCase& grid, const CaseDelta& delta);

struct ScheduleEntry {
  int time = 0;
  CaseDelta delta;
};

/// Scheduled, known changes. Entries are sorted by strictly increasing time.
struct ConstraintSchedule {
  std::vector<ScheduleEntry> entries;
};

void validate(const ConstraintSchedule& schedule);

struct Contingency {
  std::string name;
  double probability = 0.0;
  CaseDelta delta;
};

/// Configurations 0..K; configuration 0 is the normal system and carries the
/// residual probability.
struct ContingencyModel {
  std::vector<Contingency> contingencies;

  int configuration_count() const { return static_cast<int>(contingencies.size()) + 1; }
  double normal_probability() const;
  /// p_0..p_K
  std::vector<double> probabilities() const;
};

void validate(const ContingencyModel& model);

/// Case with effective limits and topology at one time index, plus its shift factors.
struct SystemSnapshot {
  GridCase grid;
  Eigen::MatrixXd shift_factors;

  static SystemSnapshot from(GridCase grid);
};

/// Applies every schedule entry with time <= t, in order.
SystemSnapshot snapshot_at(const GridCase& grid, const ConstraintSchedule& schedule, int t);

GridCase apply_contingency(const GridCase& grid, const ContingencyModel& model, int k);

}  // namespace lmpf
