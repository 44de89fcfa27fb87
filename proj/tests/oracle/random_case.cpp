#include "oracle/random_case.hpp"

#include <algorithm>
#include <random>

namespace oracle {

lmpf::GridCase random_small_case(std::uint64_t seed, int max_buses, bool quadratic) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  lmpf::GridCase g;
  g.name = "random";
  g.bus_count = pick(3, std::max(3, max_buses));
  g.reference_bus = pick(1, g.bus_count);
  g.cost_kind = quadratic ? lmpf::CostKind::Quadratic : lmpf::CostKind::Linear;

  int id = 1;
  for (int b = 2; b <= g.bus_count; ++b) {
    lmpf::Line l;
    l.id = id++;
    l.from = pick(1, b - 1);
    l.to = b;
    l.reactance = uni(0.05, 0.3);
    const double lim = uni(40.0, 120.0);
    l.limit_min = -lim;
    l.limit_max = lim;
    g.lines.push_back(l);
  }
  const int extra = pick(1, 2);
  for (int e = 0; e < extra; ++e) {
    int a = pick(1, g.bus_count), b = pick(1, g.bus_count);
    if (a == b) continue;
    lmpf::Line l;
    l.id = id++;
    l.from = std::min(a, b);
    l.to = std::max(a, b);
    l.reactance = uni(0.05, 0.3);
    const double lim = uni(40.0, 120.0);
    l.limit_min = -lim;
    l.limit_max = lim;
    g.lines.push_back(l);
  }

  std::vector<int> buses(g.bus_count);
  for (int b = 0; b < g.bus_count; ++b) buses[b] = b + 1;
  std::shuffle(buses.begin(), buses.end(), rng);
  const int ngen = pick(2, std::min(3, g.bus_count));
  for (int k = 0; k < ngen; ++k) {
    lmpf::Generator gen;
    gen.id = k + 1;
    gen.bus = buses[k];
    gen.linear_cost = 10.0 + 7.0 * k + uni(0.0, 5.0);
    gen.quadratic_cost = quadratic ? uni(0.02, 0.1) : 0.0;
    gen.p_min = 0.0;
    gen.p_max = uni(80.0, 200.0);
    g.generators.push_back(gen);
  }
  std::shuffle(buses.begin(), buses.end(), rng);
  const int nunits = pick(1, 2);
  for (int j = 0; j < nunits; ++j) {
    lmpf::StochasticUnit u;
    u.id = j + 1;
    u.bus = buses[j];
    u.kind = lmpf::UnitKind::Load;
    u.min = 0.0;
    u.max = uni(60.0, 150.0);
    g.stochastic_units.push_back(u);
  }
  if (g.bus_count > 2) g.loads.push_back({buses[g.bus_count - 1], uni(5.0, 30.0)});
  lmpf::validate(g);
  return g;
}

}  // namespace oracle
