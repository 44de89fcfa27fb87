#include <doctest.h>

#include <random>

#include "lmpf/errors.hpp"
#include "lmpf/mpp.hpp"
#include "lmpf/opf.hpp"
#include "oracle/random_case.hpp"
#include "oracle/simplex_oracle.hpp"
#include "test_support.hpp"

using namespace lmpf;

namespace {

MppProblem three_bus_mpp() { return build_mpp(SystemSnapshot::from(three_bus_document().grid)); }

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("stacked program layout") {
  auto p = three_bus_mpp();
  CHECK(p.row_count() == 2 + 2 * 3 + 2 * 2);
  CHECK(p.decision_count() == 2);
  CHECK(p.parameter_count() == 1);
  for (int r = 8; r < 12; ++r) CHECK(p.E.row(r).isZero(0.0));
  CHECK(p.E(0, 0) == 1.0);
  CHECK(p.E(1, 0) == -1.0);
  CHECK(p.rows[2].kind == RowKind::LineUpper);
  CHECK(p.rows[5].kind == RowKind::LineLower);
  CHECK(p.rows[8].kind == RowKind::GenUpper);
  CHECK(p.rows[11].kind == RowKind::GenLower);

  Eigen::VectorXd lo(1), hi(1);
  lo << 5;
  hi << 1;
  CHECK_THROWS_AS(build_mpp(SystemSnapshot::from(three_bus_document().grid), lo, hi), InvalidInput);
}

TEST_CASE("one-bus toy reduces to g = d") {
  GridCase g;
  g.bus_count = 1;
  g.reference_bus = 1;
  g.generators.push_back({1, 1, 5, 0, 0, 100});
  g.stochastic_units.push_back({1, 1, UnitKind::Load, 0, 80});
  auto p = build_mpp(SystemSnapshot::from(g));
  auto sol = solve_dcopf(p, vec1(42.0));
  CHECK(sol.g(0) == doctest::Approx(42.0));
  CHECK(sol.lambda == doctest::Approx(5.0));
}

TEST_CASE("three-bus dispatch and prices") {
  auto p = three_bus_mpp();
  auto s1 = solve_dcopf(p, vec1(100.0));
  CHECK(s1.lambda == doctest::Approx(10.0));
  for (int b = 0; b < 3; ++b) CHECK(s1.lmp(b) == doctest::Approx(10.0));
  CHECK(extract_congestion(s1, p) == CongestionPattern{0, 0, 0});
  CHECK(optimal_partition(p, vec1(100.0), s1).rows == std::vector<int>{0, 1, 11});

  auto s2 = solve_dcopf(p, vec1(150.0));
  CHECK(s2.g(0) == doctest::Approx(130.0));
  CHECK(s2.g(1) == doctest::Approx(20.0));
  for (int b = 0; b < 3; ++b) CHECK(s2.lmp(b) == doctest::Approx(15.0));

  auto s3 = solve_dcopf(p, vec1(185.0));
  CHECK(s3.lmp(0) == doctest::Approx(10.0));
  CHECK(s3.lmp(1) == doctest::Approx(20.0));
  CHECK(s3.lmp(2) == doctest::Approx(15.0));
  CHECK(extract_congestion(s3, p) == CongestionPattern{1, 0, 0});
  CHECK(s3.lmp(2) == s3.lambda);

  CHECK_THROWS_AS(solve_dcopf(p, vec1(400.0)), Infeasible);
}

TEST_CASE("degenerate boundary picks the lexicographically smallest basis") {
  auto p = three_bus_mpp();
  auto s = solve_dcopf(p, vec1(130.0));
  CHECK(s.degenerate);
  CHECK(s.active.rows == std::vector<int>{0, 1, 8});
  // The other candidate is optimal too.
  auto other = affine_solution(p, ActiveSet{{0, 1, 11}});
  CHECK(p.cost(other.primal(vec1(130.0))) == doctest::Approx(s.objective));
  CHECK(s.objective == doctest::Approx(1300.0));
}

TEST_CASE("extract_lmp") {
  DispatchSolution sol;
  sol.lambda = 10.0;
  sol.mu_upper = Eigen::VectorXd::Zero(3);
  sol.mu_lower = Eigen::VectorXd::Zero(3);
  auto s = compute_shift_factors(three_bus_document().grid);
  auto pi = extract_lmp(sol, s);
  for (int b = 0; b < 3; ++b) CHECK(pi(b) == 10.0);
  sol.mu_upper(0) = 30.0;
  pi = extract_lmp(sol, s);
  CHECK(pi(0) == doctest::Approx(0.0));
  CHECK(pi(1) == doctest::Approx(20.0));
  CHECK(pi(2) == 10.0);
  sol.mu_lower = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(extract_lmp(sol, s), InvalidInput);
}

TEST_CASE("negative congestion is reported as -1") {
  GridCase g = three_bus_document().grid;
  g.stochastic_units[0].kind = UnitKind::Generation;
  g.loads.push_back({1, 150.0});
  g.generators[0].p_max = 0.0;
  auto p = build_mpp(SystemSnapshot::from(g));
  // Wind at bus 2 serving load at bus 1: flow 1->2 is pushed negative.
  auto sol = solve_dcopf(p, vec1(150.0));
  auto pattern = extract_congestion(sol, p);
  CHECK(pattern[0] == -1);
}

TEST_CASE("solutions satisfy KKT conditions and strong duality") {
  std::mt19937_64 rng(7);
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    for (bool quad : {false, true}) {
      GridCase g = oracle::random_small_case(seed, 5, quad);
      auto p = build_mpp(SystemSnapshot::from(g));
      for (int k = 0; k < 40; ++k) {
        Eigen::VectorXd th(p.parameter_count());
        for (int j = 0; j < th.size(); ++j)
          th(j) = std::uniform_real_distribution<double>(p.box_lo(j), p.box_hi(j))(rng);
        DispatchSolution sol;
        try {
          sol = solve_dcopf(p, th);
        } catch (const Infeasible&) {
          continue;
        }
        const Eigen::VectorXd rhs = p.rhs(th);
        const Eigen::VectorXd slack = rhs - p.A * sol.g;
        CHECK(slack.minCoeff() >= -1e-7);
        CHECK(sol.multipliers.minCoeff() >= 0.0);
        for (int i = 0; i < p.row_count(); ++i)
          CHECK(std::abs(sol.multipliers(i) * slack(i)) <= 1e-7 * std::max(1.0, std::abs(rhs(i))));
        Eigen::VectorXd grad = p.linear_cost;
        if (quad) grad += p.hessian * sol.g;
        CHECK((grad + p.A.transpose() * sol.multipliers).lpNorm<Eigen::Infinity>() <= 1e-7);
        double dual = -rhs.dot(sol.multipliers);
        if (quad) dual -= 0.5 * sol.g.dot(p.hessian * sol.g);
        CHECK(dual == doctest::Approx(sol.objective).epsilon(1e-6));
        CHECK(sol.lmp(g.reference_bus - 1) == sol.lambda);
      }
    }
  }
}

TEST_CASE("objective and prices match the tableau simplex oracle") {
  std::mt19937_64 rng(11);
  int compared = 0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    GridCase g = oracle::random_small_case(seed);
    auto p = build_mpp(SystemSnapshot::from(g));
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd th(p.parameter_count());
      for (int j = 0; j < th.size(); ++j) th(j) = std::uniform_real_distribution<double>(p.box_lo(j), p.box_hi(j))(rng);
      auto ref = oracle::angle_opf_linear(g, oracle::withdrawal_for(g, to_std(th)));
      if (!ref.feasible) {
        CHECK_THROWS_AS(solve_dcopf(p, th), Infeasible);
        continue;
      }
      auto sol = solve_dcopf(p, th);
      CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-6));
      if (!sol.degenerate)
        for (int b = 0; b < g.bus_count; ++b) CHECK(sol.lmp(b) == doctest::Approx(ref.lmp[b]).epsilon(1e-6));
      ++compared;
    }
  }
  CHECK(compared > 300);
}

TEST_CASE("quadratic prices match the exhaustive KKT oracle") {
  std::mt19937_64 rng(13);
  for (std::uint64_t seed = 200; seed < 206; ++seed) {
    GridCase g = oracle::random_small_case(seed, 4, true);
    auto p = build_mpp(SystemSnapshot::from(g));
    for (int k = 0; k < 30; ++k) {
      Eigen::VectorXd th(p.parameter_count());
      for (int j = 0; j < th.size(); ++j) th(j) = std::uniform_real_distribution<double>(p.box_lo(j), p.box_hi(j))(rng);
      auto ref = oracle::angle_opf_quadratic(g, oracle::withdrawal_for(g, to_std(th)));
      if (!ref.feasible) continue;
      auto sol = solve_dcopf(p, th);
      CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-6));
      for (int b = 0; b < g.bus_count; ++b) CHECK(sol.lmp(b) == doctest::Approx(ref.lmp[b]).epsilon(1e-6));
    }
  }
}
