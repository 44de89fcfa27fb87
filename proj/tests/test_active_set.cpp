#include <doctest.h>

#include "lmpf/active_set.hpp"
#include "lmpf/errors.hpp"

using namespace lmpf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("small linear program") {
  // min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6, x, y >= 0  -> (1.6, 1.2)
  qp::Problem p;
  p.linear = VectorXd::Constant(2, -1.0);
  p.A.resize(4, 2);
  p.A << 1, 2, 3, 1, -1, 0, 0, -1;
  p.rhs.resize(4);
  p.rhs << 4, 6, 0, 0;
  auto r = qp::solve(p);
  CHECK(r.x(0) == doctest::Approx(1.6));
  CHECK(r.x(1) == doctest::Approx(1.2));
  CHECK(r.objective == doctest::Approx(-2.8));
  CHECK(r.working_set == std::vector<int>{0, 1});
  CHECK(r.multipliers(0) == doctest::Approx(0.4));
  CHECK(r.multipliers(1) == doctest::Approx(0.2));
}

TEST_CASE("phase one finds a start far from the origin") {
  qp::Problem p;
  p.linear = VectorXd::Ones(1);
  p.A.resize(2, 1);
  p.A << -1, 1;
  p.rhs.resize(2);
  p.rhs << -50, 80;
  auto r = qp::solve(p);
  CHECK(r.x(0) == doctest::Approx(50.0));
  CHECK(r.multipliers(0) == doctest::Approx(1.0));
}

TEST_CASE("equality pairs carry a signed multiplier") {
  // min x + 3y  s.t.  x + y = 5 (as two rows), 0 <= x <= 2, y >= 0.
  qp::Problem p;
  p.linear.resize(2);
  p.linear << 1, 3;
  p.A.resize(5, 2);
  p.A << 1, 1, -1, -1, 1, 0, -1, 0, 0, -1;
  p.rhs.resize(5);
  p.rhs << 5, -5, 2, 0, 0;
  p.twin = {1, 0, 3, 2, -1};
  auto r = qp::solve(p);
  CHECK(r.x(0) == doctest::Approx(2.0));
  CHECK(r.x(1) == doctest::Approx(3.0));
  CHECK(r.multipliers(0) == doctest::Approx(0.0));
  CHECK(r.multipliers(1) == doctest::Approx(3.0));
  CHECK(r.multipliers(2) == doctest::Approx(2.0));
}

TEST_CASE("quadratic program") {
  // min 0.5 (x^2 + y^2)  s.t.  x + y >= 2  -> (1, 1), multiplier 1.
  qp::Problem p;
  p.hessian = MatrixXd::Identity(2, 2);
  p.linear = VectorXd::Zero(2);
  p.A.resize(1, 2);
  p.A << -1, -1;
  p.rhs.resize(1);
  p.rhs << -2;
  auto r = qp::solve(p);
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(1.0));
  CHECK(r.multipliers(0) == doctest::Approx(1.0));

  p.rhs << 3;  // constraint slack: unconstrained minimum
  r = qp::solve(p);
  CHECK(r.x.norm() == doctest::Approx(0.0));
  CHECK(r.working_set.empty());
}

TEST_CASE("infeasible and unbounded programs") {
  qp::Problem p;
  p.linear = VectorXd::Ones(1);
  p.A.resize(2, 1);
  p.A << 1, -1;
  p.rhs.resize(2);
  p.rhs << 1, -2;
  CHECK_THROWS_AS(qp::solve(p), Infeasible);

  qp::Problem u;
  u.linear = VectorXd::Ones(1);
  u.A.resize(1, 1);
  u.A << 1;
  u.rhs.resize(1);
  u.rhs << 1;
  CHECK_THROWS_AS(qp::solve(u), Unbounded);
}

TEST_CASE("row independence") {
  MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  CHECK(qp::rows_independent(a, {0, 1}));
  CHECK_FALSE(qp::rows_independent(a, {0, 1, 2}));
  CHECK(qp::rows_independent(a, {}));
}
