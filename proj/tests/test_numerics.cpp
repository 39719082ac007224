#include <cmath>
#include <cstring>
#include <doctest.h>

#include "ipmlab/errors.hpp"
#include "ipmlab/grad_check.hpp"
#include "ipmlab/lp.hpp"
#include "ipmlab/rng.hpp"

using namespace ipmlab;
using namespace ipmlab::numerics;

TEST_CASE("lp: two-variable box maximum") {
  // max x1 + x2  s.t.  x1 <= 1, x2 <= 1, x >= 0   ->  2 at (1, 1)
  LpProblem p = LpProblem::sized(2, 2);
  p.maximize = true;
  p.objective << 1, 1;
  p.constraints << 1, 0, 0, 1;
  p.rhs << 1, 1;
  LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(1.0));
}

TEST_CASE("lp: ge constraint pins the minimum") {
  // min x1  s.t.  x1 >= 3   ->  3
  LpProblem p = LpProblem::sized(1, 1);
  p.objective << 1;
  p.constraints << 1;
  p.senses[0] = Sense::ge;
  p.rhs << 3;
  LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.value == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("lp: infeasible and unbounded are reported as status") {
  LpProblem p = LpProblem::sized(1, 1);
  p.objective << 1;
  p.constraints << 1;
  p.rhs << -1;  // x1 <= -1 contradicts x1 >= 0
  CHECK(solve_lp(p).status == LpStatus::infeasible);

  LpProblem q = LpProblem::sized(1, 0);
  q.maximize = true;
  q.objective << 1;
  CHECK(solve_lp(q).status == LpStatus::unbounded);
}

TEST_CASE("lp: variable bounds without rows") {
  LpProblem p = LpProblem::sized(1, 0);
  p.objective << 1;
  p.lower << -2;
  p.upper << 3;
  CHECK(solve_lp(p).value == doctest::Approx(-2.0));
  p.maximize = true;
  CHECK(solve_lp(p).value == doctest::Approx(3.0));

  // upper bound only (lower is -inf)
  LpProblem q = LpProblem::sized(1, 0);
  q.maximize = true;
  q.objective << 1;
  q.lower << -kInf;
  q.upper << 4;
  CHECK(solve_lp(q).value == doctest::Approx(4.0));
}

TEST_CASE("lp: free variable via equality rows") {
  // min x1 + x2  s.t.  x1 + x2 = 5, x1 - x2 = -9, both free -> x = (-2, 7)
  LpProblem p = LpProblem::sized(2, 2);
  p.objective << 1, 1;
  p.constraints << 1, 1, 1, -1;
  p.senses = {Sense::eq, Sense::eq};
  p.rhs << 5, -9;
  p.lower << -kInf, -kInf;
  LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.x[0] == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(s.x[1] == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("lp: Beale's cycling instance terminates at -1/20") {
  // Classic degenerate example; Dantzig pricing cycles on it, Bland's rule
  // must terminate with the known optimum.
  LpProblem p = LpProblem::sized(4, 3);
  p.objective << -0.75, 150, -0.02, 6;
  p.constraints << 0.25, -60, -1.0 / 25, 9, 0.5, -90, -1.0 / 50, 3, 0, 0, 1, 0;
  p.rhs << 0, 0, 1;
  LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.value == doctest::Approx(-0.05).epsilon(1e-9));
}

namespace {

// dual of  max c.x s.t. Ax <= b, x >= 0   is   min b.y s.t. A'y >= c, y >= 0
LpProblem dual_of(const LpProblem& p) {
  const int m = int(p.rhs.size()), n = int(p.objective.size());
  LpProblem d = LpProblem::sized(m, n);
  d.objective = p.rhs;
  d.constraints = p.constraints.transpose();
  d.rhs = p.objective;
  for (auto& s : d.senses) s = Sense::ge;
  return d;
}

}  // namespace

TEST_CASE("lp: strong duality on random inequality instances") {
  RngStream rng(2024, 0);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + rng.index(5), n = 2 + rng.index(5);
    LpProblem p = LpProblem::sized(n, m);
    p.maximize = true;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) p.constraints(i, j) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < m; ++i) p.rhs[i] = rng.uniform(0.1, 2.0);  // x=0 feasible
    for (int j = 0; j < n; ++j) p.objective[j] = rng.uniform(-1.0, 1.0);

    LpSolution ps = solve_lp(p);
    LpSolution ds = solve_lp(dual_of(p));
    if (ps.status == LpStatus::optimal) {
      REQUIRE(ds.status == LpStatus::optimal);
      CHECK(ps.value == doctest::Approx(ds.value).epsilon(1e-8));
      ++solved;
    } else {
      REQUIRE(ps.status == LpStatus::unbounded);
      CHECK(ds.status == LpStatus::infeasible);
    }
  }
  CHECK(solved > 10);  // corpus exercises the bounded branch
}

TEST_CASE("lp: degenerate transport equalities") {
  // 2x2 balanced transport, supplies (1,1), demands (1,1), costs rowwise
  // (0,1;1,0) -> plan mass on the diagonal, value 0.  One equality row is
  // redundant, which exercises the leftover-artificial path.
  LpProblem p = LpProblem::sized(4, 4);
  p.objective << 0, 1, 1, 0;
  p.constraints << 1, 1, 0, 0, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0, 1;
  p.senses = {Sense::eq, Sense::eq, Sense::eq, Sense::eq};
  p.rhs << 1, 1, 1, 1;
  LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("lp: identical calls give identical bits") {
  LpProblem p = LpProblem::sized(3, 2);
  p.maximize = true;
  p.objective << 1, 2, 0.5;
  p.constraints << 1, 1, 1, 2, 0.5, 1;
  p.rhs << 3, 4;
  LpSolution a = solve_lp(p);
  LpSolution b = solve_lp(p);
  REQUIRE(a.status == LpStatus::optimal);
  CHECK(std::memcmp(&a.value, &b.value, sizeof(double)) == 0);
  CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * a.x.size()) == 0);
}

TEST_CASE("lp: dimension mismatch throws") {
  LpProblem p = LpProblem::sized(2, 2);
  p.rhs = Vec::Zero(3);
  CHECK_THROWS_AS(solve_lp(p), UsageError);
}

TEST_CASE("rng: streams are reproducible and separated") {
  RngStream a(42, 0), b(42, 0), c(42, 1);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng: uniform range") {
  RngStream r(7, 3);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("rng: standard normal moments over 1e6 draws") {
  // CLT band: |mean| <= 4/sqrt(n); variance s.e. is ~sqrt(2/n)
  RngStream r(42, 0);
  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) <= 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("grad_check: matches analytic gradients and flags wrong ones") {
  auto value = [](const Vec& t) { return std::sin(t[0]) * std::cos(t[1]) + t[0] * t[0] * t[1]; };
  auto grad = [](const Vec& t) {
    Vec g(2);
    g[0] = std::cos(t[0]) * std::cos(t[1]) + 2 * t[0] * t[1];
    g[1] = -std::sin(t[0]) * std::sin(t[1]) + t[0] * t[0];
    return g;
  };
  Vec theta(2);
  theta << 0.3, -0.7;
  auto rep = grad_check(value, grad, theta);
  CHECK(rep.max_rel_error < 1e-9);

  auto bad = [&](const Vec& t) { return grad(t) + Vec::Constant(2, 0.01); };
  CHECK(grad_check(value, bad, theta).max_rel_error > 1e-3);
}

TEST_CASE("grad_check: constant function has zero error") {
  auto value = [](const Vec&) { return 3.5; };
  auto grad = [](const Vec& t) { return Vec(Vec::Zero(t.size())); };
  auto rep = grad_check(value, grad, Vec::Zero(4));
  CHECK(rep.max_rel_error == 0.0);
}
