#pragma once

#include <limits>
#include <vector>

#include "ipmlab/types.hpp"

namespace ipmlab::numerics {

enum class Sense { le, eq, ge };
enum class LpStatus { optimal, infeasible, unbounded };

constexpr double kInf = std::numeric_limits<double>::infinity();

// Linear program
//   opt  objective . x
//   s.t. constraints x  (<= | = | >=)  rhs   rowwise
//        lower <= x <= upper           (+-inf allowed)
struct LpProblem {
  bool maximize = false;
  Vec objective;
  Mat constraints;
  std::vector<Sense> senses;
  Vec rhs;
  Vec lower;
  Vec upper;

  // n variables, m rows, zeroed coefficients, x >= 0 by default
  static LpProblem sized(int n, int m);
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  Vec x;
  int iterations = 0;
};

// Dense two-phase tableau simplex.  Entering/leaving choices follow Bland's
// rule, so the method terminates on degenerate instances; entries smaller
// than 1e-9 are never used as pivots.  Intended for desk-scale problems
// (up to a few thousand rows or columns).
LpSolution solve_lp(const LpProblem& p);

}  // namespace ipmlab::numerics
