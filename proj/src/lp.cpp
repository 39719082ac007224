#include "ipmlab/lp.hpp"

#include <cmath>

#include "ipmlab/errors.hpp"

namespace ipmlab::numerics {

namespace {

constexpr double kPivotTol = 1e-9;

// standard-form column produced by one original variable
struct VarMap {
  enum Kind { shifted, mirrored, split } kind;
  int col;        // first standard column
  double offset;  // x = offset + col          (shifted)
                  // x = offset - col          (mirrored)
                  // x = col - col2            (split, offset unused)
  int col2 = -1;
};

struct Tableau {
  Mat t;                   // rows x (cols + 1), last column is rhs
  std::vector<int> basis;  // basic column per row
  int rows, cols;

  double& at(int i, int j) { return t(i, j); }
  double rhs(int i) const { return t(i, cols); }

  void pivot(int pr, int pc) {
    t.row(pr) /= t(pr, pc);
    for (int i = 0; i < rows; ++i) {
      if (i == pr) continue;
      const double f = t(i, pc);
      if (std::abs(f) > 0.0) t.row(i) -= f * t.row(pr);
    }
    basis[pr] = pc;
  }
};

// Minimizes cost over the tableau with Bland's rule.  `allowed` masks the
// columns that may enter.  Reduced costs are rebuilt from scratch for the
// given cost vector, so the same tableau serves both phases.
LpStatus run_simplex(Tableau& tb, const Vec& cost, const std::vector<char>& allowed,
                     int& iterations) {
  const int m = tb.rows, n = tb.cols;
  Vec red(n);
  // reduced costs: c_j - sum_i c_basis(i) * T(i, j)
  auto rebuild = [&] {
    red = cost;
    for (int i = 0; i < m; ++i) {
      const double cb = cost[tb.basis[i]];
      if (cb != 0.0) red -= cb * tb.t.row(i).head(n).transpose();
    }
  };
  rebuild();

  while (true) {
    int enter = -1;
    for (int j = 0; j < n; ++j) {
      if (allowed[j] && red[j] < -kPivotTol) {
        enter = j;
        break;  // Bland: lowest eligible index
      }
    }
    if (enter < 0) return LpStatus::optimal;

    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = tb.at(i, enter);
      if (a > kPivotTol) {
        const double ratio = tb.rhs(i) / a;
        if (leave < 0 || ratio < best - kPivotTol ||
            (ratio < best + kPivotTol && tb.basis[i] < tb.basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) return LpStatus::unbounded;

    const double cb = red[enter];
    tb.pivot(leave, enter);
    // incremental reduced-cost update; cheaper than a rebuild per pivot
    red -= cb * tb.t.row(leave).head(n).transpose();
    red[enter] = 0.0;
    ++iterations;
    if (iterations % 512 == 0) rebuild();  // shed accumulated roundoff
  }
}

}  // namespace

LpProblem LpProblem::sized(int n, int m) {
  LpProblem p;
  p.objective = Vec::Zero(n);
  p.constraints = Mat::Zero(m, n);
  p.senses.assign(m, Sense::le);
  p.rhs = Vec::Zero(m);
  p.lower = Vec::Zero(n);
  p.upper = Vec::Constant(n, kInf);
  return p;
}

LpSolution solve_lp(const LpProblem& p) {
  const int n = int(p.objective.size());
  const int m = int(p.rhs.size());
  if (p.constraints.rows() != m || p.constraints.cols() != n ||
      int(p.senses.size()) != m || p.lower.size() != n || p.upper.size() != n) {
    throw UsageError("solve_lp: inconsistent problem dimensions");
  }

  LpSolution sol;

  // Variable substitutions onto x' >= 0.  Finite upper bounds become extra
  // rows; a variable with two finite bounds keeps its lower bound as the
  // shift and its width as the row.
  std::vector<VarMap> vmap(n);
  int cols = 0;
  int extra_rows = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = p.lower[j], hi = p.upper[j];
    if (lo > hi) return sol;  // empty box: infeasible
    if (std::isfinite(lo)) {
      vmap[j] = {VarMap::shifted, cols++, lo};
      if (std::isfinite(hi)) ++extra_rows;
    } else if (std::isfinite(hi)) {
      vmap[j] = {VarMap::mirrored, cols++, hi};
    } else {
      vmap[j] = {VarMap::split, cols, 0.0, cols + 1};
      cols += 2;
    }
  }

  const int rows = m + extra_rows;

  // rows in x' space: A' x' (sense) b'
  Mat a = Mat::Zero(rows, cols);
  Vec b = Vec::Zero(rows);
  std::vector<Sense> sense(p.senses);
  sense.resize(rows, Sense::le);

  for (int i = 0; i < m; ++i) {
    double shift = 0.0;
    for (int j = 0; j < n; ++j) {
      const double c = p.constraints(i, j);
      if (c == 0.0) continue;
      const VarMap& v = vmap[j];
      switch (v.kind) {
        case VarMap::shifted:
          a(i, v.col) = c;
          shift += c * v.offset;
          break;
        case VarMap::mirrored:
          a(i, v.col) = -c;
          shift += c * v.offset;
          break;
        case VarMap::split:
          a(i, v.col) = c;
          a(i, v.col2) = -c;
          break;
      }
    }
    b[i] = p.rhs[i] - shift;
  }
  {
    int r = m;
    for (int j = 0; j < n; ++j) {
      if (vmap[j].kind == VarMap::shifted && std::isfinite(p.upper[j])) {
        a(r, vmap[j].col) = 1.0;
        b[r] = p.upper[j] - p.lower[j];
        sense[r] = Sense::le;
        ++r;
      }
    }
  }

  // objective in x' space (minimization)
  Vec cmin = Vec::Zero(cols);
  for (int j = 0; j < n; ++j) {
    double c = p.objective[j];
    if (p.maximize) c = -c;
    if (c == 0.0) continue;
    const VarMap& v = vmap[j];
    switch (v.kind) {
      case VarMap::shifted:
        cmin[v.col] += c;
        break;
      case VarMap::mirrored:
        cmin[v.col] -= c;
        break;
      case VarMap::split:
        cmin[v.col] += c;
        cmin[v.col2] -= c;
        break;
    }
  }

  // Normalize rhs signs, then append one slack/surplus or artificial per
  // row so the all-slack/artificial basis is feasible for phase 1.
  for (int i = 0; i < rows; ++i) {
    if (b[i] < 0.0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
      if (sense[i] == Sense::le)
        sense[i] = Sense::ge;
      else if (sense[i] == Sense::ge)
        sense[i] = Sense::le;
    }
  }

  int n_slack = 0, n_art = 0;
  for (int i = 0; i < rows; ++i) {
    if (sense[i] != Sense::eq) ++n_slack;
    if (sense[i] != Sense::le) ++n_art;
  }

  const int total = cols + n_slack + n_art;
  Tableau tb;
  tb.rows = rows;
  tb.cols = total;
  tb.t = Mat::Zero(rows, total + 1);
  tb.t.block(0, 0, rows, cols) = a;
  tb.t.col(total) = b;
  tb.basis.assign(rows, -1);

  std::vector<char> is_art(total, 0);
  {
    int sc = cols, ac = cols + n_slack;
    for (int i = 0; i < rows; ++i) {
      if (sense[i] == Sense::le) {
        tb.t(i, sc) = 1.0;
        tb.basis[i] = sc++;
      } else if (sense[i] == Sense::ge) {
        tb.t(i, sc) = -1.0;
        ++sc;
        tb.t(i, ac) = 1.0;
        is_art[ac] = 1;
        tb.basis[i] = ac++;
      } else {
        tb.t(i, ac) = 1.0;
        is_art[ac] = 1;
        tb.basis[i] = ac++;
      }
    }
  }

  sol.iterations = 0;
  std::vector<char> allowed(total, 1);

  if (n_art > 0) {
    Vec phase1 = Vec::Zero(total);
    for (int j = 0; j < total; ++j)
      if (is_art[j]) phase1[j] = 1.0;
    run_simplex(tb, phase1, allowed, sol.iterations);

    double art_sum = 0.0;
    for (int i = 0; i < rows; ++i)
      if (is_art[tb.basis[i]]) art_sum += tb.rhs(i);
    if (art_sum > 1e-7) return sol;  // infeasible

    // Drive leftover zero-level artificials out of the basis; rows with no
    // eligible pivot are redundant and stay harmlessly pinned at zero.
    for (int i = 0; i < rows; ++i) {
      if (!is_art[tb.basis[i]]) continue;
      for (int j = 0; j < cols + n_slack; ++j) {
        if (std::abs(tb.at(i, j)) > kPivotTol) {
          tb.pivot(i, j);
          break;
        }
      }
    }
    for (int j = 0; j < total; ++j)
      if (is_art[j]) allowed[j] = 0;
  }

  Vec phase2 = Vec::Zero(total);
  phase2.head(cols) = cmin;
  const LpStatus st = run_simplex(tb, phase2, allowed, sol.iterations);
  if (st == LpStatus::unbounded) {
    sol.status = LpStatus::unbounded;
    return sol;
  }

  Vec xstd = Vec::Zero(total);
  for (int i = 0; i < rows; ++i) xstd[tb.basis[i]] = tb.rhs(i);

  sol.x = Vec(n);
  for (int j = 0; j < n; ++j) {
    const VarMap& v = vmap[j];
    switch (v.kind) {
      case VarMap::shifted:
        sol.x[j] = v.offset + xstd[v.col];
        break;
      case VarMap::mirrored:
        sol.x[j] = v.offset - xstd[v.col];
        break;
      case VarMap::split:
        sol.x[j] = xstd[v.col] - xstd[v.col2];
        break;
    }
  }
  sol.value = p.objective.dot(sol.x);
  sol.status = LpStatus::optimal;
  return sol;
}

}  // namespace ipmlab::numerics
