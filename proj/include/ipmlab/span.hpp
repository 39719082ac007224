#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ipmlab/gaussian.hpp"
#include "ipmlab/rng.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::span {

// Finite dictionary of scalar functions tabulated on two nested grids.  The
// evaluation grid is where sup-norm errors are measured; the anchor rows are
// the subset of evaluation rows where interpolation constraints are imposed.
// values(i, k) is member k at evaluation point i.
struct Dictionary {
  Mat eval_points;               // n_eval x d
  Mat values;                    // n_eval x n_members
  std::vector<int> anchor_rows;  // indices into the evaluation grid
  std::vector<std::string> member_names;

  int members() const { return int(values.cols()); }
  int eval_size() const { return int(values.rows()); }
  int anchors() const { return int(anchor_rows.size()); }

  Mat anchor_values() const;                     // anchors x members slice
  Vec anchor_slice(const Vec& on_eval) const;    // restrict a grid vector
};

// Tabulates arbitrary callables over the grid.  Anchor indices must lie in
// range; names default to member_0, member_1, ...
Dictionary build_dictionary(Mat eval_points, std::vector<int> anchor_rows,
                            const std::vector<std::function<double(const Vec&)>>& members,
                            std::vector<std::string> names = {});

// n random ridge functions relu(v . [x; 1]) with v uniform on the unit
// sphere of R^{d+1}.  Rows of `planted`, if given, are fixed v vectors
// placed before the random draws.
Dictionary relu_dictionary(Mat eval_points, std::vector<int> anchor_rows, int n,
                           RngStream& rng, const Mat* planted = nullptr);

// All monomials of total degree 1..degree (the constant belongs to the free
// offset, never to the dictionary).
Dictionary monomial_dictionary(Mat eval_points, std::vector<int> anchor_rows, int degree);

// relu(v . [x; 1]) for every grid row, one column per row of vrows.
Mat relu_features(const Mat& X, const Mat& vrows);

std::vector<int> all_rows(int n);                     // 0, 1, ..., n-1
Mat grid_1d(double lo, double hi, int n = 2001);      // column of n even steps
Mat grid_2d(double lo, double hi, int per_axis = 101);
Mat ball_grid_2d(double radius, int per_axis = 101);  // square grid kept inside the radius

// Exact interpolation of a target over a dictionary with the least total
// absolute weight.
struct DecompositionResult {
  double norm = 0.0;             // sum of |weights|
  Vec weights;                   // one per dictionary member
  double offset = 0.0;           // free additive constant
  double anchor_residual = 0.0;  // max |fit - target| over the anchor rows
};

// Minimizes sum_k |w_k| subject to offset + sum_k w_k f_k(x_j) = g(x_j) at
// every anchor row.  Anchor exactness only is required, so the value
// under-approximates the corresponding norm over a continuum of points;
// inequalities in this header use it only on the side where that is safe.
// Throws NotInSpanError when no interpolant exists.
DecompositionResult f_variation_norm(const Vec& target_on_anchors, const Dictionary& dict);

struct MomentBound {
  double lhs = 0.0;  // |E_P g - E_Q g|
  double rhs = 0.0;  // decomposition norm times the supplied metric
  DecompositionResult decomposition;
};

// Checks |E_P g - E_Q g| <= ||g|| d(P, Q) for a target supplied by value on
// the concatenated supports (P rows first, then Q rows).  The dictionary's
// anchor rows must list exactly those support points in the same order, and
// `metric` must bound |E_P f - E_Q f| over every dictionary member f.
MomentBound moment_bound_check(const Vec& g_on_supports, const Dictionary& dict,
                               const measures::EmpiricalMeasure& P,
                               const measures::EmpiricalMeasure& Q, double metric);

// Residuals below kDecayTolerance are considered solver zero.
constexpr double kDecayTolerance = 1e-9;

struct DecayCurve {
  Vec radii;
  Vec epsilon;  // sup-norm fit error on the evaluation grid per radius
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  bool exact = false;  // every epsilon within 10x solver tolerance
};

// For each budget r (nonnegative, increasing): minimize the worst anchor
// residual subject to sum_k |w_k| <= r with a free offset, then record the
// sup-norm of that fit's error over the full evaluation grid.  Fills the
// exponent fields via fit_decay_exponent when at least four errors are
// positive, and leaves them NaN otherwise.
DecayCurve error_decay_curve(const Vec& target_on_eval, const Dictionary& dict,
                             const Vec& radii);

struct DecayFit {
  double kappa = 0.0;
  double residual = 0.0;  // rms misfit of the log-log regression
  bool exact = false;     // curve already at solver tolerance everywhere
};

// Least-squares slope of log(epsilon) against log(radius), restricted to the
// largest decade of radii whose errors sit clearly above solver tolerance;
// kappa is minus that slope.  Requires four strictly positive errors unless
// the whole curve is already exact.
DecayFit fit_decay_exponent(const Vec& radii, const Vec& epsilon);

struct DensityRow {
  int n = 0;               // random neurons drawn
  double sup_error = 0.0;  // sup-norm error of the least-squares fit
};

// For each count n, least-squares fit of the target over [planted neurons] +
// [first n of max(n_counts) random unit-sphere ReLU neurons] + an intercept,
// recording the sup-norm error on the grid.  Draws are nested across counts
// so error cannot grow with n.  An empirical density witness on the supplied
// grid, nothing more.
std::vector<DensityRow> span_density_check(const Vec& target, const Mat& grid_points,
                                           const std::vector<int>& n_counts, RngStream& rng,
                                           const Mat* planted = nullptr);

// Two-column tables: r,epsilon and n,error.
void write_decay_csv(const std::string& path, const DecayCurve& curve);
void write_density_csv(const std::string& path, const std::vector<DensityRow>& rows);

}  // namespace ipmlab::span
