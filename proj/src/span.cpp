#include "ipmlab/span.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipmlab/errors.hpp"
#include "ipmlab/lp.hpp"
#include "ipmlab/csv.hpp"
#include "ipmlab/parallel.hpp"

namespace ipmlab::span {

namespace {

using numerics::LpProblem;
using numerics::LpStatus;
using numerics::Sense;
using numerics::kInf;

constexpr int kMaxAnchors = 2000;
constexpr int kMaxMembers = 1000;

void check_dictionary_scale(const Dictionary& dict) {
  if (dict.anchors() < 1) throw UsageError("dictionary has no anchor rows");
  if (dict.anchors() > kMaxAnchors)
    throw ScaleError("too many anchor rows for the exact solver: " +
                     std::to_string(dict.anchors()) + " > " + std::to_string(kMaxAnchors));
  if (dict.members() > kMaxMembers)
    throw ScaleError("too many dictionary members for the exact solver: " +
                     std::to_string(dict.members()) + " > " + std::to_string(kMaxMembers));
}

void check_anchor_rows(const std::vector<int>& anchor_rows, int n_eval) {
  for (int r : anchor_rows)
    if (r < 0 || r >= n_eval) throw UsageError("anchor row index out of range");
}

// exponent vectors with 1 <= total degree <= degree, graded order
std::vector<std::vector<int>> monomial_exponents(int d, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(size_t(d), 0);
  std::function<void(int, int)> rec = [&](int axis, int remaining) {
    if (axis == d - 1) {
      cur[size_t(axis)] = remaining;
      out.push_back(cur);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      cur[size_t(axis)] = a;
      rec(axis + 1, remaining - a);
    }
  };
  for (int deg = 1; deg <= degree; ++deg) rec(0, deg);
  return out;
}

std::string monomial_name(const std::vector<int>& expo) {
  std::string name;
  for (size_t i = 0; i < expo.size(); ++i) {
    if (expo[i] == 0) continue;
    if (!name.empty()) name += " ";
    name += expo.size() == 1 ? "x" : "x" + std::to_string(i + 1);
    if (expo[i] > 1) name += "^" + std::to_string(expo[i]);
  }
  return name;
}

}  // namespace

Mat Dictionary::anchor_values() const {
  Mat out(anchors(), members());
  for (int j = 0; j < anchors(); ++j) out.row(j) = values.row(anchor_rows[size_t(j)]);
  return out;
}

Vec Dictionary::anchor_slice(const Vec& on_eval) const {
  if (on_eval.size() != eval_size())
    throw UsageError("grid vector length does not match the evaluation grid");
  Vec out(anchors());
  for (int j = 0; j < anchors(); ++j) out(j) = on_eval(anchor_rows[size_t(j)]);
  return out;
}

Dictionary build_dictionary(Mat eval_points, std::vector<int> anchor_rows,
                            const std::vector<std::function<double(const Vec&)>>& members,
                            std::vector<std::string> names) {
  if (eval_points.rows() < 1) throw UsageError("evaluation grid is empty");
  if (members.empty()) throw UsageError("dictionary needs at least one member");
  if (!names.empty() && names.size() != members.size())
    throw UsageError("one name per dictionary member, or none");
  check_anchor_rows(anchor_rows, int(eval_points.rows()));

  Dictionary dict;
  dict.values.resize(eval_points.rows(), Eigen::Index(members.size()));
  for (Eigen::Index i = 0; i < eval_points.rows(); ++i) {
    const Vec x = eval_points.row(i);
    for (size_t k = 0; k < members.size(); ++k) dict.values(i, Eigen::Index(k)) = members[k](x);
  }
  dict.eval_points = std::move(eval_points);
  dict.anchor_rows = std::move(anchor_rows);
  if (names.empty())
    for (size_t k = 0; k < members.size(); ++k) names.push_back("member_" + std::to_string(k));
  dict.member_names = std::move(names);
  return dict;
}

Mat relu_features(const Mat& X, const Mat& vrows) {
  if (vrows.cols() != X.cols() + 1)
    throw UsageError("neuron vectors must have one more coordinate than the points");
  Mat aug(X.rows(), X.cols() + 1);
  aug << X, Vec::Ones(X.rows());
  return (aug * vrows.transpose()).cwiseMax(0.0);
}

Dictionary relu_dictionary(Mat eval_points, std::vector<int> anchor_rows, int n,
                           RngStream& rng, const Mat* planted) {
  if (eval_points.rows() < 1) throw UsageError("evaluation grid is empty");
  if (n < 0) throw UsageError("neuron count must be nonnegative");
  check_anchor_rows(anchor_rows, int(eval_points.rows()));
  const int d = int(eval_points.cols());
  const int p = planted ? int(planted->rows()) : 0;
  if (planted && planted->cols() != d + 1)
    throw UsageError("planted neuron vectors must have one more coordinate than the points");
  if (p + n < 1) throw UsageError("dictionary needs at least one member");

  Mat vrows(p + n, d + 1);
  if (p > 0) vrows.topRows(p) = *planted;
  for (int k = 0; k < n; ++k) vrows.row(p + k) = rng.normal_vec(d + 1).normalized();

  Dictionary dict;
  dict.values = relu_features(eval_points, vrows);
  dict.eval_points = std::move(eval_points);
  dict.anchor_rows = std::move(anchor_rows);
  for (int k = 0; k < p; ++k) dict.member_names.push_back("planted_" + std::to_string(k));
  for (int k = 0; k < n; ++k) dict.member_names.push_back("relu_" + std::to_string(k));
  return dict;
}

Dictionary monomial_dictionary(Mat eval_points, std::vector<int> anchor_rows, int degree) {
  if (degree < 1) throw UsageError("monomial dictionary needs degree >= 1");
  if (eval_points.rows() < 1) throw UsageError("evaluation grid is empty");
  check_anchor_rows(anchor_rows, int(eval_points.rows()));
  const int d = int(eval_points.cols());
  const auto expos = monomial_exponents(d, degree);

  Dictionary dict;
  dict.values.resize(eval_points.rows(), Eigen::Index(expos.size()));
  for (size_t k = 0; k < expos.size(); ++k) {
    Vec col = Vec::Ones(eval_points.rows());
    for (int a = 0; a < d; ++a)
      for (int rep = 0; rep < expos[k][size_t(a)]; ++rep)
        col = col.cwiseProduct(eval_points.col(a));
    dict.values.col(Eigen::Index(k)) = col;
    dict.member_names.push_back(monomial_name(expos[k]));
  }
  dict.eval_points = std::move(eval_points);
  dict.anchor_rows = std::move(anchor_rows);
  return dict;
}

std::vector<int> all_rows(int n) {
  std::vector<int> out(static_cast<size_t>(n));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

Mat grid_1d(double lo, double hi, int n) {
  if (n < 2 || !(lo < hi)) throw UsageError("grid needs at least 2 points and lo < hi");
  Mat out(n, 1);
  for (int i = 0; i < n; ++i) out(i, 0) = lo + (hi - lo) * double(i) / double(n - 1);
  return out;
}

Mat grid_2d(double lo, double hi, int per_axis) {
  const Mat axis = grid_1d(lo, hi, per_axis);
  Mat out(per_axis * per_axis, 2);
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j) {
      out(i * per_axis + j, 0) = axis(i, 0);
      out(i * per_axis + j, 1) = axis(j, 0);
    }
  return out;
}

Mat ball_grid_2d(double radius, int per_axis) {
  if (!(radius > 0)) throw UsageError("ball grid needs a positive radius");
  const Mat square = grid_2d(-radius, radius, per_axis);
  const double r2 = radius * radius * (1.0 + 1e-12);
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < square.rows(); ++i)
    if (square.row(i).squaredNorm() <= r2) keep.push_back(int(i));
  Mat out(Eigen::Index(keep.size()), 2);
  for (size_t i = 0; i < keep.size(); ++i) out.row(Eigen::Index(i)) = square.row(keep[i]);
  return out;
}

DecompositionResult f_variation_norm(const Vec& target_on_anchors, const Dictionary& dict) {
  check_dictionary_scale(dict);
  if (target_on_anchors.size() != dict.anchors())
    throw UsageError("target length does not match the anchor rows");

  const int k = dict.members();
  const int m = dict.anchors();
  const Mat A = dict.anchor_values();

  // variables: w+ (k), w- (k), offset (free)
  LpProblem lp = LpProblem::sized(2 * k + 1, m);
  lp.objective.head(2 * k).setOnes();
  lp.lower(2 * k) = -kInf;
  for (int j = 0; j < m; ++j) {
    lp.constraints.row(j).segment(0, k) = A.row(j);
    lp.constraints.row(j).segment(k, k) = -A.row(j);
    lp.constraints(j, 2 * k) = 1.0;
    lp.senses[size_t(j)] = Sense::eq;
    lp.rhs(j) = target_on_anchors(j);
  }

  const auto sol = numerics::solve_lp(lp);
  if (sol.status == LpStatus::infeasible)
    throw NotInSpanError("target admits no exact interpolant over this dictionary");

  DecompositionResult out;
  out.weights = sol.x.head(k) - sol.x.segment(k, k);
  out.offset = sol.x(2 * k);
  out.norm = out.weights.cwiseAbs().sum();
  out.anchor_residual =
      (A * out.weights + Vec::Constant(m, out.offset) - target_on_anchors).cwiseAbs().maxCoeff();
  return out;
}

MomentBound moment_bound_check(const Vec& g_on_supports, const Dictionary& dict,
                               const measures::EmpiricalMeasure& P,
                               const measures::EmpiricalMeasure& Q, double metric) {
  const int np = P.size();
  const int nq = Q.size();
  if (dict.anchors() != np + nq)
    throw UsageError("anchor rows must list the supports of P then Q");
  if (g_on_supports.size() != np + nq)
    throw UsageError("target length does not match the supports");
  if (P.dim() != dict.eval_points.cols() || Q.dim() != dict.eval_points.cols())
    throw UsageError("measure dimension does not match the grid");
  if (!(metric >= 0)) throw UsageError("metric value must be nonnegative");
  for (int j = 0; j < np + nq; ++j) {
    const Vec row = dict.eval_points.row(dict.anchor_rows[size_t(j)]);
    const Vec ref = j < np ? Vec(P.points.row(j)) : Vec(Q.points.row(j - np));
    if ((row.array() != ref.array()).any())
      throw UsageError("anchor rows must list the supports of P then Q");
  }

  MomentBound out;
  out.decomposition = f_variation_norm(g_on_supports, dict);
  out.lhs = std::abs(P.weights.dot(g_on_supports.head(np)) -
                     Q.weights.dot(g_on_supports.tail(nq)));
  out.rhs = out.decomposition.norm * metric;
  return out;
}

DecayCurve error_decay_curve(const Vec& target_on_eval, const Dictionary& dict,
                             const Vec& radii) {
  check_dictionary_scale(dict);
  if (target_on_eval.size() != dict.eval_size())
    throw UsageError("target length does not match the evaluation grid");
  if (radii.size() < 1) throw UsageError("radius grid is empty");
  for (Eigen::Index i = 0; i < radii.size(); ++i) {
    if (!(radii(i) >= 0)) throw UsageError("radii must be nonnegative");
    if (i > 0 && !(radii(i) > radii(i - 1))) throw UsageError("radii must increase");
  }

  const int k = dict.members();
  const int m = dict.anchors();
  const Mat A = dict.anchor_values();
  const Vec g = dict.anchor_slice(target_on_eval);

  DecayCurve curve;
  curve.radii = radii;
  curve.epsilon.resize(radii.size());

  parallel_for(int(radii.size()), [&](int ri) {
    // variables: w+ (k), w- (k), offset (free), worst residual t
    LpProblem lp = LpProblem::sized(2 * k + 2, 2 * m + 1);
    lp.objective(2 * k + 1) = 1.0;
    lp.lower(2 * k) = -kInf;
    for (int j = 0; j < m; ++j) {
      lp.constraints.row(2 * j).segment(0, k) = A.row(j);
      lp.constraints.row(2 * j).segment(k, k) = -A.row(j);
      lp.constraints(2 * j, 2 * k) = 1.0;
      lp.constraints(2 * j, 2 * k + 1) = -1.0;
      lp.senses[size_t(2 * j)] = Sense::le;
      lp.rhs(2 * j) = g(j);

      lp.constraints.row(2 * j + 1).segment(0, k) = A.row(j);
      lp.constraints.row(2 * j + 1).segment(k, k) = -A.row(j);
      lp.constraints(2 * j + 1, 2 * k) = 1.0;
      lp.constraints(2 * j + 1, 2 * k + 1) = 1.0;
      lp.senses[size_t(2 * j + 1)] = Sense::ge;
      lp.rhs(2 * j + 1) = g(j);
    }
    lp.constraints.row(2 * m).segment(0, 2 * k).setOnes();
    lp.senses[size_t(2 * m)] = Sense::le;
    lp.rhs(2 * m) = radii(ri);

    const auto sol = numerics::solve_lp(lp);
    if (sol.status != LpStatus::optimal) {
      curve.epsilon(ri) = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const Vec w = sol.x.head(k) - sol.x.segment(k, k);
    const double offset = sol.x(2 * k);
    curve.epsilon(ri) =
        (dict.values * w + Vec::Constant(dict.eval_size(), offset) - target_on_eval)
            .cwiseAbs()
            .maxCoeff();
  });
  if (!curve.epsilon.allFinite())
    throw UsageError("budgeted interpolation solve failed unexpectedly");

  curve.exact = (curve.epsilon.array() <= 10.0 * kDecayTolerance).all();
  const int positive = int((curve.epsilon.array() > 0.0).count());
  const int eligible = int(((curve.epsilon.array() > 10.0 * kDecayTolerance) &&
                            (curve.radii.array() > 0.0))
                               .count());
  if (!curve.exact && positive >= 4 && eligible >= 2) {
    const DecayFit fit = fit_decay_exponent(curve.radii, curve.epsilon);
    curve.kappa = fit.kappa;
    curve.fit_residual = fit.residual;
  }
  return curve;
}

DecayFit fit_decay_exponent(const Vec& radii, const Vec& epsilon) {
  if (radii.size() != epsilon.size()) throw UsageError("radius and error grids differ in length");

  DecayFit out;
  if ((epsilon.array() <= 10.0 * kDecayTolerance).all()) {
    out.exact = true;
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    out.residual = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  if (int((epsilon.array() > 0.0).count()) < 4)
    throw UsageError("need at least four positive errors to fit a decay exponent");

  std::vector<int> eligible;
  for (Eigen::Index i = 0; i < radii.size(); ++i)
    if (epsilon(i) > 10.0 * kDecayTolerance && radii(i) > 0.0) eligible.push_back(int(i));
  if (eligible.size() < 2)
    throw UsageError("need at least two radii clearly above tolerance to fit an exponent");

  double rmax = 0.0;
  for (int i : eligible) rmax = std::max(rmax, radii(i));
  std::vector<int> window;
  for (int i : eligible)
    if (radii(i) >= rmax / 10.0) window.push_back(i);
  if (window.size() < 2) window = eligible;

  const int n = int(window.size());
  Vec lr(n), le(n);
  for (int i = 0; i < n; ++i) {
    lr(i) = std::log(radii(window[size_t(i)]));
    le(i) = std::log(epsilon(window[size_t(i)]));
  }
  const double mr = lr.mean(), me = le.mean();
  const double sxx = (lr.array() - mr).square().sum();
  const double slope = sxx > 0 ? (lr.array() - mr).cwiseProduct(le.array() - me).sum() / sxx : 0.0;
  out.kappa = -slope;
  out.residual = std::sqrt((le.array() - me - slope * (lr.array() - mr)).square().mean());
  return out;
}

std::vector<DensityRow> span_density_check(const Vec& target, const Mat& grid_points,
                                           const std::vector<int>& n_counts, RngStream& rng,
                                           const Mat* planted) {
  if (grid_points.rows() < 1) throw UsageError("evaluation grid is empty");
  if (target.size() != grid_points.rows())
    throw UsageError("target length does not match the grid");
  if (n_counts.empty()) throw UsageError("no neuron counts supplied");
  const int d = int(grid_points.cols());
  const int p = planted ? int(planted->rows()) : 0;
  if (planted && planted->cols() != d + 1)
    throw UsageError("planted neuron vectors must have one more coordinate than the points");

  int maxn = 0;
  for (int n : n_counts) {
    if (n < 0) throw UsageError("neuron counts must be nonnegative");
    maxn = std::max(maxn, n);
  }

  Mat vrows(p + maxn, d + 1);
  if (p > 0) vrows.topRows(p) = *planted;
  for (int j = 0; j < maxn; ++j) vrows.row(p + j) = rng.normal_vec(d + 1).normalized();
  const Mat features = relu_features(grid_points, vrows);

  std::vector<DensityRow> table(n_counts.size());
  parallel_for(int(n_counts.size()), [&](int i) {
    const int n = n_counts[size_t(i)];
    Mat design(grid_points.rows(), p + n + 1);
    design.leftCols(p + n) = features.leftCols(p + n);
    design.col(p + n).setOnes();
    const Vec coef = design.colPivHouseholderQr().solve(target);
    table[size_t(i)] = {n, (design * coef - target).cwiseAbs().maxCoeff()};
  });
  return table;
}

void write_decay_csv(const std::string& path, const DecayCurve& curve) {
  Mat m(curve.radii.size(), 2);
  m.col(0) = curve.radii;
  m.col(1) = curve.epsilon;
  measures::write_csv_matrix(path, m, {"r", "epsilon"});
}

void write_density_csv(const std::string& path, const std::vector<DensityRow>& rows) {
  Mat m(Eigen::Index(rows.size()), 2);
  for (size_t i = 0; i < rows.size(); ++i) {
    m(Eigen::Index(i), 0) = rows[i].n;
    m(Eigen::Index(i), 1) = rows[i].sup_error;
  }
  measures::write_csv_matrix(path, m, {"n", "error"});
}

}  // namespace ipmlab::span
