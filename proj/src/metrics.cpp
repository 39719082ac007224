#include "ipmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "ipmlab/errors.hpp"
#include "ipmlab/lp.hpp"
#include "ipmlab/parallel.hpp"

namespace ipmlab::metrics {

namespace {

using families::Family;
using measures::EmpiricalMeasure;

constexpr int kDistanceStreams = 0x100;
constexpr int kDivergenceStreams = 0x200;

// rmsprop-style or constant step rule; one instance per trajectory
struct Stepper {
  bool rms;
  double lr;
  Vec acc;

  Stepper(const OptimizerConfig& cfg, int p) : rms(cfg.rmsprop), lr(cfg.step_size) {
    if (rms) acc = Vec::Zero(p);
  }
  Vec step(const Vec& g) {
    if (!rms) return lr * g;
    acc = 0.9 * acc.array() + 0.1 * g.array().square();
    return (lr * g.array() / (acc.array().sqrt() + 1e-8)).matrix();
  }
};

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  Vec params;

  void offer(double v, const Vec& t) {
    if (v > value) {
      value = v;
      params = t;
    }
  }
  void offer(const Best& o) {
    if (o.value > value) *this = o;
  }
};

void check_same_dim(const EmpiricalMeasure& P, const EmpiricalMeasure& Q, const Family& fam) {
  if (P.size() == 0 || Q.size() == 0) throw UsageError("empty empirical measure");
  if (P.dim() != fam.input_dim() || Q.dim() != fam.input_dim())
    throw UsageError("measure dimension does not match the family input dimension");
}

void check_probability_weights(const EmpiricalMeasure& M, const char* which) {
  if (M.size() == 0) throw UsageError("empty empirical measure");
  if ((M.weights.array() < 0).any() || std::abs(M.weights.sum() - 1.0) > 1e-6)
    throw UsageError(std::string(which) + " weights must form a probability vector");
}

Mat stack_support(const EmpiricalMeasure& P, const EmpiricalMeasure& Q) {
  Mat X(P.size() + Q.size(), P.dim());
  X.topRows(P.size()) = P.points;
  X.bottomRows(Q.size()) = Q.points;
  return X;
}

// value and gradient of  theta -> sum_i coeff_i f_theta(x_i)
struct WeightedSum {
  const Family& fam;
  const Mat& X;
  const Vec& coeff;

  double value(const Vec& theta) const { return coeff.dot(fam.eval_batch(theta, X)); }
  Vec grad(const Vec& theta) const { return fam.grad_params(theta, X, coeff); }
};

// same objective split as  E_P f - E_Q f  with the two expectations
// accumulated separately, so identical point sets cancel exactly
struct SplitWeightedSum {
  const Family& fam;
  const Mat& X;  // P rows first, then Q rows
  Vec wp, wq, stacked;

  SplitWeightedSum(const Family& f, const Mat& x, const Vec& pweights, const Vec& qweights)
      : fam(f), X(x), wp(pweights), wq(qweights), stacked(x.rows()) {
    stacked.head(wp.size()) = wp;
    stacked.tail(wq.size()) = -wq;
  }
  double value(const Vec& theta) const {
    const Vec g = fam.eval_batch(theta, X);
    return wp.dot(g.head(wp.size())) - wq.dot(g.tail(wq.size()));
  }
  Vec grad(const Vec& theta) const { return fam.grad_params(theta, X, stacked); }
};

// Generic multi-restart ascent over a (value, grad) objective with optional
// descending twin trajectories.  score maps the raw objective value to the
// number being maximized.
template <class ValueGrad, class ScoreFn>
Best run_restarts(const Family& fam, const OptimizerConfig& cfg, int stream_base, bool twin,
                  const ValueGrad& obj, const ScoreFn& score) {
  std::vector<Best> per(cfg.restarts);
  parallel_for(cfg.restarts, [&](int r) {
    RngStream rs(cfg.seed, std::uint64_t(stream_base) + std::uint64_t(r));
    const Vec start = fam.project(fam.random_params(rs));
    Best local;
    for (int dir = 0; dir < (twin ? 2 : 1); ++dir) {
      const double sgn = dir == 0 ? 1.0 : -1.0;
      Vec theta = start;
      Stepper st(cfg, fam.param_count());
      local.offer(score(obj.value(theta)), theta);
      for (int s = 0; s < cfg.steps; ++s) {
        const Vec g = obj.grad(theta);
        theta = fam.project(theta + st.step(sgn * g));
        local.offer(score(obj.value(theta)), theta);
      }
    }
    per[r] = std::move(local);
  });
  Best best;
  for (const Best& b : per) best.offer(b);
  for (const Vec& c : cfg.extra_candidates) {
    const Vec t = fam.project(c);
    best.offer(score(obj.value(t)), t);
  }
  return best;
}

// ---------------------------------------------------------------- grid

// Exhaustive search over the family's 1- or 2-axis box; every evaluation
// goes through `offer`, so golden-section refinement can only improve on
// the best grid cell.
template <class ScoreFn>
Best grid_maximize(const Family& fam, int grid_points, const ScoreFn& score) {
  const auto box = fam.grid_box();
  if (box.empty() || box.size() > 2)
    throw UsageError("grid-exact search needs a family with a 1- or 2-axis parameter box; '" +
                     fam.name() + "' does not expose one");
  if (grid_points < 3) throw UsageError("grid resolution must be at least 3");

  Best best;
  auto eval_at = [&](const Vec& coords) {
    const Vec t = fam.grid_to_params(coords);
    const double v = score(t);
    best.offer(v, t);
    return v;
  };

  // golden-section sweep along one axis; returns (best value, best coord)
  // among its own evaluations
  auto golden_axis = [&](Vec coords, int axis, double lo, double hi) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    coords[axis] = x1;
    double f1 = eval_at(coords);
    coords[axis] = x2;
    double f2 = eval_at(coords);
    std::pair<double, double> top = f1 >= f2 ? std::make_pair(f1, x1) : std::make_pair(f2, x2);
    for (int it = 0; it < 90; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        coords[axis] = x2;
        f2 = eval_at(coords);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        coords[axis] = x1;
        f1 = eval_at(coords);
      }
      if (f1 > top.first) top = {f1, x1};
      if (f2 > top.first) top = {f2, x2};
    }
    return top;
  };

  if (box.size() == 1) {
    const auto [lo, hi] = box[0];
    const int n = grid_points;
    Vec coords(1);
    int best_i = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      coords[0] = lo + (hi - lo) * double(i) / double(n - 1);
      const double v = eval_at(coords);
      if (v > best_v) {
        best_v = v;
        best_i = i;
      }
    }
    const double cell = (hi - lo) / double(n - 1);
    const double a = std::max(lo, lo + cell * (best_i - 1));
    const double b = std::min(hi, lo + cell * (best_i + 1));
    golden_axis(coords, 0, a, b);
    return best;
  }

  // two axes: cross grid capped per axis, then coordinate refinement sweeps
  const int n = std::min(grid_points, 257);
  Vec coords(2), best_c(2);
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    coords[0] = box[0].first + (box[0].second - box[0].first) * double(i) / double(n - 1);
    for (int j = 0; j < n; ++j) {
      coords[1] = box[1].first + (box[1].second - box[1].first) * double(j) / double(n - 1);
      const double v = eval_at(coords);
      if (v > best_v) {
        best_v = v;
        best_c = coords;
      }
    }
  }
  for (int cycle = 0; cycle < 3; ++cycle) {
    for (int axis = 0; axis < 2; ++axis) {
      const double cell = (box[axis].second - box[axis].first) / double(n - 1);
      const double a = std::max(box[axis].first, best_c[axis] - cell);
      const double b = std::min(box[axis].second, best_c[axis] + cell);
      const auto [v, c] = golden_axis(best_c, axis, a, b);
      if (v > best_v) {
        best_v = v;
        best_c[axis] = c;
      }
    }
  }
  return best;
}

// ------------------------------------------------------------- kernels

Mat gaussian_gram(const Mat& A, const Mat& B, double bandwidth) {
  const Vec an = A.rowwise().squaredNorm();
  const Vec bn = B.rowwise().squaredNorm();
  Mat sq = (-2.0 * A * B.transpose()).colwise() + an;
  sq = sq.rowwise() + bn.transpose();
  return (-sq.array().max(0.0) / (2.0 * bandwidth * bandwidth)).exp().matrix();
}

// ------------------------------------------------------------ LP cores

double transport_lp_value(const Mat& cost, const Vec& a, const Vec& b) {
  const int n = int(cost.rows()), m = int(cost.cols());
  numerics::LpProblem p = numerics::LpProblem::sized(n * m, n + m);
  p.maximize = false;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < m; ++k) p.objective[j * m + k] = cost(j, k);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < m; ++k) p.constraints(j, j * m + k) = 1.0;
    p.senses[j] = numerics::Sense::eq;
    p.rhs[j] = a[j];
  }
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < n; ++j) p.constraints(n + k, j * m + k) = 1.0;
    p.senses[n + k] = numerics::Sense::eq;
    p.rhs[n + k] = b[k];
  }
  const numerics::LpSolution sol = numerics::solve_lp(p);
  if (sol.status != numerics::LpStatus::optimal)
    throw std::runtime_error("transport LP did not reach an optimum");
  return sol.value;
}

double pairwise_lp_value(const Mat& X, const Vec& cp, bool truncate) {
  const int n = int(X.rows());
  const int rows = n * (n - 1);
  numerics::LpProblem p = numerics::LpProblem::sized(n, rows);
  p.maximize = true;
  p.objective = cp;
  p.lower = Vec::Constant(n, -1.0);
  p.upper = Vec::Constant(n, 1.0);
  int r = 0;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      double d = (X.row(j) - X.row(k)).norm();
      if (truncate) d = std::min(d, 2.0);
      p.constraints(r, j) = 1.0;
      p.constraints(r, k) = -1.0;
      p.rhs[r] = d;
      ++r;
      p.constraints(r, j) = -1.0;
      p.constraints(r, k) = 1.0;
      p.rhs[r] = d;
      ++r;
    }
  const numerics::LpSolution sol = numerics::solve_lp(p);
  if (sol.status != numerics::LpStatus::optimal)
    throw std::runtime_error("function-value LP did not reach an optimum");
  return sol.value;
}

void check_lp_scale(const EmpiricalMeasure& P, const EmpiricalMeasure& Q) {
  check_probability_weights(P, "first measure");
  check_probability_weights(Q, "second measure");
  if (P.dim() != Q.dim()) throw UsageError("measures live in different dimensions");
  const int total = P.size() + Q.size();
  if (total > 400)
    throw ScaleError("combined support of " + std::to_string(total) +
                     " points exceeds the 400-point LP cap");
}

double sample_variance(const Vec& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / double(v.size() - 1);
}

}  // namespace

std::string semantics_name(Semantics s) {
  switch (s) {
    case Semantics::exact: return "exact";
    case Semantics::lower_bound: return "lower_bound";
    case Semantics::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (restarts < 1 || steps < 1) throw UsageError("optimizer restarts and steps must be >= 1");
  if (!(step_size > 0.0)) throw UsageError("optimizer step size must be positive");
}

AscentOutcome maximize_weighted_sum(const Family& fam, const Mat& X, const Vec& coeff,
                                    const OptimizerConfig& cfg, bool score_abs, int stream_base) {
  cfg.validate();
  if (X.rows() != coeff.size()) throw UsageError("coefficient count must match the row count");
  const WeightedSum obj{fam, X, coeff};
  Best best;
  if (score_abs) {
    best = run_restarts(fam, cfg, stream_base, /*twin=*/true, obj,
                        [](double v) { return std::abs(v); });
  } else {
    best = run_restarts(fam, cfg, stream_base, /*twin=*/false, obj, [](double v) { return v; });
  }
  return {best.value, best.params};
}

MetricEstimate neural_distance(const EmpiricalMeasure& P, const EmpiricalMeasure& Q,
                               const Family& fam, const OptimizerConfig& cfg) {
  check_same_dim(P, Q, fam);
  cfg.validate();
  const Mat X = stack_support(P, Q);
  const SplitWeightedSum obj(fam, X, P.weights, Q.weights);
  const Best best = run_restarts(fam, cfg, kDistanceStreams, /*twin=*/true, obj,
                                 [](double v) { return std::abs(v); });
  MetricEstimate e;
  e.value = best.value;
  e.kind = "neural_distance";
  e.semantics = Semantics::lower_bound;
  e.best_params = best.params;
  e.restarts = cfg.restarts;
  e.steps = cfg.steps;
  return e;
}

MetricEstimate neural_distance_exact(const EmpiricalMeasure& P, const EmpiricalMeasure& Q,
                                     const Family& fam, int grid_points) {
  check_same_dim(P, Q, fam);
  const Mat X = stack_support(P, Q);
  const SplitWeightedSum obj(fam, X, P.weights, Q.weights);
  const Best best =
      grid_maximize(fam, grid_points, [&](const Vec& t) { return std::abs(obj.value(t)); });
  MetricEstimate e;
  e.value = best.value;
  e.kind = "neural_distance";
  e.semantics = Semantics::exact;
  e.best_params = best.params;
  e.restarts = 1;
  e.steps = grid_points;
  return e;
}

MetricEstimate mmd(const EmpiricalMeasure& X, const EmpiricalMeasure& Y, double bandwidth,
                   bool unbiased) {
  check_probability_weights(X, "first measure");
  check_probability_weights(Y, "second measure");
  if (X.dim() != Y.dim()) throw UsageError("measures live in different dimensions");
  if (!(bandwidth > 0.0)) throw UsageError("kernel bandwidth must be positive");

  const Mat kxx = gaussian_gram(X.points, X.points, bandwidth);
  const Mat kyy = gaussian_gram(Y.points, Y.points, bandwidth);
  const Mat kxy = gaussian_gram(X.points, Y.points, bandwidth);
  const Vec& w = X.weights;
  const Vec& u = Y.weights;
  const double cross = w.dot(kxy * u);

  MetricEstimate e;
  e.kind = "mmd";
  e.semantics = Semantics::exact;
  if (!unbiased) {
    const double m2 = w.dot(kxx * w) - 2.0 * cross + u.dot(kyy * u);
    e.value = std::sqrt(std::max(0.0, m2));  // negative only by roundoff
    return e;
  }
  if (X.size() < 2 || Y.size() < 2)
    throw UsageError("the unbiased mmd estimate needs at least two points per side");
  // U-statistic: drop the diagonal; k(x, x) = 1 for the Gaussian kernel
  const double wsq = w.squaredNorm(), usq = u.squaredNorm();
  const double sxx = (w.dot(kxx * w) - wsq) / (1.0 - wsq);
  const double syy = (u.dot(kyy * u) - usq) / (1.0 - usq);
  const double m2 = sxx + syy - 2.0 * cross;
  e.value = m2 >= 0.0 ? std::sqrt(m2) : -std::sqrt(-m2);
  return e;
}

MetricEstimate bl_distance(const EmpiricalMeasure& P, const EmpiricalMeasure& Q,
                           int dense_crossover) {
  check_lp_scale(P, Q);
  MetricEstimate e;
  e.kind = "bl_distance";
  e.semantics = Semantics::exact;
  if (P.size() + Q.size() <= dense_crossover) {
    const Mat X = stack_support(P, Q);
    Vec cp(X.rows());
    cp.head(P.size()) = P.weights;
    cp.tail(Q.size()) = -Q.weights;
    e.value = pairwise_lp_value(X, cp, /*truncate=*/false);
    return e;
  }
  // Equivalent transport form: for probability measures, the BL ball
  // constraint set equals { |f_j - f_k| <= min(d_jk, 2) } up to a constant
  // shift, and the LP dual of that is transport with the truncated cost.
  Mat cost(P.size(), Q.size());
  for (int j = 0; j < P.size(); ++j)
    for (int k = 0; k < Q.size(); ++k)
      cost(j, k) = std::min((P.points.row(j) - Q.points.row(k)).norm(), 2.0);
  e.value = transport_lp_value(cost, P.weights, Q.weights);
  return e;
}

MetricEstimate w1_distance(const EmpiricalMeasure& P, const EmpiricalMeasure& Q) {
  check_lp_scale(P, Q);
  Mat cost(P.size(), Q.size());
  for (int j = 0; j < P.size(); ++j)
    for (int k = 0; k < Q.size(); ++k)
      cost(j, k) = (P.points.row(j) - Q.points.row(k)).norm();
  MetricEstimate e;
  e.kind = "w1_distance";
  e.semantics = Semantics::exact;
  e.value = transport_lp_value(cost, P.weights, Q.weights);
  return e;
}

MetricEstimate symmetric_kl(const measures::GenerativeModel& mu,
                            const measures::GenerativeModel& nu, int n, RngStream& rng) {
  if (n < 2) throw UsageError("symmetric_kl needs at least two draws per side");
  const Mat xs = measures::model_sample_n(mu, n, rng);
  const Mat ys = measures::model_sample_n(nu, n, rng);
  const Vec t = measures::model_log_density_batch(mu, xs) -
                measures::model_log_density_batch(nu, xs);
  const Vec s = measures::model_log_density_batch(mu, ys) -
                measures::model_log_density_batch(nu, ys);
  MetricEstimate e;
  e.kind = "symmetric_kl";
  e.semantics = Semantics::monte_carlo;
  e.value = t.mean() - s.mean();
  e.standard_error = std::sqrt((sample_variance(t) + sample_variance(s)) / double(n));
  return e;
}

double kl_gaussian_closed(const measures::GaussianModel& mu, const measures::GaussianModel& nu) {
  const Eigen::Matrix2d a0 = mu.transform();
  const Eigen::Matrix2d a1 = nu.transform();
  // both factors are lower triangular with positive diagonal
  const Eigen::Matrix2d m = a1.triangularView<Eigen::Lower>().solve(a0);
  const Eigen::Vector2d shift =
      a1.triangularView<Eigen::Lower>().solve(Eigen::Vector2d(mu.bias - nu.bias));
  return 0.5 * (m.squaredNorm() + shift.squaredNorm() - 2.0 + nu.log_det_cov() -
                mu.log_det_cov());
}

namespace {

// value and gradient of the penalized objective
//   E_P[g] - E_Q[g] - E_Q[psi*(g)]   with g = sigma(f_theta)
struct PenalizedSum {
  const families::WrappedFamily& fam;
  const Mat& X;  // P rows first, then Q rows
  const Vec& pw;
  const Vec& qw;

  double value_coeff(const Vec& theta, Vec* coeff) const {
    const ConjugatePair& pair = fam.pair();
    const Vec g = fam.eval_batch(theta, X);
    const int np = int(pw.size());
    if (std::isfinite(pair.domain_hi) && (g.array() >= pair.domain_hi).any())
      throw DomainViolation("activation output reached the boundary of dom(psi*) for pair '" +
                            pair.name + "'; the activation does not map into the conjugate domain");
    double v = 0.0;
    if (coeff) coeff->resize(g.size());
    for (int i = 0; i < np; ++i) {
      v += pw[i] * g[i];
      if (coeff) (*coeff)[i] = pw[i];
    }
    for (int j = 0; j < int(qw.size()); ++j) {
      const double gj = g[np + j];
      const double pen = pair.psi_star(gj);
      if (!std::isfinite(pen))
        throw DomainViolation("psi* is not finite at an activation output for pair '" +
                              pair.name + "'");
      v -= qw[j] * (gj + pen);
      if (coeff) (*coeff)[np + j] = -qw[j] * (1.0 + pair.psi_star_prime(gj));
    }
    return v;
  }

  double value(const Vec& theta) const { return value_coeff(theta, nullptr); }
  Vec grad(const Vec& theta) const {
    Vec coeff;
    value_coeff(theta, &coeff);
    return fam.grad_params(theta, X, coeff);
  }
};

}  // namespace

MetricEstimate neural_f_divergence(const EmpiricalMeasure& P, const EmpiricalMeasure& Q,
                                   const families::WrappedFamily& fam,
                                   const OptimizerConfig& cfg) {
  check_same_dim(P, Q, fam);
  cfg.validate();
  const Mat X = stack_support(P, Q);
  const PenalizedSum obj{fam, X, P.weights, Q.weights};

  OptimizerConfig inner = cfg;
  inner.extra_candidates.push_back(fam.zero_critic_params());  // scores exactly 0
  const Best best = run_restarts(fam, inner, kDivergenceStreams, /*twin=*/false, obj,
                                 [](double v) { return v; });
  MetricEstimate e;
  e.value = best.value;
  e.kind = "neural_f_divergence";
  e.semantics = Semantics::lower_bound;
  e.best_params = best.params;
  e.restarts = cfg.restarts;
  e.steps = cfg.steps;
  return e;
}

MetricEstimate neural_f_divergence_exact(const EmpiricalMeasure& P, const EmpiricalMeasure& Q,
                                         const families::WrappedFamily& fam, int grid_points) {
  check_same_dim(P, Q, fam);
  const Mat X = stack_support(P, Q);
  const PenalizedSum obj{fam, X, P.weights, Q.weights};
  Best best = grid_maximize(fam, grid_points, [&](const Vec& t) { return obj.value(t); });
  const Vec zero = fam.zero_critic_params();
  best.offer(obj.value(zero), zero);
  MetricEstimate e;
  e.value = best.value;
  e.kind = "neural_f_divergence";
  e.semantics = Semantics::exact;
  e.best_params = best.params;
  e.restarts = 1;
  e.steps = grid_points;
  return e;
}

}  // namespace ipmlab::metrics
