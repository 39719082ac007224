#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipmlab/conjugate.hpp"
#include "ipmlab/families.hpp"
#include "ipmlab/gaussian.hpp"
#include "ipmlab/rng.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::metrics {

// How to read MetricEstimate::value.
//   exact       - the number is the quantity itself (up to LP/grid tolerance)
//   lower_bound - a certified lower bound from nonconvex inner maximization
//   monte_carlo - an unbiased sample estimate; standard_error is populated
enum class Semantics { exact, lower_bound, monte_carlo };

std::string semantics_name(Semantics s);

struct MetricEstimate {
  double value = 0.0;
  std::string kind;
  Semantics semantics = Semantics::exact;
  double standard_error = 0.0;
  Vec best_params;  // arg max for optimizer-backed estimates
  int restarts = 0;
  int steps = 0;
};

// Multi-restart projected-ascent schedule.  Restart r draws its starting
// point from stream (seed, base + r), so enlarging restarts or steps only
// adds candidates: estimates are monotone under nested budgets.
struct OptimizerConfig {
  int restarts = 10;
  int steps = 500;
  double step_size = 1e-2;
  bool rmsprop = true;  // false: constant step rule
  std::uint64_t seed = 0;
  // Evaluated alongside the ascent trajectories (projected first).  Lets a
  // caller carry candidates from a nested family into a larger one.
  std::vector<Vec> extra_candidates;

  void validate() const;  // throws UsageError on nonsense
};

struct AscentOutcome {
  double value = 0.0;
  Vec best_params;
};

// Maximizes sum_i coeff_i f_theta(x_i) over the family's parameter domain by
// projected gradient ascent.  Every restart runs one ascending and one
// descending trajectory from the same start; every iterate is scored and the
// running max kept, so the result is a certified lower bound of the true
// supremum over the sign-symmetrized family when score_abs is set (the score
// is then |sum|, i.e. the better of f and -f).
AscentOutcome maximize_weighted_sum(const families::Family& fam, const Mat& X, const Vec& coeff,
                                    const OptimizerConfig& cfg, bool score_abs, int stream_base);

// sup over the symmetrized family of  E_P f - E_Q f  (lower_bound semantics).
MetricEstimate neural_distance(const measures::EmpiricalMeasure& P,
                               const measures::EmpiricalMeasure& Q,
                               const families::Family& fam, const OptimizerConfig& cfg = {});

// Exhaustive grid search over families exposing a one- or two-axis search
// box, plus a golden-section refinement around the best cell.  Exact up to
// grid resolution; throws UsageError when the family has no such box.
// Two-axis boxes are gridded at no more than 257 points per axis.
MetricEstimate neural_distance_exact(const measures::EmpiricalMeasure& P,
                                     const measures::EmpiricalMeasure& Q,
                                     const families::Family& fam, int grid_points = 4001);

// Gaussian-kernel maximum mean discrepancy.  The default is the biased
// V-statistic sqrt(w'Kw - 2 w'Ku + u'Ku), the RKHS norm of the difference of
// kernel mean embeddings, hence nonnegative.  The unbiased flag switches to
// the U-statistic estimate of mmd^2 (diagonal removed); that estimate may be
// negative, in which case value = -sqrt(-estimate).
MetricEstimate mmd(const measures::EmpiricalMeasure& X, const measures::EmpiricalMeasure& Y,
                   double bandwidth, bool unbiased = false);

// Exact bounded-Lipschitz distance: sup of E_P f - E_Q f over |f| <= 1,
// Lip(f) <= 1, computed by LP on the combined support.  Small instances use
// the function-value LP directly; larger ones an equivalent transport
// program with cost min(|x - y|, 2) (equal value for probability measures).
// dense_crossover pins the switch point, mainly so tests can force either
// formulation.  Throws ScaleError when the combined support exceeds 400.
MetricEstimate bl_distance(const measures::EmpiricalMeasure& P,
                           const measures::EmpiricalMeasure& Q, int dense_crossover = 40);

// Exact Wasserstein-1 distance via the primal transport LP with Euclidean
// cost.  Same 400-point cap as bl_distance.
MetricEstimate w1_distance(const measures::EmpiricalMeasure& P,
                           const measures::EmpiricalMeasure& Q);

// Monte-Carlo estimate of KL(mu||nu) + KL(nu||mu) through the identity
//   E_mu[log(rho_mu/rho_nu)] - E_nu[log(rho_mu/rho_nu)],
// with n draws from each side; standard_error combines both sample means.
MetricEstimate symmetric_kl(const measures::GenerativeModel& mu,
                            const measures::GenerativeModel& nu, int n, RngStream& rng);

// Closed-form KL divergence between the two implied Gaussians.
double kl_gaussian_closed(const measures::GaussianModel& mu, const measures::GaussianModel& nu);

// Variational divergence estimate
//   sup_theta  E_P[g] - E_Q[g] - E_Q[psi*(g)],   g = sigma(f_theta),
// a lower bound that is always >= 0 because the identically-zero critic
// (whose activation output is the conjugate's zero b0) is always scored.
// Throws DomainViolation if an activation output ever reaches the conjugate
// domain boundary (a mismatched sigma/psi* combination).
MetricEstimate neural_f_divergence(const measures::EmpiricalMeasure& P,
                                   const measures::EmpiricalMeasure& Q,
                                   const families::WrappedFamily& fam,
                                   const OptimizerConfig& cfg = {});

// Grid-exact variant of neural_f_divergence over a one- or two-axis box.
MetricEstimate neural_f_divergence_exact(const measures::EmpiricalMeasure& P,
                                         const measures::EmpiricalMeasure& Q,
                                         const families::WrappedFamily& fam,
                                         int grid_points = 4001);

}  // namespace ipmlab::metrics
