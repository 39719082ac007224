#pragma once

#include <map>
#include <string>
#include <vector>

#include "ipmlab/gaussian.hpp"
#include "ipmlab/span.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::bounds {

// One evaluated generalization bound.  The four terms always sum to `total`,
// and `inputs` echoes every number that entered the formula, so a report can
// be recomputed from scratch and checked against itself.
struct BoundReport {
  std::string formula_tag;
  std::map<std::string, double> inputs;
  double rademacher_term = 0.0;     // complexity part, already composed
  double concentration_term = 0.0;  // deviation part at the given confidence
  double modeling_term = 0.0;       // best achievable loss inside the class
  double epsilon_term = 0.0;        // optimization slack as it enters the sum
  double total = 0.0;
  double confidence = 0.0;
  std::string note;
};

// modeling + 2 rademacher + 2 output_bound sqrt(2 log(1/delta) / m) + epsilon,
// valid for symmetric discriminator classes with |f| <= output_bound.
// Holds with probability 1 - delta over the m-sample.
BoundReport ipm_generalization_bound(double rademacher, double output_bound, double delta,
                                     int m, double epsilon, double modeling_error);

// Specialization to unit-ball relu discriminators on the unit ball:
// modeling + (4 sqrt(2) + 4 sqrt(log(1/delta))) / sqrt(m) + epsilon.
BoundReport relu_rate_bound(int m, double delta, double epsilon, double modeling_error);

// Parametric discriminators with p parameters in [-1, 1]^p, each f
// L-Lipschitz in its parameters and bounded by output_bound:
// modeling + (16 sqrt(2 pi) p L + 2 output_bound sqrt(2 log(1/delta))) / sqrt(m)
// + epsilon.
BoundReport parametric_rate_bound(int p, double lipschitz, double output_bound,
                                  double delta, int m, double epsilon,
                                  double modeling_error);

// Kernel discriminators in the unit RKHS ball of a kernel bounded by c_k:
// modeling + 2 (2 + sqrt(2 log(1/delta))) sqrt(c_k) / sqrt(m) + epsilon.
BoundReport mmd_rate_bound(double c_k, double delta, int m, double epsilon,
                           double modeling_error);

// KL control through a compatible discriminator span:
// lambda (2 rademacher + 2 output_bound sqrt(2 log(1/delta)/m)
//         + output_bound sqrt(inf_kl) + epsilon).
// Every reported term carries the outer lambda factor, so they sum to total;
// `inputs` keeps the raw values.
BoundReport kl_compatibility_bound(double lambda, double rademacher, double output_bound,
                                   double delta, int m, double epsilon, double inf_kl);

// Spectrally normalized networks: modeling
// + 48 x_frobenius R / m (1 + log(m / (3 x_frobenius R)))
// + 6 output_bound sqrt(2 log(2/delta) / m) + epsilon, for m >= 3 x_frobenius R.
BoundReport spectral_rate_bound(double x_frobenius, double spectral_complexity,
                                double output_bound, int m, double delta, double epsilon,
                                double modeling_error);

// Same arithmetic as ipm_generalization_bound, for asymmetric variational
// divergence objectives; the symmetrization step is unavailable there, so the
// result only holds with probability 1 - 2 delta and needs delta < 1/2.
BoundReport fdiv_generalization_bound(double rademacher, double output_bound, double delta,
                                      int m, double epsilon, double modeling_error);

// Rate skeleton linking a neural-distance bound to a bounded-Lipschitz one:
// neural_total^(1 / (alpha + (d + 1) / 2)) for width-alpha smoothness in
// dimension d.  Unit constant by design; correct only up to constants and
// logarithmic factors, so it never enters a BoundReport total.
double bl_rate_from_neural(double neural_total, int d, double alpha);

// Re-evaluates the tagged formula from the echoed inputs alone.  Written as
// literal expressions, independent of the builders above, so the two paths
// cross-check each other.
double recompute_total(const BoundReport& report);

// {formula_tag, inputs{...}, terms{...}, total, confidence[, note]}
std::string bound_report_json(const BoundReport& report);

// Largest minimal interpolation norm of the log-density ratios
// log(rho_generator / rho_truth) over the dictionary's anchor points.
struct CompatibilityReport {
  double lambda = 0.0;
  std::vector<double> norms;  // one per generator, same order
  std::vector<std::string> dictionary;
  bool exact = false;  // every anchor residual below 1e-9
};

// For Gaussian models the log-density ratio is an exact quadratic, so a
// quadratic monomial dictionary represents it exactly and the anchor LP
// computes the true minimal-weight decomposition.  Throws NotInSpanError
// when some ratio cannot be interpolated (for example a linear dictionary
// against unequal covariances); the KL bound is vacuous in that case.
CompatibilityReport compatibility_coefficient(const measures::GaussianModel& truth,
                                              const std::vector<measures::GaussianModel>& generators,
                                              const span::Dictionary& dict);

}  // namespace ipmlab::bounds
