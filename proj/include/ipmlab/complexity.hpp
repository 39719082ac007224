#pragma once

#include <string>
#include <vector>

#include "ipmlab/families.hpp"
#include "ipmlab/metrics.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::complexity {

// Monte-Carlo estimate of the sign-symmetrized complexity
//   E_tau sup_f (2/m) sum_i tau_i f(x_i),
// built from per-trial inner maximizations.  Each trial's inner max is a
// lower bound (nonconvex ascent), so the aggregate should only ever be
// compared against analytic upper bounds in the <= direction.
struct RademacherEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  int trials = 0;
  std::vector<double> trial_values;  // per-trial inner maxima
  std::vector<Vec> trial_params;     // per-trial winning parameters
};

// Per trial t, signs come from stream (cfg.seed, 0x8000 + t) and the inner
// restarts from streams (cfg.seed, 0x10000 + 1024 t + r); restarts are
// therefore capped at 1024.  cfg.extra_candidates are scored in every trial.
RademacherEstimate empirical_rademacher(const families::Family& fam, const Mat& X, int trials,
                                        const metrics::OptimizerConfig& cfg);

enum class RademacherKind { relu_neuron, rkhs, bounded_lipschitz, total_variation };

RademacherKind rademacher_kind_by_name(const std::string& name);
std::string rademacher_kind_name(RademacherKind kind);

// Closed-form complexity constants:
//   relu_neuron        2 sqrt(2) / sqrt(m)
//   rkhs               2 sqrt(C_k / m)          (param = C_k > 0)
//   bounded_lipschitz  m^(-1/d) for d > 2       (param = d)
//   total_variation    2
double rademacher_bound_analytic(RademacherKind kind, int m, double param = 0.0);

struct SpectralLayer {
  double spectral_bound = 1.0;  // s_i >= spectral norm of the layer matrix
  double norm21_bound = 0.0;    // b_i >= ||(A_i - M_i)'||_{2,1}
  double lipschitz = 1.0;       // rho_i of the layer nonlinearity
};

struct SpectralComplexityReport {
  std::vector<SpectralLayer> layers;
  int max_width = 1;
  double value = 0.0;  // R
};

// R = sqrt(log(2 W^2)) * prod_j s_j rho_j * (sum_i (b_i/s_i)^(2/3))^(3/2).
// Throws DomainViolation for nonpositive s_i or rho_i, negative b_i;
// UsageError for an empty layer list or W < 1.
SpectralComplexityReport spectral_complexity(const std::vector<SpectralLayer>& layers,
                                             int max_width);

// (24 x R / m) (1 + log(m / (3 x R))), valid once m >= 3 x R where
// x = ||X||_F; below that the bound does not hold and DomainViolation is
// raised naming the condition.
double spectral_rademacher_bound(double x_frobenius, double R, double m);

// Reads the layer description off an MLP at the given parameters: s_i is the
// exact spectral norm of layer i's weight matrix, b_i the (2,1)-norm of its
// transpose measured against the optional reference matrices (zero when
// absent), rho_i = 1 for every layer.
std::vector<SpectralLayer> spectral_layers_of_mlp(const families::MlpFamily& fam,
                                                  const Vec& theta,
                                                  const std::vector<Mat>* references = nullptr);

}  // namespace ipmlab::complexity
