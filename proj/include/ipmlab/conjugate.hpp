#pragma once

#include <functional>
#include <limits>
#include <string>

namespace ipmlab::metrics {

// Shifted convex conjugate pair used by the variational divergence
// estimator, together with the output activation that maps an unconstrained
// critic output into the conjugate's domain.  psi_star is normalized so
// that psi_star(b0) = 0, which makes the constant-b0 critic score zero.
struct ConjugatePair {
  std::string name;
  double b0 = 0.0;
  double domain_hi = std::numeric_limits<double>::infinity();  // psi_star finite below this
  std::function<double(double)> psi_star;
  std::function<double(double)> psi_star_prime;
  std::function<double(double)> sigma;        // R -> dom(psi_star)
  std::function<double(double)> sigma_prime;
};

// Pearson chi^2: psi*(y) = y^2 / 4, domain all of R, identity activation.
ConjugatePair pearson_pair();

// Jensen-Shannon (normalized): psi*(y) = -y - log(2 - e^y) for y < log 2,
// activation sigma(v) = log 2 - log(1 + e^-v).
ConjugatePair js_pair();

ConjugatePair conjugate_pair_by_name(const std::string& name);

}  // namespace ipmlab::metrics
