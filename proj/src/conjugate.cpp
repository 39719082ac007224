#include "ipmlab/conjugate.hpp"

#include <cmath>

#include "ipmlab/errors.hpp"

namespace ipmlab::metrics {

ConjugatePair pearson_pair() {
  ConjugatePair p;
  p.name = "pearson_chi2";
  p.b0 = 0.0;
  p.psi_star = [](double y) { return 0.25 * y * y; };
  p.psi_star_prime = [](double y) { return 0.5 * y; };
  p.sigma = [](double v) { return v; };
  p.sigma_prime = [](double) { return 1.0; };
  return p;
}

ConjugatePair js_pair() {
  ConjugatePair p;
  p.name = "js";
  p.b0 = 0.0;
  p.domain_hi = std::log(2.0);
  p.psi_star = [](double y) { return -y - std::log(2.0 - std::exp(y)); };
  p.psi_star_prime = [](double y) {
    const double e = std::exp(y);
    return -1.0 + e / (2.0 - e);
  };
  // log 2 - log(1 + e^-v), evaluated on the stable branch
  p.sigma = [](double v) {
    if (v >= 0.0) return std::log(2.0) - std::log1p(std::exp(-v));
    return std::log(2.0) + v - std::log1p(std::exp(v));
  };
  p.sigma_prime = [](double v) {
    if (v >= 0.0) {
      const double e = std::exp(-v);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(v));
  };
  return p;
}

ConjugatePair conjugate_pair_by_name(const std::string& name) {
  if (name == "pearson_chi2" || name == "pearson") return pearson_pair();
  if (name == "js") return js_pair();
  throw UsageError("conjugate_pair_by_name: unknown pair '" + name + "'");
}

}  // namespace ipmlab::metrics
