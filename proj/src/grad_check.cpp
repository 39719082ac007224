#include "ipmlab/grad_check.hpp"

#include <cmath>

namespace ipmlab::numerics {

GradCheckReport grad_check(const std::function<double(const Vec&)>& value,
                           const std::function<Vec(const Vec&)>& gradient,
                           const Vec& theta, double h) {
  const int p = int(theta.size());
  GradCheckReport rep;
  rep.analytic = gradient(theta);
  rep.numeric = Vec(p);
  rep.per_coord_rel_error = Vec(p);

  Vec probe = theta;
  for (int i = 0; i < p; ++i) {
    const double t = theta[i];
    probe[i] = t + h;
    const double up = value(probe);
    probe[i] = t - h;
    const double dn = value(probe);
    probe[i] = t;
    rep.numeric[i] = (up - dn) / (2.0 * h);
    const double a = rep.analytic[i];
    rep.per_coord_rel_error[i] = std::abs(a - rep.numeric[i]) / std::max(1.0, std::abs(a));
  }
  rep.max_rel_error = p == 0 ? 0.0 : rep.per_coord_rel_error.maxCoeff();
  return rep;
}

}  // namespace ipmlab::numerics
