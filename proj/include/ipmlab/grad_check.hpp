#pragma once

#include <functional>

#include "ipmlab/types.hpp"

namespace ipmlab::numerics {

struct GradCheckReport {
  double max_rel_error = 0.0;
  Vec per_coord_rel_error;
  Vec analytic;
  Vec numeric;
  // set when the probe point hugs a domain edge, where central differences
  // straddle a kink or a projection boundary and the comparison is suspect
  bool boundary_warning = false;
};

// Central differences with step h against the supplied analytic gradient.
// Relative error per coordinate is |a - n| / max(1, |a|).
GradCheckReport grad_check(const std::function<double(const Vec&)>& value,
                           const std::function<Vec(const Vec&)>& gradient,
                           const Vec& theta, double h = 1e-5);

}  // namespace ipmlab::numerics
