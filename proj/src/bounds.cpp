#include "ipmlab/bounds.hpp"

#include <cmath>
#include <json.hpp>

#include "ipmlab/complexity.hpp"
#include "ipmlab/errors.hpp"

namespace ipmlab::bounds {

namespace {

void check_confidence(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw DomainViolation("confidence parameter delta must lie in (0, 1)");
}

void check_common(double output_bound, double delta, int m, double epsilon,
                  double modeling_error) {
  check_confidence(delta);
  if (!(output_bound > 0.0)) throw DomainViolation("output bound must be positive");
  if (m < 1) throw DomainViolation("sample size must be at least 1");
  if (!(epsilon >= 0.0)) throw DomainViolation("optimization slack must be nonnegative");
  if (!(modeling_error >= 0.0)) throw DomainViolation("modeling error must be nonnegative");
}

double deviation(double output_bound, double delta, int m) {
  return 2.0 * output_bound * std::sqrt(2.0 * std::log(1.0 / delta) / double(m));
}

double in(const BoundReport& r, const std::string& key) {
  const auto it = r.inputs.find(key);
  if (it == r.inputs.end())
    throw UsageError("bound report lacks the echoed input '" + key + "'");
  return it->second;
}

}  // namespace

BoundReport ipm_generalization_bound(double rademacher, double output_bound, double delta,
                                     int m, double epsilon, double modeling_error) {
  if (!(rademacher >= 0.0)) throw DomainViolation("rademacher term must be nonnegative");
  check_common(output_bound, delta, m, epsilon, modeling_error);

  BoundReport r;
  r.formula_tag = "ipm_generalization";
  r.inputs = {{"rademacher", rademacher}, {"output_bound", output_bound}, {"delta", delta},
              {"m", double(m)},           {"epsilon", epsilon},           {"modeling_error", modeling_error}};
  r.rademacher_term = 2.0 * rademacher;
  r.concentration_term = deviation(output_bound, delta, m);
  r.modeling_term = modeling_error;
  r.epsilon_term = epsilon;
  r.total = r.rademacher_term + r.concentration_term + r.modeling_term + r.epsilon_term;
  r.confidence = 1.0 - delta;
  return r;
}

BoundReport relu_rate_bound(int m, double delta, double epsilon, double modeling_error) {
  check_common(1.0, delta, m, epsilon, modeling_error);

  BoundReport r;
  r.formula_tag = "relu_rate";
  r.inputs = {{"m", double(m)}, {"delta", delta}, {"epsilon", epsilon},
              {"modeling_error", modeling_error}};
  const double root_m = std::sqrt(double(m));
  r.rademacher_term = 4.0 * std::sqrt(2.0) / root_m;
  r.concentration_term = 4.0 * std::sqrt(std::log(1.0 / delta)) / root_m;
  r.modeling_term = modeling_error;
  r.epsilon_term = epsilon;
  r.total = r.rademacher_term + r.concentration_term + r.modeling_term + r.epsilon_term;
  r.confidence = 1.0 - delta;
  return r;
}

BoundReport parametric_rate_bound(int p, double lipschitz, double output_bound,
                                  double delta, int m, double epsilon,
                                  double modeling_error) {
  if (p < 1) throw DomainViolation("parameter count must be at least 1");
  if (!(lipschitz > 0.0)) throw DomainViolation("parameter Lipschitz constant must be positive");
  check_common(output_bound, delta, m, epsilon, modeling_error);

  BoundReport r;
  r.formula_tag = "parametric_rate";
  r.inputs = {{"p", double(p)},           {"lipschitz", lipschitz}, {"output_bound", output_bound},
              {"delta", delta},           {"m", double(m)},         {"epsilon", epsilon},
              {"modeling_error", modeling_error}};
  const double root_m = std::sqrt(double(m));
  r.rademacher_term = 16.0 * std::sqrt(2.0 * M_PI) * double(p) * lipschitz / root_m;
  r.concentration_term =
      2.0 * output_bound * std::sqrt(2.0 * std::log(1.0 / delta)) / root_m;
  r.modeling_term = modeling_error;
  r.epsilon_term = epsilon;
  r.total = r.rademacher_term + r.concentration_term + r.modeling_term + r.epsilon_term;
  r.confidence = 1.0 - delta;
  return r;
}

BoundReport mmd_rate_bound(double c_k, double delta, int m, double epsilon,
                           double modeling_error) {
  if (!(c_k > 0.0)) throw DomainViolation("kernel bound c_k must be positive");
  check_common(1.0, delta, m, epsilon, modeling_error);

  BoundReport r;
  r.formula_tag = "mmd_rate";
  r.inputs = {{"c_k", c_k}, {"delta", delta}, {"m", double(m)}, {"epsilon", epsilon},
              {"modeling_error", modeling_error}};
  const double root_m = std::sqrt(double(m));
  r.rademacher_term = 4.0 * std::sqrt(c_k) / root_m;
  r.concentration_term = 2.0 * std::sqrt(2.0 * std::log(1.0 / delta)) * std::sqrt(c_k) / root_m;
  r.modeling_term = modeling_error;
  r.epsilon_term = epsilon;
  r.total = r.rademacher_term + r.concentration_term + r.modeling_term + r.epsilon_term;
  r.confidence = 1.0 - delta;
  return r;
}

BoundReport kl_compatibility_bound(double lambda, double rademacher, double output_bound,
                                   double delta, int m, double epsilon, double inf_kl) {
  if (!(lambda >= 0.0)) throw DomainViolation("compatibility coefficient must be nonnegative");
  if (!(rademacher >= 0.0)) throw DomainViolation("rademacher term must be nonnegative");
  if (!(inf_kl >= 0.0)) throw DomainViolation("best achievable KL must be nonnegative");
  check_common(output_bound, delta, m, epsilon, 0.0);

  BoundReport r;
  r.formula_tag = "kl_compatibility";
  r.inputs = {{"lambda", lambda}, {"rademacher", rademacher}, {"output_bound", output_bound},
              {"delta", delta},   {"m", double(m)},           {"epsilon", epsilon},
              {"inf_kl", inf_kl}};
  r.rademacher_term = lambda * 2.0 * rademacher;
  r.concentration_term = lambda * deviation(output_bound, delta, m);
  r.modeling_term = lambda * output_bound * std::sqrt(inf_kl);
  r.epsilon_term = lambda * epsilon;
  r.total = r.rademacher_term + r.concentration_term + r.modeling_term + r.epsilon_term;
  r.confidence = 1.0 - delta;
  r.note = "all four terms carry the outer compatibility factor";
  return r;
}

BoundReport spectral_rate_bound(double x_frobenius, double spectral_complexity,
                                double output_bound, int m, double delta, double epsilon,
                                double modeling_error) {
  if (!(x_frobenius > 0.0)) throw DomainViolation("sample Frobenius norm must be positive");
  if (!(spectral_complexity > 0.0))
    throw DomainViolation("spectral complexity must be positive");
  if (!(output_bound >= 0.0)) throw DomainViolation("output bound must be nonnegative");
  check_confidence(delta);
  if (m < 1) throw DomainViolation("sample size must be at least 1");
  if (!(epsilon >= 0.0)) throw DomainViolation("optimization slack must be nonnegative");
  if (!(modeling_error >= 0.0)) throw DomainViolation("modeling error must be nonnegative");

  BoundReport r;
  r.formula_tag = "spectral_rate";
  r.inputs = {{"x_frobenius", x_frobenius}, {"spectral_complexity", spectral_complexity},
              {"output_bound", output_bound}, {"m", double(m)},
              {"delta", delta}, {"epsilon", epsilon}, {"modeling_error", modeling_error}};
  // raises DomainViolation when m < 3 x_frobenius R, naming the condition
  r.rademacher_term =
      2.0 * complexity::spectral_rademacher_bound(x_frobenius, spectral_complexity, double(m));
  r.concentration_term =
      6.0 * output_bound * std::sqrt(2.0 * std::log(2.0 / delta) / double(m));
  r.modeling_term = modeling_error;
  r.epsilon_term = epsilon;
  r.total = r.rademacher_term + r.concentration_term + r.modeling_term + r.epsilon_term;
  r.confidence = 1.0 - delta;
  return r;
}

BoundReport fdiv_generalization_bound(double rademacher, double output_bound, double delta,
                                      int m, double epsilon, double modeling_error) {
  if (!(delta < 0.5))
    throw DomainViolation("asymmetric objectives double the failure probability; need delta < 1/2");
  BoundReport r = ipm_generalization_bound(rademacher, output_bound, delta, m, epsilon,
                                           modeling_error);
  r.formula_tag = "fdiv_generalization";
  r.confidence = 1.0 - 2.0 * delta;
  r.note = "asymmetric class: failure probability doubles";
  return r;
}

double bl_rate_from_neural(double neural_total, int d, double alpha) {
  if (!(neural_total >= 0.0)) throw DomainViolation("bound value must be nonnegative");
  if (d < 1) throw DomainViolation("dimension must be at least 1");
  if (!(alpha >= 1.0)) throw DomainViolation("smoothness index must be at least 1");
  return std::pow(neural_total, 1.0 / (alpha + (double(d) + 1.0) / 2.0));
}

double recompute_total(const BoundReport& r) {
  const std::string& tag = r.formula_tag;
  if (tag == "ipm_generalization" || tag == "fdiv_generalization") {
    return in(r, "modeling_error") + 2.0 * in(r, "rademacher") +
           2.0 * in(r, "output_bound") *
               std::sqrt(2.0 * std::log(1.0 / in(r, "delta")) / in(r, "m")) +
           in(r, "epsilon");
  }
  if (tag == "relu_rate") {
    const double c = 4.0 * std::sqrt(2.0) + 4.0 * std::sqrt(std::log(1.0 / in(r, "delta")));
    return in(r, "modeling_error") + c / std::sqrt(in(r, "m")) + in(r, "epsilon");
  }
  if (tag == "parametric_rate") {
    const double c = 16.0 * std::sqrt(2.0 * M_PI) * in(r, "p") * in(r, "lipschitz") +
                     2.0 * in(r, "output_bound") *
                         std::sqrt(2.0 * std::log(1.0 / in(r, "delta")));
    return in(r, "modeling_error") + c / std::sqrt(in(r, "m")) + in(r, "epsilon");
  }
  if (tag == "mmd_rate") {
    const double c = 2.0 * (2.0 + std::sqrt(2.0 * std::log(1.0 / in(r, "delta")))) *
                     std::sqrt(in(r, "c_k"));
    return in(r, "modeling_error") + c / std::sqrt(in(r, "m")) + in(r, "epsilon");
  }
  if (tag == "kl_compatibility") {
    return in(r, "lambda") *
           (2.0 * in(r, "rademacher") +
            2.0 * in(r, "output_bound") *
                std::sqrt(2.0 * std::log(1.0 / in(r, "delta")) / in(r, "m")) +
            in(r, "output_bound") * std::sqrt(in(r, "inf_kl")) + in(r, "epsilon"));
  }
  if (tag == "spectral_rate") {
    const double xr = in(r, "x_frobenius") * in(r, "spectral_complexity");
    const double m = in(r, "m");
    return in(r, "modeling_error") +
           48.0 * xr / m * (1.0 + std::log(m / (3.0 * xr))) +
           6.0 * in(r, "output_bound") *
               std::sqrt(2.0 * std::log(2.0 / in(r, "delta")) / m) +
           in(r, "epsilon");
  }
  throw UsageError("unknown formula tag '" + tag + "'");
}

std::string bound_report_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["formula_tag"] = r.formula_tag;
  j["inputs"] = r.inputs;
  j["terms"] = {{"rademacher", r.rademacher_term},
                {"concentration", r.concentration_term},
                {"modeling", r.modeling_term},
                {"epsilon", r.epsilon_term}};
  j["total"] = r.total;
  j["confidence"] = r.confidence;
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump(2);
}

CompatibilityReport compatibility_coefficient(const measures::GaussianModel& truth,
                                              const std::vector<measures::GaussianModel>& generators,
                                              const span::Dictionary& dict) {
  if (generators.empty()) throw UsageError("no generators supplied");
  if (dict.eval_points.cols() != 2)
    throw UsageError("Gaussian compatibility needs a 2-d dictionary grid");

  const Vec truth_logp = truth.log_density_batch(dict.eval_points);

  CompatibilityReport rep;
  rep.dictionary = dict.member_names;
  rep.exact = true;
  for (const auto& gen : generators) {
    const Vec ratio = dict.anchor_slice(gen.log_density_batch(dict.eval_points) - truth_logp);
    span::DecompositionResult dec;
    try {
      dec = span::f_variation_norm(ratio, dict);
    } catch (const NotInSpanError&) {
      throw NotInSpanError(
          "a generator's log-density ratio is outside the dictionary span; "
          "the compatibility bound is vacuous");
    }
    rep.norms.push_back(dec.norm);
    rep.lambda = std::max(rep.lambda, dec.norm);
    rep.exact = rep.exact && dec.anchor_residual < 1e-9;
  }
  return rep;
}

}  // namespace ipmlab::bounds
