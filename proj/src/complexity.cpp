#include "ipmlab/complexity.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "ipmlab/errors.hpp"
#include "ipmlab/parallel.hpp"

namespace ipmlab::complexity {

namespace {

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

RademacherEstimate empirical_rademacher(const families::Family& fam, const Mat& X, int trials,
                                        const metrics::OptimizerConfig& cfg) {
  if (trials < 1) throw UsageError("empirical_rademacher needs at least one trial");
  if (X.rows() < 1) throw UsageError("empty sample batch");
  if (X.cols() != fam.input_dim())
    throw UsageError("sample dimension does not match the family input dimension");
  cfg.validate();
  if (cfg.restarts > 1024) throw UsageError("restart streams are laid out 1024 apart");

  const int m = int(X.rows());
  RademacherEstimate est;
  est.trials = trials;
  est.trial_values.resize(size_t(trials));
  est.trial_params.resize(size_t(trials));
  parallel_for(trials, [&](int t) {
    RngStream signs(cfg.seed, 0x8000 + std::uint64_t(t));
    Vec coeff(m);
    for (int i = 0; i < m; ++i) coeff[i] = signs.sign() * 2.0 / double(m);
    const metrics::AscentOutcome out =
        metrics::maximize_weighted_sum(fam, X, coeff, cfg, /*score_abs=*/true,
                                       0x10000 + t * 1024);
    est.trial_values[size_t(t)] = out.value;
    est.trial_params[size_t(t)] = out.best_params;
  });
  est.value = sample_mean(est.trial_values);
  if (trials >= 2) {
    double ss = 0.0;
    for (double v : est.trial_values) ss += (v - est.value) * (v - est.value);
    est.standard_error = std::sqrt(ss / double(trials - 1) / double(trials));
  }
  return est;
}

RademacherKind rademacher_kind_by_name(const std::string& name) {
  if (name == "relu_neuron") return RademacherKind::relu_neuron;
  if (name == "rkhs") return RademacherKind::rkhs;
  if (name == "bounded_lipschitz") return RademacherKind::bounded_lipschitz;
  if (name == "total_variation") return RademacherKind::total_variation;
  throw UsageError("unknown complexity kind '" + name + "'");
}

std::string rademacher_kind_name(RademacherKind kind) {
  switch (kind) {
    case RademacherKind::relu_neuron: return "relu_neuron";
    case RademacherKind::rkhs: return "rkhs";
    case RademacherKind::bounded_lipschitz: return "bounded_lipschitz";
    case RademacherKind::total_variation: return "total_variation";
  }
  return "unknown";
}

double rademacher_bound_analytic(RademacherKind kind, int m, double param) {
  if (m < 1) throw UsageError("sample size must be >= 1");
  switch (kind) {
    case RademacherKind::relu_neuron:
      return 2.0 * std::sqrt(2.0) / std::sqrt(double(m));
    case RademacherKind::rkhs:
      if (!(param > 0.0)) throw UsageError("rkhs complexity needs a positive kernel bound C_k");
      return 2.0 * std::sqrt(param / double(m));
    case RademacherKind::bounded_lipschitz:
      if (!(param > 2.0))
        throw DomainViolation("the bounded-Lipschitz rate m^(-1/d) holds only for dimension d > 2");
      return std::pow(double(m), -1.0 / param);
    case RademacherKind::total_variation:
      return 2.0;
  }
  throw UsageError("unknown complexity kind");
}

SpectralComplexityReport spectral_complexity(const std::vector<SpectralLayer>& layers,
                                             int max_width) {
  if (layers.empty()) throw UsageError("spectral complexity needs at least one layer");
  if (max_width < 1) throw UsageError("maximum width must be >= 1");
  double logw = std::log(2.0 * double(max_width) * double(max_width));
  double prod = 1.0;
  double sum23 = 0.0;
  for (const SpectralLayer& l : layers) {
    if (!(l.spectral_bound > 0.0))
      throw DomainViolation("spectral bounds s_i must be positive");
    if (!(l.lipschitz > 0.0)) throw DomainViolation("layer Lipschitz constants must be positive");
    if (l.norm21_bound < 0.0) throw DomainViolation("(2,1)-norm bounds must be nonnegative");
    prod *= l.spectral_bound * l.lipschitz;
    sum23 += std::pow(l.norm21_bound / l.spectral_bound, 2.0 / 3.0);
  }
  SpectralComplexityReport rep;
  rep.layers = layers;
  rep.max_width = max_width;
  rep.value = std::sqrt(logw) * prod * std::pow(sum23, 1.5);
  return rep;
}

double spectral_rademacher_bound(double x_frobenius, double R, double m) {
  if (!(x_frobenius > 0.0) || !(R > 0.0) || !(m > 0.0))
    throw UsageError("spectral bound inputs must be positive");
  const double xr = x_frobenius * R;
  if (m < 3.0 * xr)
    throw DomainViolation(
        "spectral generalization bound requires sample size m >= 3 ||X||_F R; got m = " +
        std::to_string(m) + " against 3 ||X||_F R = " + std::to_string(3.0 * xr));
  return (24.0 * xr / m) * (1.0 + std::log(m / (3.0 * xr)));
}

std::vector<SpectralLayer> spectral_layers_of_mlp(const families::MlpFamily& fam,
                                                  const Vec& theta,
                                                  const std::vector<Mat>* references) {
  const int layers = fam.layer_count();
  if (references && int(references->size()) != layers)
    throw UsageError("need one reference matrix per layer");
  std::vector<SpectralLayer> out(static_cast<size_t>(layers));
  for (int i = 0; i < layers; ++i) {
    const Mat w = fam.weight(theta, i);
    SpectralLayer l;
    Eigen::JacobiSVD<Mat> svd(w);
    l.spectral_bound = svd.singularValues()[0];
    Mat diff = w;
    if (references) {
      const Mat& ref = (*references)[size_t(i)];
      if (ref.rows() != w.rows() || ref.cols() != w.cols())
        throw UsageError("reference matrix shape mismatch at layer " + std::to_string(i));
      diff -= ref;
    }
    // ||diff'||_{2,1} = sum over rows of diff of their euclidean norms
    l.norm21_bound = diff.rowwise().norm().sum();
    l.lipschitz = 1.0;
    out[size_t(i)] = l;
  }
  return out;
}

}  // namespace ipmlab::complexity
