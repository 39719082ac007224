#include "ipmlab/gaussian.hpp"

#include <cmath>

#include "ipmlab/errors.hpp"

namespace ipmlab::measures {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Eigen::Matrix2d GaussianModel::transform() const {
  const double e1 = std::exp(log_scale[0]), e2 = std::exp(log_scale[1]);
  Eigen::Matrix2d a;
  a << e1, 0.0, shear * e1, e2;
  return a;
}

Eigen::Matrix2d GaussianModel::covariance() const {
  const Eigen::Matrix2d a = transform();
  return a * a.transpose();
}

Eigen::Vector2d GaussianModel::sample_given(const Eigen::Vector2d& z) const {
  return transform() * z + bias;
}

Eigen::Vector2d GaussianModel::sample(RngStream& rng) const {
  return sample_given({rng.normal(), rng.normal()});
}

Mat GaussianModel::sample_n(int n, RngStream& rng) const {
  Mat out(n, 2);
  for (int i = 0; i < n; ++i) out.row(i) = sample(rng).transpose();
  return out;
}

double GaussianModel::log_density(const Eigen::Vector2d& x) const {
  const double d1 = x[0] - bias[0], d2 = x[1] - bias[1];
  const double y1 = std::exp(-log_scale[0]) * d1;
  const double y2 = std::exp(-log_scale[1]) * (d2 - shear * d1);
  return -kLog2Pi - log_scale[0] - log_scale[1] - 0.5 * (y1 * y1 + y2 * y2);
}

Vec GaussianModel::log_density_batch(const Mat& X) const {
  Vec out(X.rows());
  for (int i = 0; i < X.rows(); ++i) out[i] = log_density(X.row(i).transpose());
  return out;
}

Vec GaussianModel::grad_log_density(const Eigen::Vector2d& x) const {
  const double inv1 = std::exp(-log_scale[0]), inv2 = std::exp(-log_scale[1]);
  const double d1 = x[0] - bias[0], d2 = x[1] - bias[1];
  const double y1 = inv1 * d1;
  const double y2 = inv2 * (d2 - shear * d1);
  Vec g(5);
  g[0] = y1 * y2 * std::exp(log_scale[0] - log_scale[1]);  // shear
  g[1] = y1 * y1 - 1.0;                                    // s1
  g[2] = y2 * y2 - 1.0;                                    // s2
  g[3] = inv1 * y1 - shear * inv2 * y2;                    // b1
  g[4] = inv2 * y2;                                        // b2
  return g;
}

Vec GaussianModel::params() const {
  Vec p(5);
  p << shear, log_scale[0], log_scale[1], bias[0], bias[1];
  return p;
}

GaussianModel GaussianModel::from_params(const Vec& p) {
  GaussianModel m;
  m.shear = p[0];
  m.log_scale << p[1], p[2];
  m.bias << p[3], p[4];
  return m;
}

GaussianModel gaussian_fit_mle(const Mat& X) {
  const int m = int(X.rows());
  if (m < 2 || X.cols() != 2) throw DegenerateDataError("gaussian_fit_mle: need >= 2 points in 2-d");
  const Eigen::Vector2d mean = X.colwise().mean().transpose();
  Mat centered = X.rowwise() - mean.transpose();
  const Eigen::Matrix2d s = (centered.transpose() * centered) / double(m);

  // lower-triangular factor matched against [[e^s1, 0], [l e^s1, e^s2]]
  if (s(0, 0) <= 1e-12) throw DegenerateDataError("gaussian_fit_mle: singular sample covariance");
  const double l11 = std::sqrt(s(0, 0));
  const double l21 = s(0, 1) / l11;
  const double rem = s(1, 1) - l21 * l21;
  if (rem <= 1e-12) throw DegenerateDataError("gaussian_fit_mle: singular sample covariance");

  GaussianModel g;
  g.shear = l21 / l11;
  g.log_scale << std::log(l11), 0.5 * std::log(rem);
  g.bias = mean;
  return g;
}

Eigen::Vector2d MixtureModel::sample(RngStream& rng) const {
  return comp[rng.index(8)].sample(rng);
}

Mat MixtureModel::sample_n(int n, RngStream& rng) const {
  Mat out(n, 2);
  for (int i = 0; i < n; ++i) out.row(i) = sample(rng).transpose();
  return out;
}

double MixtureModel::log_density(const Eigen::Vector2d& x) const {
  std::array<double, 8> ld;
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 8; ++k) {
    ld[k] = comp[k].log_density(x);
    mx = std::max(mx, ld[k]);
  }
  double acc = 0.0;
  for (int k = 0; k < 8; ++k) acc += std::exp(ld[k] - mx);
  return mx + std::log(acc) - std::log(8.0);
}

Vec MixtureModel::log_density_batch(const Mat& X) const {
  Vec out(X.rows());
  for (int i = 0; i < X.rows(); ++i) out[i] = log_density(X.row(i).transpose());
  return out;
}

Vec MixtureModel::grad_log_density(const Eigen::Vector2d& x) const {
  std::array<double, 8> ld;
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 8; ++k) {
    ld[k] = comp[k].log_density(x);
    mx = std::max(mx, ld[k]);
  }
  double acc = 0.0;
  std::array<double, 8> w;
  for (int k = 0; k < 8; ++k) {
    w[k] = std::exp(ld[k] - mx);
    acc += w[k];
  }
  Vec g(40);
  for (int k = 0; k < 8; ++k) g.segment(5 * k, 5) = (w[k] / acc) * comp[k].grad_log_density(x);
  return g;
}

Vec MixtureModel::params() const {
  Vec p(40);
  for (int k = 0; k < 8; ++k) p.segment(5 * k, 5) = comp[k].params();
  return p;
}

MixtureModel MixtureModel::from_params(const Vec& p) {
  MixtureModel m;
  for (int k = 0; k < 8; ++k) m.comp[k] = GaussianModel::from_params(p.segment(5 * k, 5));
  return m;
}

Mat model_sample_n(const GenerativeModel& m, int n, RngStream& rng) {
  return std::visit([&](const auto& g) { return g.sample_n(n, rng); }, m);
}

double model_log_density(const GenerativeModel& m, const Eigen::Vector2d& x) {
  return std::visit([&](const auto& g) { return g.log_density(x); }, m);
}

Vec model_log_density_batch(const GenerativeModel& m, const Mat& X) {
  return std::visit([&](const auto& g) { return g.log_density_batch(X); }, m);
}

Vec model_grad_log_density(const GenerativeModel& m, const Eigen::Vector2d& x) {
  return std::visit([&](const auto& g) { return g.grad_log_density(x); }, m);
}

Vec model_params(const GenerativeModel& m) {
  return std::visit([](const auto& g) { return g.params(); }, m);
}

GenerativeModel model_with_params(const GenerativeModel& proto, const Vec& p) {
  if (std::holds_alternative<GaussianModel>(proto)) {
    return GaussianModel::from_params(p);
  }
  return MixtureModel::from_params(p);
}

PathSample model_path_sample(const GenerativeModel& m, RngStream& rng) {
  PathSample s;
  if (const auto* g = std::get_if<GaussianModel>(&m)) {
    s.z << rng.normal(), rng.normal();
    s.component = 0;
    s.x = g->sample_given(s.z);
  } else {
    const auto& mix = std::get<MixtureModel>(m);
    s.component = rng.index(8);
    s.z << rng.normal(), rng.normal();
    s.x = mix.comp[s.component].sample_given(s.z);
  }
  return s;
}

EmpiricalMeasure EmpiricalMeasure::uniform(Mat pts) {
  EmpiricalMeasure e;
  const int n = int(pts.rows());
  if (n == 0) throw UsageError("EmpiricalMeasure: empty point set");
  e.points = std::move(pts);
  e.weights = Vec::Constant(n, 1.0 / n);
  return e;
}

DatasetSplit make_benchmark(const std::string& name, std::uint64_t seed) {
  GenerativeModel truth;
  if (name == "gaussian-e1") {
    GaussianModel g;
    g.shear = 15.0 / 17.0;
    g.log_scale << 0.5 * std::log(17.0 / 128.0), 0.5 * std::log(1.0 / 34.0);
    g.bias << 0.5, -0.5;
    truth = g;
  } else if (name == "mixture-e2") {
    MixtureModel mix;
    const double r = std::sqrt(2.0);
    for (int k = 0; k < 8; ++k) {
      const double ang = 2.0 * M_PI * k / 8.0;
      GaussianModel g;
      g.log_scale << std::log(0.01414), std::log(0.01414);
      g.bias << r * std::cos(ang), r * std::sin(ang);
      mix.comp[k] = g;
    }
    truth = mix;
  } else {
    throw UsageError("make_benchmark: unknown benchmark '" + name + "'");
  }

  RngStream train_rng(seed, 0), test_rng(seed, 1);
  DatasetSplit split;
  split.train = EmpiricalMeasure::uniform(model_sample_n(truth, 100000, train_rng));
  split.test = EmpiricalMeasure::uniform(model_sample_n(truth, 1000, test_rng));
  split.truth = truth;
  return split;
}

}  // namespace ipmlab::measures
