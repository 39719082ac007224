#include "ipmlab/families.hpp"

#include <cmath>
#include <limits>

#include "ipmlab/errors.hpp"

namespace ipmlab::families {

namespace {

using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMajorMat>;
using RowMap = Eigen::Map<RowMajorMat>;

// uniform point in the centered ball of the given radius
Vec ball_point(int d, double radius, RngStream& rng) {
  Vec x = rng.normal_vec(d);
  const double n = x.norm();
  if (n > 0) x /= n;
  return x * (radius * std::pow(rng.uniform(), 1.0 / d));
}

// certified-by-search parameter Lipschitz constant: max observed slope
// between random parameter pairs, inflated by 10%
double empirical_param_lipschitz(const Family& fam, double radius, int samples) {
  RngStream rng(0xf00dull, 17);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Vec a = fam.random_params(rng);
    Vec b = fam.random_params(rng);
    const double dist = (a - b).norm();
    if (dist < 1e-9) continue;
    Mat x(1, fam.input_dim());
    x.row(0) = ball_point(fam.input_dim(), radius, rng).transpose();
    const double fa = fam.eval_batch(a, x)[0], fb = fam.eval_batch(b, x)[0];
    best = std::max(best, std::abs(fa - fb) / dist);
  }
  return best * 1.1;
}

double empirical_output_bound(const Family& fam, double radius, int samples) {
  RngStream rng(0xf00dull, 18);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Vec t = fam.project(fam.random_params(rng));
    Mat x(1, fam.input_dim());
    x.row(0) = ball_point(fam.input_dim(), radius, rng).transpose();
    best = std::max(best, std::abs(fam.eval_batch(t, x)[0]));
  }
  return best * 1.1;
}

}  // namespace

BatchGrads Family::eval_with_grads(const Vec& theta, const Mat& X, const Vec& coeff) const {
  BatchGrads out;
  out.values = eval_batch(theta, X);
  out.param_grad = grad_params(theta, X, coeff);
  out.input_grad_weighted = grad_input_batch(theta, X);
  out.input_grad_weighted.array().colwise() *= coeff.array();
  return out;
}

double Family::kink_margin(const Vec&, const Mat&) const {
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- neuron

SingleNeuronFamily::SingleNeuronFamily(int input_dim, double input_radius)
    : d_(input_dim), radius_(input_radius) {
  if (input_dim < 1) throw UsageError("SingleNeuronFamily: input_dim must be >= 1");
  // |relu(v.[x;1])| <= ||v|| ||[x;1]|| <= sqrt(r^2 + 1), tight in v as well
  meta_.output_bound = std::sqrt(radius_ * radius_ + 1.0);
  meta_.param_lipschitz = meta_.output_bound;
  meta_.param_count = d_ + 1;
}

Vec SingleNeuronFamily::eval_batch(const Vec& theta, const Mat& X) const {
  Vec z = (X * theta.head(d_)).array() + theta[d_];
  return z.cwiseMax(0.0);
}

Vec SingleNeuronFamily::grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const {
  const Vec z = (X * theta.head(d_)).array() + theta[d_];
  const Vec w = (z.array() > 0.0).cast<double>() * coeff.array();
  Vec g(d_ + 1);
  g.head(d_) = X.transpose() * w;
  g[d_] = w.sum();
  return g;
}

Mat SingleNeuronFamily::grad_input_batch(const Vec& theta, const Mat& X) const {
  const Vec z = (X * theta.head(d_)).array() + theta[d_];
  const Vec mask = (z.array() > 0.0).cast<double>();
  return mask * theta.head(d_).transpose();
}

Vec SingleNeuronFamily::project(Vec theta) const {
  const double n = theta.norm();
  if (n < 1e-12) {
    theta.setZero();
    theta[d_] = 1.0;  // canonical unit vector for the zero input
    return theta;
  }
  return theta / n;
}

Vec SingleNeuronFamily::random_params(RngStream& rng) const {
  return project(rng.normal_vec(d_ + 1));
}

Vec SingleNeuronFamily::zero_critic_params() const {
  Vec t = Vec::Zero(d_ + 1);
  t[d_] = -1.0;
  return t;
}

double SingleNeuronFamily::kink_margin(const Vec& theta, const Mat& X) const {
  const Vec z = (X * theta.head(d_)).array() + theta[d_];
  return z.cwiseAbs().minCoeff();
}

std::vector<std::pair<double, double>> SingleNeuronFamily::grid_box() const {
  if (d_ != 1) return {};
  return {{0.0, 2.0 * M_PI}};  // angle on the unit circle in (v1, v2)
}

Vec SingleNeuronFamily::grid_to_params(const Vec& coords) const {
  Vec t(2);
  t << std::cos(coords[0]), std::sin(coords[0]);
  return t;
}

// ------------------------------------------------------------- quadratic

QuadraticFamily::QuadraticFamily(int input_dim, double clip, int degree, double input_radius)
    : d_(input_dim), degree_(degree), clip_(clip), radius_(input_radius) {
  if (degree != 1 && degree != 2) throw UsageError("QuadraticFamily: degree must be 1 or 2");
  if (clip < 0) throw UsageError("QuadraticFamily: clip must be nonnegative");
  const double r = radius_;
  // |x'Ax| <= clip (sum |x_i|)^2 <= clip d r^2 and |b.x| <= clip sqrt(d) r
  meta_.output_bound =
      degree_ == 2 ? clip_ * (d_ * r * r + std::sqrt(double(d_)) * r) : clip_ * std::sqrt(double(d_)) * r;
  meta_.param_lipschitz = degree_ == 2 ? std::sqrt(r * r * r * r + r * r) : r;
  meta_.param_count = param_count();
}

Eigen::MatrixXd QuadraticFamily::unpack_a(const Vec& theta) const {
  return ConstRowMap(theta.data(), d_, d_);
}

Vec QuadraticFamily::eval_batch(const Vec& theta, const Mat& X) const {
  if (degree_ == 1) return X * theta;
  const Mat a = unpack_a(theta);
  const Vec b = theta.tail(d_);
  return ((X * a.transpose()).cwiseProduct(X)).rowwise().sum() + X * b;
}

Vec QuadraticFamily::grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const {
  if (degree_ == 1) return X.transpose() * coeff;
  (void)theta;
  Vec g(param_count());
  const Mat ga = X.transpose() * coeff.asDiagonal() * X;  // d/dA_ij = sum_n c_n x_i x_j
  RowMap(g.data(), d_, d_) = ga;
  g.tail(d_) = X.transpose() * coeff;
  return g;
}

Mat QuadraticFamily::grad_input_batch(const Vec& theta, const Mat& X) const {
  if (degree_ == 1) return Vec::Ones(X.rows()) * theta.transpose();
  const Mat a = unpack_a(theta);
  const Vec b = theta.tail(d_);
  return X * (a + a.transpose()).transpose() + Vec::Ones(X.rows()) * b.transpose();
}

Vec QuadraticFamily::project(Vec theta) const {
  return theta.cwiseMax(-clip_).cwiseMin(clip_);
}

Vec QuadraticFamily::random_params(RngStream& rng) const {
  Vec t(param_count());
  for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform(-clip_, clip_);
  return t;
}

bool QuadraticFamily::strictly_interior(const Vec& theta, double margin) const {
  return theta.cwiseAbs().maxCoeff() <= clip_ - margin;
}

std::vector<std::pair<double, double>> QuadraticFamily::grid_box() const {
  if (param_count() > 2) return {};
  return std::vector<std::pair<double, double>>(param_count(), {-clip_, clip_});
}

// ------------------------------------------------------------------ mlp

struct MlpFamily::Forward {
  std::vector<Mat> acts;  // acts[i] feeds layer i; acts[0] = X
  std::vector<Mat> pre;   // pre[i] = acts[i] W_i' + b_i
};

MlpFamily::MlpFamily(int input_dim, std::vector<int> hidden, double clip, double input_radius)
    : d_(input_dim), hidden_(std::move(hidden)), clip_(clip), radius_(input_radius) {
  if (d_ < 1) throw UsageError("MlpFamily: input_dim must be >= 1");
  if (hidden_.empty()) throw UsageError("MlpFamily: need at least one hidden layer");
  if (!(clip_ > 0)) throw UsageError("MlpFamily: clip must be positive (may be infinite)");

  int in = d_;
  for (int h : hidden_) {
    if (h < 1) throw UsageError("MlpFamily: hidden width must be >= 1");
    shapes_.push_back({h, in});
    in = h;
  }
  shapes_.push_back({1, in});
  for (auto [out, inw] : shapes_) {
    w_offset_.push_back(total_params_);
    total_params_ += out * inw;
    b_offset_.push_back(total_params_);
    total_params_ += out;
  }

  meta_.param_count = total_params_;
  if (std::isfinite(clip_)) {
    // layer-by-layer norm recursion: ||W||_op <= clip sqrt(out in),
    // ||b|| <= clip sqrt(out); relu is non-expansive
    double a = radius_;
    for (size_t i = 0; i + 1 < shapes_.size(); ++i) {
      const auto [out, inw] = shapes_[i];
      a = clip_ * std::sqrt(double(out) * inw) * a + clip_ * std::sqrt(double(out));
    }
    meta_.output_bound = clip_ * std::sqrt(double(shapes_.back().second)) * a + clip_;
  } else {
    meta_.output_bound = empirical_output_bound(*this, radius_, 400);
    meta_.output_bound_empirical = true;
  }
  meta_.param_lipschitz = empirical_param_lipschitz(*this, radius_, 400);
  meta_.param_lipschitz_empirical = true;
}

std::string MlpFamily::name() const {
  return std::isfinite(clip_) ? "clipped_mlp" : "spectral_mlp";
}

Mat MlpFamily::weight(const Vec& theta, int i) const {
  const auto [out, in] = shapes_[i];
  return ConstRowMap(theta.data() + w_offset_[i], out, in);
}

void MlpFamily::run_forward(const Vec& theta, const Mat& X, Forward& fw) const {
  const int layers = int(shapes_.size());
  fw.acts.resize(layers);
  fw.pre.resize(layers);
  fw.acts[0] = X;
  for (int i = 0; i < layers; ++i) {
    const auto [out, in] = shapes_[i];
    ConstRowMap w(theta.data() + w_offset_[i], out, in);
    const auto b = theta.segment(b_offset_[i], out);
    fw.pre[i] = fw.acts[i] * w.transpose();
    fw.pre[i].rowwise() += b.transpose();
    if (i + 1 < layers) fw.acts[i + 1] = fw.pre[i].cwiseMax(0.0);
  }
}

void MlpFamily::run_backward(const Vec& theta, const Mat& X, const Vec& coeff, const Forward& fw,
                             Vec* param_grad, Mat* input_grad) const {
  (void)X;
  const int layers = int(shapes_.size());
  Mat delta = coeff;  // n x 1, gradient at the linear output
  if (param_grad) *param_grad = Vec::Zero(total_params_);
  for (int i = layers - 1; i >= 0; --i) {
    const auto [out, in] = shapes_[i];
    if (param_grad) {
      RowMap gw(param_grad->data() + w_offset_[i], out, in);
      gw = delta.transpose() * fw.acts[i];
      param_grad->segment(b_offset_[i], out) = delta.colwise().sum().transpose();
    }
    if (i > 0) {
      ConstRowMap w(theta.data() + w_offset_[i], out, in);
      delta = (delta * w).cwiseProduct((fw.pre[i - 1].array() > 0.0).cast<double>().matrix());
    } else if (input_grad) {
      ConstRowMap w(theta.data() + w_offset_[0], out, in);
      *input_grad = delta * w;
    }
  }
}

Vec MlpFamily::eval_batch(const Vec& theta, const Mat& X) const {
  Forward fw;
  run_forward(theta, X, fw);
  return fw.pre.back().col(0);
}

Vec MlpFamily::grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const {
  Forward fw;
  run_forward(theta, X, fw);
  Vec g;
  run_backward(theta, X, coeff, fw, &g, nullptr);
  return g;
}

Mat MlpFamily::grad_input_batch(const Vec& theta, const Mat& X) const {
  Forward fw;
  run_forward(theta, X, fw);
  Mat g;
  run_backward(theta, X, Vec::Ones(X.rows()), fw, nullptr, &g);
  return g;
}

BatchGrads MlpFamily::eval_with_grads(const Vec& theta, const Mat& X, const Vec& coeff) const {
  Forward fw;
  run_forward(theta, X, fw);
  BatchGrads out;
  out.values = fw.pre.back().col(0);
  run_backward(theta, X, coeff, fw, &out.param_grad, &out.input_grad_weighted);
  return out;
}

Vec MlpFamily::project(Vec theta) const {
  if (!std::isfinite(clip_)) return theta;
  return theta.cwiseMax(-clip_).cwiseMin(clip_);
}

Vec MlpFamily::random_params(RngStream& rng) const {
  Vec t(total_params_);
  if (std::isfinite(clip_)) {
    for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform(-clip_, clip_);
    return t;
  }
  for (size_t i = 0; i < shapes_.size(); ++i) {
    const auto [out, in] = shapes_[i];
    const double scale = 1.0 / std::sqrt(double(in));
    for (int j = 0; j < out * in; ++j) t[w_offset_[i] + j] = scale * rng.normal();
    for (int j = 0; j < out; ++j) t[b_offset_[i] + j] = 0.01 * rng.normal();
  }
  return t;
}

bool MlpFamily::strictly_interior(const Vec& theta, double margin) const {
  if (!std::isfinite(clip_)) return true;
  return theta.cwiseAbs().maxCoeff() <= clip_ - margin;
}

double MlpFamily::kink_margin(const Vec& theta, const Mat& X) const {
  Forward fw;
  run_forward(theta, X, fw);
  double margin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < shapes_.size(); ++i)  // output layer has no relu
    margin = std::min(margin, fw.pre[i].cwiseAbs().minCoeff());
  return margin;
}

// -------------------------------------------------------------- wrapped

WrappedFamily::WrappedFamily(std::shared_ptr<const Family> core, metrics::ConjugatePair pair)
    : core_(std::move(core)), pair_(std::move(pair)) {
  const auto& cm = core_->metadata();
  meta_.param_count = cm.param_count;
  // scan sigma over the core's output range; sigma is monotone for the
  // shipped pairs but a scan keeps this correct for any activation
  double hi = 0.0, slope = 0.0;
  const int grid = 1001;
  for (int i = 0; i < grid; ++i) {
    const double v = cm.output_bound * (2.0 * i / (grid - 1) - 1.0);
    hi = std::max(hi, std::abs(pair_.sigma(v)));
    slope = std::max(slope, std::abs(pair_.sigma_prime(v)));
  }
  meta_.output_bound = hi;
  meta_.output_bound_empirical = cm.output_bound_empirical;
  meta_.param_lipschitz = cm.param_lipschitz * slope;
  meta_.param_lipschitz_empirical = true;
}

Vec WrappedFamily::eval_batch(const Vec& theta, const Mat& X) const {
  Vec v = core_->eval_batch(theta, X);
  for (int i = 0; i < v.size(); ++i) v[i] = pair_.sigma(v[i]);
  return v;
}

Vec WrappedFamily::grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const {
  Vec v = core_->eval_batch(theta, X);
  Vec c(coeff.size());
  for (int i = 0; i < v.size(); ++i) c[i] = coeff[i] * pair_.sigma_prime(v[i]);
  return core_->grad_params(theta, X, c);
}

Mat WrappedFamily::grad_input_batch(const Vec& theta, const Mat& X) const {
  Vec v = core_->eval_batch(theta, X);
  Mat g = core_->grad_input_batch(theta, X);
  for (int i = 0; i < v.size(); ++i) g.row(i) *= pair_.sigma_prime(v[i]);
  return g;
}

numerics::GradCheckReport family_grad_check(const Family& fam, const Vec& theta, const Mat& X,
                                            double h) {
  auto value = [&](const Vec& t) { return fam.eval_batch(t, X).sum(); };
  auto gradient = [&](const Vec& t) { return fam.grad_params(t, X, Vec::Ones(X.rows())); };
  auto rep = numerics::grad_check(value, gradient, theta, h);
  const double probe_reach = h * (1.0 + X.cwiseAbs().maxCoeff());
  rep.boundary_warning =
      !fam.strictly_interior(theta, 2.0 * h) || fam.kink_margin(theta, X) <= 10.0 * probe_reach;
  return rep;
}

}  // namespace ipmlab::families
