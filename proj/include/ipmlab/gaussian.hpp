#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>

#include "ipmlab/rng.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::measures {

// Two-dimensional Gaussian parameterized through its sampling path
//   x = A z + b,  z ~ N(0, I),  A = [[1, 0], [shear, 1]] diag(e^s1, e^s2).
// A is the Cholesky-like factor of the covariance, so log|Sigma| is exactly
// 2 (s1 + s2) and every covariance reachable by the model is positive
// definite by construction.
struct GaussianModel {
  double shear = 0.0;
  Eigen::Vector2d log_scale = Eigen::Vector2d::Zero();
  Eigen::Vector2d bias = Eigen::Vector2d::Zero();

  Eigen::Matrix2d transform() const;
  Eigen::Matrix2d covariance() const;
  double log_det_cov() const { return 2.0 * (log_scale[0] + log_scale[1]); }

  Eigen::Vector2d sample_given(const Eigen::Vector2d& z) const;
  Eigen::Vector2d sample(RngStream& rng) const;
  Mat sample_n(int n, RngStream& rng) const;

  double log_density(const Eigen::Vector2d& x) const;
  Vec log_density_batch(const Mat& X) const;

  // gradient of log_density in the (shear, s1, s2, b1, b2) coordinates
  Vec grad_log_density(const Eigen::Vector2d& x) const;

  Vec params() const;  // (shear, s1, s2, b1, b2)
  static GaussianModel from_params(const Vec& p);
};

// Closed-form maximum likelihood fit: sample mean plus the triangular
// factorization of the (1/m) sample covariance mapped back to (shear, s).
// Throws DegenerateDataError when the sample covariance is singular.
GaussianModel gaussian_fit_mle(const Mat& X);

// Equal-weight mixture of eight GaussianModel components.
struct MixtureModel {
  std::array<GaussianModel, 8> comp;

  Eigen::Vector2d sample(RngStream& rng) const;
  Mat sample_n(int n, RngStream& rng) const;
  double log_density(const Eigen::Vector2d& x) const;  // log-sum-exp, overflow safe
  Vec log_density_batch(const Mat& X) const;
  Vec grad_log_density(const Eigen::Vector2d& x) const;  // 40 coordinates

  Vec params() const;
  static MixtureModel from_params(const Vec& p);
};

using GenerativeModel = std::variant<GaussianModel, MixtureModel>;

Mat model_sample_n(const GenerativeModel& m, int n, RngStream& rng);
double model_log_density(const GenerativeModel& m, const Eigen::Vector2d& x);
Vec model_log_density_batch(const GenerativeModel& m, const Mat& X);
Vec model_grad_log_density(const GenerativeModel& m, const Eigen::Vector2d& x);
Vec model_params(const GenerativeModel& m);
GenerativeModel model_with_params(const GenerativeModel& proto, const Vec& p);

// One pathwise draw: the component index, the latent z, and x itself.
struct PathSample {
  Eigen::Vector2d x;
  Eigen::Vector2d z;
  int component = 0;
};
PathSample model_path_sample(const GenerativeModel& m, RngStream& rng);

// Weighted point cloud; weights are nonnegative and sum to one.
struct EmpiricalMeasure {
  Mat points;   // n x d
  Vec weights;  // n

  static EmpiricalMeasure uniform(Mat pts);
  int size() const { return int(points.rows()); }
  int dim() const { return int(points.cols()); }
};

struct DatasetSplit {
  EmpiricalMeasure train;
  EmpiricalMeasure test;
  GenerativeModel truth;
};

// "gaussian-e1": sheared Gaussian, mean (0.5, -0.5), covariance
//   (1/128) [[17, 15], [15, 17]].
// "mixture-e2": eight components on the circle of radius sqrt(2) at angles
//   2 pi k / 8, isotropic scale 0.01414.
// Train split is 100000 points from stream (seed, 0), test is 1000 points
// from stream (seed, 1).
DatasetSplit make_benchmark(const std::string& name, std::uint64_t seed);

}  // namespace ipmlab::measures
