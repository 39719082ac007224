#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ipmlab/conjugate.hpp"
#include "ipmlab/grad_check.hpp"
#include "ipmlab/rng.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::families {

struct FamilyMetadata {
  double output_bound = 0.0;     // sup of |f_theta(x)| over the domain box/ball
  double param_lipschitz = 0.0;  // |f_a(x) - f_b(x)| <= L |a - b| on the input domain
  int param_count = 0;
  bool output_bound_empirical = false;
  bool param_lipschitz_empirical = false;
};

struct BatchGrads {
  Vec values;              // f_theta on each row
  Vec param_grad;          // d/dtheta sum_i coeff_i f_theta(x_i)
  Mat input_grad_weighted; // row i: coeff_i * grad_x f_theta(x_i)
};

// A parametric critic class over R^d.  Parameters live in a flat vector;
// project() maps any vector onto the family's parameter domain and eval is
// defined for all parameter values, so finite differences of eval are
// meaningful without touching the projection.
class Family {
 public:
  virtual ~Family() = default;

  virtual std::string name() const = 0;
  virtual int input_dim() const = 0;
  virtual int param_count() const = 0;

  virtual Vec eval_batch(const Vec& theta, const Mat& X) const = 0;
  virtual Vec grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const = 0;
  virtual Mat grad_input_batch(const Vec& theta, const Mat& X) const = 0;

  // fused pass; the default composes the three calls above
  virtual BatchGrads eval_with_grads(const Vec& theta, const Mat& X, const Vec& coeff) const;

  virtual Vec project(Vec theta) const = 0;
  virtual Vec random_params(RngStream& rng) const = 0;
  virtual bool strictly_interior(const Vec& theta, double margin) const = 0;

  // Parameters of the identically-zero critic, used as the neutral
  // candidate by the variational divergence estimator.
  virtual Vec zero_critic_params() const { return Vec::Zero(param_count()); }

  // Smallest |pre-activation| across the batch, +inf for smooth families.
  // Finite differences are only trustworthy when this clears the step size.
  virtual double kink_margin(const Vec& theta, const Mat& X) const;

  virtual const FamilyMetadata& metadata() const = 0;

  // Exhaustive-search coordinates for the grid-exact distance: per-axis
  // intervals plus a map from coordinates to parameters.  Families with
  // more than two effective degrees of freedom return an empty box.
  virtual std::vector<std::pair<double, double>> grid_box() const { return {}; }
  virtual Vec grid_to_params(const Vec& coords) const { return coords; }
};

// f(x) = max(v . [x; 1], 0) with ||v|| = 1.  The subgradient at the kink is
// taken to be zero.
class SingleNeuronFamily : public Family {
 public:
  explicit SingleNeuronFamily(int input_dim, double input_radius = 1.0);

  std::string name() const override { return "single_neuron"; }
  int input_dim() const override { return d_; }
  int param_count() const override { return d_ + 1; }
  Vec eval_batch(const Vec& theta, const Mat& X) const override;
  Vec grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const override;
  Mat grad_input_batch(const Vec& theta, const Mat& X) const override;
  Vec project(Vec theta) const override;
  Vec random_params(RngStream& rng) const override;
  bool strictly_interior(const Vec&, double) const override { return true; }
  Vec zero_critic_params() const override;  // w = 0, bias = -1: relu never fires
  double kink_margin(const Vec& theta, const Mat& X) const override;
  const FamilyMetadata& metadata() const override { return meta_; }
  std::vector<std::pair<double, double>> grid_box() const override;
  Vec grid_to_params(const Vec& coords) const override;

 private:
  int d_;
  double radius_;
  FamilyMetadata meta_;
};

// f(x) = x'Ax + b.x (degree 2) or b.x alone (degree 1), every coefficient
// clipped to [-clip, clip].
class QuadraticFamily : public Family {
 public:
  QuadraticFamily(int input_dim, double clip, int degree = 2, double input_radius = 1.0);

  std::string name() const override { return degree_ == 2 ? "quadratic" : "linear"; }
  int input_dim() const override { return d_; }
  int param_count() const override { return degree_ == 2 ? d_ * d_ + d_ : d_; }
  Vec eval_batch(const Vec& theta, const Mat& X) const override;
  Vec grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const override;
  Mat grad_input_batch(const Vec& theta, const Mat& X) const override;
  Vec project(Vec theta) const override;
  Vec random_params(RngStream& rng) const override;
  bool strictly_interior(const Vec& theta, double margin) const override;
  const FamilyMetadata& metadata() const override { return meta_; }
  std::vector<std::pair<double, double>> grid_box() const override;

  double clip() const { return clip_; }

 private:
  Eigen::MatrixXd unpack_a(const Vec& theta) const;
  int d_, degree_;
  double clip_, radius_;
  FamilyMetadata meta_;
};

// Fully connected ReLU network with a linear scalar output.  With a finite
// clip every weight and bias is kept in [-clip, clip]; clip = infinity
// turns projection off (the spectral reporting variant).
class MlpFamily : public Family {
 public:
  MlpFamily(int input_dim, std::vector<int> hidden, double clip, double input_radius = 1.0);

  std::string name() const override;
  int input_dim() const override { return d_; }
  int param_count() const override { return total_params_; }
  Vec eval_batch(const Vec& theta, const Mat& X) const override;
  Vec grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const override;
  Mat grad_input_batch(const Vec& theta, const Mat& X) const override;
  BatchGrads eval_with_grads(const Vec& theta, const Mat& X, const Vec& coeff) const override;
  Vec project(Vec theta) const override;
  Vec random_params(RngStream& rng) const override;
  bool strictly_interior(const Vec& theta, double margin) const override;
  double kink_margin(const Vec& theta, const Mat& X) const override;
  const FamilyMetadata& metadata() const override { return meta_; }

  int layer_count() const { return int(shapes_.size()); }
  // weight matrix of layer i as (out x in)
  Mat weight(const Vec& theta, int i) const;
  double clip() const { return clip_; }
  const std::vector<std::pair<int, int>>& shapes() const { return shapes_; }

 private:
  struct Forward;
  void run_forward(const Vec& theta, const Mat& X, Forward& fw) const;
  void run_backward(const Vec& theta, const Mat& X, const Vec& coeff, const Forward& fw,
                    Vec* param_grad, Mat* input_grad) const;

  int d_;
  std::vector<int> hidden_;
  double clip_, radius_;
  std::vector<std::pair<int, int>> shapes_;  // (out, in) per layer
  std::vector<int> w_offset_, b_offset_;
  int total_params_ = 0;
  FamilyMetadata meta_;
};

// Applies a conjugate pair's output activation to a wrapped critic so its
// outputs stay inside the conjugate domain.
class WrappedFamily : public Family {
 public:
  WrappedFamily(std::shared_ptr<const Family> core, metrics::ConjugatePair pair);

  std::string name() const override { return core_->name() + "+" + pair_.name; }
  int input_dim() const override { return core_->input_dim(); }
  int param_count() const override { return core_->param_count(); }
  Vec eval_batch(const Vec& theta, const Mat& X) const override;
  Vec grad_params(const Vec& theta, const Mat& X, const Vec& coeff) const override;
  Mat grad_input_batch(const Vec& theta, const Mat& X) const override;
  Vec project(Vec theta) const override { return core_->project(std::move(theta)); }
  Vec random_params(RngStream& rng) const override { return core_->random_params(rng); }
  bool strictly_interior(const Vec& t, double m) const override {
    return core_->strictly_interior(t, m);
  }
  Vec zero_critic_params() const override { return core_->zero_critic_params(); }
  double kink_margin(const Vec& t, const Mat& X) const override {
    return core_->kink_margin(t, X);
  }
  const FamilyMetadata& metadata() const override { return meta_; }
  std::vector<std::pair<double, double>> grid_box() const override { return core_->grid_box(); }
  Vec grid_to_params(const Vec& c) const override { return core_->grid_to_params(c); }

  const metrics::ConjugatePair& pair() const { return pair_; }
  const Family& core() const { return *core_; }

 private:
  std::shared_ptr<const Family> core_;
  metrics::ConjugatePair pair_;
  FamilyMetadata meta_;
};

// Central-difference check of grad_params through the objective
// sum_i f_theta(x_i).  The boundary warning fires when theta sits within
// 2h of the projection boundary or when some pre-activation is close
// enough to a ReLU kink that the probes straddle it.
numerics::GradCheckReport family_grad_check(const Family& fam, const Vec& theta, const Mat& X,
                                            double h = 1e-5);

}  // namespace ipmlab::families
