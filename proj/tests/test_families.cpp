#include <cmath>
#include <doctest.h>
#include <memory>

#include "ipmlab/errors.hpp"
#include "ipmlab/families.hpp"
#include "ipmlab/rng.hpp"

using namespace ipmlab;
using namespace ipmlab::families;

namespace {

Mat ball_points(int n, int d, double radius, RngStream& rng) {
  Mat x(n, d);
  for (int i = 0; i < n; ++i) {
    Vec v = rng.normal_vec(d);
    const double nn = v.norm();
    if (nn > 0) v /= nn;
    x.row(i) = (v * radius * std::pow(rng.uniform(), 1.0 / d)).transpose();
  }
  return x;
}

// random interior parameter whose finite-difference probes stay clear of
// every ReLU kink; resamples until the margin clears the reliability cutoff
// used by family_grad_check (10 h (1 + max|x|)) with a little slack
Vec smooth_interior_params(const Family& fam, const Mat& X, RngStream& rng) {
  const double need = 12.0 * 1e-5 * (1.0 + X.cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 500; ++attempt) {
    Vec t = fam.project(fam.random_params(rng));
    if (!fam.strictly_interior(t, 1e-4)) t *= 0.9;
    if (!fam.strictly_interior(t, 1e-4)) continue;
    if (fam.kink_margin(t, X) > need) return t;
  }
  throw std::runtime_error("could not sample a smooth interior configuration");
}

}  // namespace

TEST_CASE("quadratic family: closed-form values and gradients") {
  QuadraticFamily fam(2, 1.0);
  // A = I, b = 0: f(x) = |x|^2, grad_x = 2x
  Vec theta(6);
  theta << 1, 0, 0, 1, 0, 0;
  Mat x(1, 2);
  x << 1, 2;
  CHECK(fam.eval_batch(theta, x)[0] == doctest::Approx(5.0).epsilon(1e-15));
  const Mat gi = fam.grad_input_batch(theta, x);
  CHECK(gi(0, 0) == doctest::Approx(2.0));
  CHECK(gi(0, 1) == doctest::Approx(4.0));

  // parameter gradient against the rank-one closed form
  RngStream rng(5, 0);
  Mat pts = ball_points(7, 2, 1.0, rng);
  Vec coeff = rng.normal_vec(7);
  const Vec g = fam.grad_params(theta, pts, coeff);
  Mat ga = Mat::Zero(2, 2);
  Vec gb = Vec::Zero(2);
  for (int i = 0; i < 7; ++i) {
    ga += coeff[i] * pts.row(i).transpose() * pts.row(i);
    gb += coeff[i] * pts.row(i).transpose();
  }
  CHECK(std::abs(g[0] - ga(0, 0)) < 1e-14);
  CHECK(std::abs(g[1] - ga(0, 1)) < 1e-14);
  CHECK(std::abs(g[2] - ga(1, 0)) < 1e-14);
  CHECK(std::abs(g[3] - ga(1, 1)) < 1e-14);
  CHECK((g.tail(2) - gb).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("single neuron: constant unit via bias direction, kink gives zero grad") {
  SingleNeuronFamily fam(2);
  Vec theta(3);
  theta << 0, 0, 1;  // f = relu(1) = 1 everywhere
  Mat x(3, 2);
  x << 0.1, 0.2, -0.5, 0.4, 0, 0;
  const Vec v = fam.eval_batch(theta, x);
  CHECK((v.array() - 1.0).abs().maxCoeff() == 0.0);
  CHECK(fam.grad_input_batch(theta, x).cwiseAbs().maxCoeff() == 0.0);

  // exactly at the kink the chosen subgradient is zero
  Vec flat(3);
  flat << 1, 0, 0;
  Mat origin(1, 2);
  origin << 0, 0;
  CHECK(fam.eval_batch(flat, origin)[0] == 0.0);
  CHECK(fam.grad_params(flat, origin, Vec::Ones(1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection: idempotent and domain-respecting") {
  RngStream rng(9, 0);
  SingleNeuronFamily neuron(2);
  QuadraticFamily quad(2, 0.05);
  MlpFamily mlp(2, {4, 4}, 0.05);

  for (int i = 0; i < 200; ++i) {
    Vec raw = rng.normal_vec(neuron.param_count());
    const Vec p1 = neuron.project(raw);
    CHECK(std::abs(p1.norm() - 1.0) < 1e-12);
    CHECK((neuron.project(p1) - p1).cwiseAbs().maxCoeff() < 1e-15);

    Vec rawq = rng.normal_vec(quad.param_count());
    const Vec p2 = quad.project(rawq);
    CHECK(p2.cwiseAbs().maxCoeff() <= 0.05);
    CHECK((quad.project(p2) - p2).cwiseAbs().maxCoeff() == 0.0);

    Vec rawm = rng.normal_vec(mlp.param_count());
    const Vec p3 = mlp.project(rawm);
    CHECK(p3.cwiseAbs().maxCoeff() <= 0.05);
  }

  // zero vector maps to the canonical unit vector
  const Vec z = neuron.project(Vec::Zero(3));
  CHECK(z[2] == 1.0);
  CHECK(z.head(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("output bound holds for projected parameters") {
  RngStream rng(21, 0);
  const SingleNeuronFamily neuron(2);
  const QuadraticFamily quad(2, 0.05);
  const MlpFamily mlp(2, {4, 4}, 0.05);
  const std::vector<const Family*> fams = {&neuron, &quad, &mlp};
  for (const Family* fam : fams) {
    const double bound = fam->metadata().output_bound;
    double seen = 0.0;
    for (int i = 0; i < 100000 / 3; ++i) {
      const Vec t = fam->project(fam->random_params(rng));
      const Mat x = ball_points(1, 2, 1.0, rng);
      seen = std::max(seen, std::abs(fam->eval_batch(t, x)[0]));
    }
    CHECK(seen <= bound + 1e-12);
  }
}

TEST_CASE("family metadata: analytic constants and parameter counts") {
  SingleNeuronFamily neuron(2);
  CHECK(neuron.metadata().output_bound == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(neuron.metadata().param_lipschitz == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_FALSE(neuron.metadata().output_bound_empirical);

  QuadraticFamily quad(2, 0.05);
  CHECK(quad.metadata().output_bound ==
        doctest::Approx(0.05 * (2.0 + std::sqrt(2.0))).epsilon(1e-15));
  CHECK(quad.metadata().param_lipschitz == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(quad.param_count() == 6);

  MlpFamily deep(2, {64, 64, 64, 64}, 0.05);
  CHECK(deep.param_count() == 12737);
  CHECK_FALSE(deep.metadata().output_bound_empirical);
  CHECK(deep.metadata().param_lipschitz_empirical);

  MlpFamily wide(2, {500}, 0.05);
  CHECK(wide.param_count() == 2001);

  MlpFamily spectral(2, {8, 8}, std::numeric_limits<double>::infinity());
  CHECK(spectral.name() == "spectral_mlp");
  CHECK(spectral.metadata().output_bound_empirical);

  CHECK_THROWS_AS(QuadraticFamily(2, -1.0), UsageError);
  CHECK_THROWS_AS(MlpFamily(2, {}, 0.05), UsageError);
}

TEST_CASE("parameter Lipschitz bound holds on fresh draws") {
  RngStream rng(133, 0);
  const QuadraticFamily quad(2, 0.5);
  const MlpFamily mlp(2, {6, 6}, 0.1);
  const std::vector<const Family*> fams = {&quad, &mlp};
  for (const Family* fam : fams) {
    const double lip = fam->metadata().param_lipschitz;
    for (int i = 0; i < 200; ++i) {
      const Vec a = fam->project(fam->random_params(rng));
      const Vec b = fam->project(fam->random_params(rng));
      const double dist = (a - b).norm();
      if (dist < 1e-9) continue;
      const Mat x = ball_points(1, 2, 1.0, rng);
      const double diff = std::abs(fam->eval_batch(a, x)[0] - fam->eval_batch(b, x)[0]);
      CHECK(diff <= lip * dist + 1e-9);
    }
  }
}

TEST_CASE("gradients match central differences on smooth interior configs") {
  RngStream rng(2026, 0);

  const SingleNeuronFamily neuron(2);
  const QuadraticFamily quad(2, 0.05);
  const QuadraticFamily lin(1, 1.0, 1);
  const MlpFamily mlp2(2, {8, 8}, 0.05);
  const MlpFamily deep(2, {16, 16, 16, 16}, 0.05);
  const auto wrapped_core = std::make_shared<MlpFamily>(2, std::vector<int>{6}, 0.05);
  const WrappedFamily js_mlp(wrapped_core, metrics::js_pair());
  const WrappedFamily pearson_mlp(wrapped_core, metrics::pearson_pair());

  const std::vector<const Family*> fams = {&neuron, &quad, &lin, &mlp2, &deep, &js_mlp, &pearson_mlp};
  for (const Family* fam : fams) {
    // deep nets expose many relu pre-activations per row; fewer rows keep
    // kink-free configurations reachable by rejection sampling
    const int rows = fam->param_count() > 600 ? 6 : 16;
    for (int rep = 0; rep < 6; ++rep) {
      const Mat x = ball_points(rows, fam->input_dim(), 1.0, rng);
      const Vec t = smooth_interior_params(*fam, x, rng);
      const auto rep_out = family_grad_check(*fam, t, x);
      CHECK_FALSE(rep_out.boundary_warning);
      CHECK(rep_out.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("input gradients match central differences") {
  RngStream rng(31, 0);
  const QuadraticFamily quad(2, 0.05);
  const MlpFamily mlp(2, {8, 8}, 0.05);
  const std::vector<const Family*> fams = {&quad, &mlp};
  for (const Family* fam : fams) {
    for (int rep = 0; rep < 6; ++rep) {
      Mat x = ball_points(1, 2, 0.9, rng);
      const Vec t = smooth_interior_params(*fam, x, rng);
      const Mat gi = fam->grad_input_batch(t, x);
      const double h = 1e-5;
      for (int j = 0; j < 2; ++j) {
        Mat xp = x, xm = x;
        xp(0, j) += h;
        xm(0, j) -= h;
        const double fd = (fam->eval_batch(t, xp)[0] - fam->eval_batch(t, xm)[0]) / (2 * h);
        CHECK(std::abs(gi(0, j) - fd) / std::max(1.0, std::abs(gi(0, j))) < 1e-4);
      }
    }
  }
}

TEST_CASE("boundary configurations raise the unreliable-check flag") {
  QuadraticFamily quad(2, 0.05);
  Vec edge = Vec::Constant(6, 0.05);  // exactly on the clip boundary
  Mat x(2, 2);
  x << 0.3, 0.1, -0.2, 0.4;
  CHECK(family_grad_check(quad, edge, x).boundary_warning);

  Vec inside = Vec::Constant(6, 0.02);
  CHECK_FALSE(family_grad_check(quad, inside, x).boundary_warning);
}

TEST_CASE("wrapped family: JS outputs stay inside the conjugate domain") {
  auto core = std::make_shared<MlpFamily>(2, std::vector<int>{8}, 0.5);
  WrappedFamily js(core, metrics::js_pair());
  RngStream rng(4, 0);
  const double log2 = std::log(2.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec t = js.project(js.random_params(rng));
    const Mat x = ball_points(1, 2, 1.0, rng);
    const double v = js.eval_batch(t, x)[0];
    CHECK(v < log2);
    CHECK(std::isfinite(js.pair().psi_star(v)));
  }
  // psi*(b0) = 0 for both shipped pairs
  CHECK(metrics::js_pair().psi_star(0.0) == doctest::Approx(0.0));
  CHECK(metrics::pearson_pair().psi_star(0.0) == 0.0);
}

TEST_CASE("fused pass agrees with the separate calls") {
  RngStream rng(77, 0);
  MlpFamily mlp(2, {8, 8}, 0.05);
  const Mat x = ball_points(32, 2, 1.0, rng);
  const Vec t = mlp.project(mlp.random_params(rng));
  Vec coeff = rng.normal_vec(32);

  const auto fused = mlp.eval_with_grads(t, x, coeff);
  CHECK((fused.values - mlp.eval_batch(t, x)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((fused.param_grad - mlp.grad_params(t, x, coeff)).cwiseAbs().maxCoeff() < 1e-12);
  Mat gi = mlp.grad_input_batch(t, x);
  gi.array().colwise() *= coeff.array();
  CHECK((fused.input_grad_weighted - gi).cwiseAbs().maxCoeff() < 1e-12);
}
