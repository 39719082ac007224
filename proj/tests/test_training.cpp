#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "ipmlab/conjugate.hpp"
#include "ipmlab/errors.hpp"
#include "ipmlab/families.hpp"
#include "ipmlab/gaussian.hpp"
#include "ipmlab/metrics.hpp"
#include "ipmlab/rng.hpp"
#include "ipmlab/training.hpp"

using namespace ipmlab;
using namespace ipmlab::training;
using measures::DatasetSplit;
using measures::EmpiricalMeasure;
using measures::GaussianModel;
using measures::GenerativeModel;
using measures::MixtureModel;
using measures::PathSample;

namespace {

const DatasetSplit& e1_data() {
  static DatasetSplit d = measures::make_benchmark("gaussian-e1", 3);
  return d;
}

const DatasetSplit& e2_data() {
  static DatasetSplit d = measures::make_benchmark("mixture-e2", 3);
  return d;
}

GaussianModel standard_gaussian() {
  GaussianModel g;
  g.shear = 0.0;
  g.log_scale.setZero();
  g.bias.setZero();
  return g;
}

TrainConfig quick_config(LossKind loss, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.batch = 16;
  cfg.generator_steps = 30;
  cfg.eval_every = 5;
  cfg.seed = seed;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("loss names round trip and bad names are rejected") {
  for (LossKind k : {LossKind::wgan_clip, LossKind::qgan, LossKind::fgan_js, LossKind::mle,
                     LossKind::flowgan})
    CHECK(loss_by_name(loss_name(k)) == k);
  CHECK(loss_by_name("wgan") == LossKind::wgan_clip);
  CHECK_THROWS_AS(loss_by_name("hinge"), UsageError);
}

TEST_CASE("config validation rejects out-of-range fields") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto broken = [&](auto&& mutate) {
    TrainConfig c = cfg;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), UsageError);
  };
  broken([](TrainConfig& c) { c.batch = 1; });
  broken([](TrainConfig& c) { c.n_critic = 0; });
  broken([](TrainConfig& c) { c.generator_steps = -1; });
  broken([](TrainConfig& c) { c.flow_lambda = -0.5; });
  broken([](TrainConfig& c) { c.eval_every = 0; });
  broken([](TrainConfig& c) { c.disc_step = 0.0; });
  broken([](TrainConfig& c) { c.gen_step = -1e-3; });
}

TEST_CASE("incompatible loss and critic combinations are rejected") {
  families::MlpFamily mlp(2, {8}, 0.1);
  TrainConfig cfg = quick_config(LossKind::mle, 1);
  CHECK_THROWS_AS(train_gan(standard_gaussian(), mlp, e1_data(), cfg), UsageError);

  cfg.loss = LossKind::qgan;
  CHECK_THROWS_AS(train_gan(standard_gaussian(), mlp, e1_data(), cfg), UsageError);

  cfg.loss = LossKind::fgan_js;
  CHECK_THROWS_AS(train_gan(standard_gaussian(), mlp, e1_data(), cfg), UsageError);

  cfg.loss = LossKind::wgan_clip;
  cfg.disc_init = Vec::Zero(3);  // wrong parameter count
  CHECK_THROWS_AS(train_gan(standard_gaussian(), mlp, e1_data(), cfg), UsageError);

  TrainConfig mcfg = quick_config(LossKind::wgan_clip, 1);
  CHECK_THROWS_AS(train_mle(standard_gaussian(), e1_data(), mcfg), UsageError);
}

TEST_CASE("flowgan with lambda zero replays wgan_clip exactly") {
  families::MlpFamily critic(2, {8}, 0.1);
  const TrainConfig wcfg = quick_config(LossKind::wgan_clip, 11);
  TrainConfig fcfg = quick_config(LossKind::flowgan, 11);
  fcfg.flow_lambda = 0.0;

  const TrainTrace tw = train_gan(standard_gaussian(), critic, e1_data(), wcfg);
  const TrainTrace tf = train_gan(standard_gaussian(), critic, e1_data(), fcfg);

  REQUIRE(tw.rows.size() == tf.rows.size());
  for (size_t i = 0; i < tw.rows.size(); ++i) {
    CHECK(tw.rows[i].step == tf.rows[i].step);
    CHECK(tw.rows[i].gan_loss == tf.rows[i].gan_loss);
    CHECK(tw.rows[i].test_ll == tf.rows[i].test_ll);
    CHECK(tw.rows[i].param_hash == tf.rows[i].param_hash);
    CHECK((tw.rows[i].params.array() == tf.rows[i].params.array()).all());
  }

  const std::string pw = "trace_wgan_tmp.csv", pf = "trace_flow_tmp.csv";
  write_trace_csv(pw, tw);
  write_trace_csv(pf, tf);
  CHECK(slurp(pw) == slurp(pf));
  std::remove(pw.c_str());
  std::remove(pf.c_str());
}

TEST_CASE("a zero critic makes the first recorded gan loss exactly zero") {
  families::MlpFamily critic(2, {8}, 0.1);
  TrainConfig cfg = quick_config(LossKind::wgan_clip, 4);
  cfg.generator_steps = 5;
  cfg.disc_init = Vec::Zero(critic.metadata().param_count);
  const TrainTrace t = train_gan(standard_gaussian(), critic, e1_data(), cfg);
  REQUIRE(!t.rows.empty());
  CHECK(t.rows[0].step == 0);
  CHECK(t.rows[0].gan_loss == 0.0);
}

TEST_CASE("pathwise generator gradient matches finite differences") {
  RngStream rng(21, 0);

  SUBCASE("single gaussian through a smooth quadratic critic") {
    families::QuadraticFamily critic(2, 0.5, 2);
    const Vec theta = critic.project(critic.random_params(rng));
    GaussianModel g;
    g.shear = 0.3;
    g.log_scale << -0.2, 0.1;
    g.bias << 0.4, -0.3;
    GenerativeModel model = g;

    std::vector<PathSample> latents(20);
    for (auto& s : latents) s = measures::model_path_sample(model, rng);
    Vec coeff(20);
    for (int j = 0; j < 20; ++j) coeff[j] = rng.uniform(-1.0, 1.0) / 20.0;

    const Vec analytic = generator_pathwise_grad(model, latents, critic, theta, coeff);
    auto value = [&](const Vec& p) {
      const GenerativeModel m = measures::model_with_params(model, p);
      Mat xq(20, 2);
      for (int j = 0; j < 20; ++j)
        xq.row(j) = std::get<GaussianModel>(m).sample_given(latents[j].z).transpose();
      return coeff.dot(critic.eval_batch(theta, xq));
    };
    const Vec p0 = measures::model_params(model);
    const double h = 1e-5;
    for (int i = 0; i < p0.size(); ++i) {
      Vec pp = p0, pm = p0;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (value(pp) - value(pm)) / (2.0 * h);
      CHECK(std::abs(analytic[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }

  SUBCASE("mixture components route gradients to their own slots") {
    families::QuadraticFamily critic(2, 0.5, 2);
    const Vec theta = critic.project(critic.random_params(rng));
    MixtureModel mix;
    for (int k = 0; k < 8; ++k) {
      mix.comp[k].shear = 0.1 * k - 0.3;
      mix.comp[k].log_scale << -0.5 + 0.05 * k, -0.2;
      mix.comp[k].bias << std::cos(0.7 * k), std::sin(0.7 * k);
    }
    GenerativeModel model = mix;

    std::vector<PathSample> latents(24);
    for (auto& s : latents) s = measures::model_path_sample(model, rng);
    Vec coeff = Vec::Constant(24, -1.0 / 24.0);

    const Vec analytic = generator_pathwise_grad(model, latents, critic, theta, coeff);
    auto value = [&](const Vec& p) {
      const GenerativeModel m = measures::model_with_params(model, p);
      const auto& mm = std::get<MixtureModel>(m);
      Mat xq(24, 2);
      for (int j = 0; j < 24; ++j)
        xq.row(j) = mm.comp[latents[j].component].sample_given(latents[j].z).transpose();
      return coeff.dot(critic.eval_batch(theta, xq));
    };
    const Vec p0 = measures::model_params(model);
    const double h = 1e-5;
    for (int i = 0; i < p0.size(); ++i) {
      Vec pp = p0, pm = p0;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (value(pp) - value(pm)) / (2.0 * h);
      CHECK(std::abs(analytic[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }

  SUBCASE("relu critic away from kinks") {
    families::MlpFamily critic(2, {6}, 0.5);
    GaussianModel g = standard_gaussian();
    g.bias << 0.2, -0.1;
    GenerativeModel model = g;
    std::vector<PathSample> latents(15);
    for (auto& s : latents) s = measures::model_path_sample(model, rng);
    Mat xq(15, 2);
    for (int j = 0; j < 15; ++j)
      xq.row(j) = std::get<GaussianModel>(model).sample_given(latents[j].z).transpose();

    Vec theta;
    double margin = 0.0;
    do {
      theta = critic.project(critic.random_params(rng));
      margin = critic.kink_margin(theta, xq);
    } while (margin < 1e-3);

    const Vec coeff = Vec::Constant(15, -1.0 / 15.0);
    const Vec analytic = generator_pathwise_grad(model, latents, critic, theta, coeff);
    auto value = [&](const Vec& p) {
      const GenerativeModel m = measures::model_with_params(model, p);
      Mat x(15, 2);
      for (int j = 0; j < 15; ++j)
        x.row(j) = std::get<GaussianModel>(m).sample_given(latents[j].z).transpose();
      return coeff.dot(critic.eval_batch(theta, x));
    };
    const Vec p0 = measures::model_params(model);
    const double h = 1e-6;
    for (int i = 0; i < p0.size(); ++i) {
      Vec pp = p0, pm = p0;
      pp[i] += h;
      pm[i] -= h;
      const double fd = (value(pp) - value(pm)) / (2.0 * h);
      CHECK(std::abs(analytic[i] - fd) <= 1e-3 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("critic blocks mostly ascend and always end inside the clip box") {
  families::MlpFamily critic(2, {12}, 0.1);
  TrainConfig cfg;
  cfg.n_critic = 3;
  RngStream rng(7, 0);
  Vec theta = critic.project(critic.random_params(rng));
  Vec rms = Vec::Zero(critic.metadata().param_count);
  const GenerativeModel model = standard_gaussian();

  int ascended = 0;
  const int blocks = 40;
  RngStream rng_batch(7, 1), rng_z(7, 2);
  for (int b = 0; b < blocks; ++b) {
    Mat xp(64, 2), xq(64, 2);
    for (int i = 0; i < 64; ++i) {
      xp.row(i) = e1_data().train.points.row(rng_batch.index(e1_data().train.size()));
      xq.row(i) = measures::model_path_sample(model, rng_z).x.transpose();
    }
    const BlockReport rep =
        critic_ascent_block(critic, LossKind::wgan_clip, theta, rms, xp, xq, cfg);
    if (rep.after >= rep.before - 1e-12) ++ascended;
    CHECK(theta.cwiseAbs().maxCoeff() <= 0.1);  // exact box membership after projection
  }
  CHECK(ascended >= 36);
}

TEST_CASE("flowgan rows decompose into the gan and likelihood parts") {
  families::MlpFamily critic(2, {8}, 0.1);
  TrainConfig cfg = quick_config(LossKind::flowgan, 9);
  cfg.flow_lambda = 0.7;
  const TrainTrace t = train_gan(standard_gaussian(), critic, e1_data(), cfg);
  for (const TraceRow& row : t.rows) {
    CHECK(row.flow_nll != 0.0);
    CHECK(std::abs(row.flow_total - (row.gan_loss + 0.7 * row.flow_nll)) <=
          1e-12 * std::max(1.0, std::abs(row.flow_total)));
  }
}

TEST_CASE("training is deterministic and traces are internally consistent") {
  families::MlpFamily critic(2, {8}, 0.1);
  const TrainConfig cfg = quick_config(LossKind::wgan_clip, 13);
  const TrainTrace a = train_gan(standard_gaussian(), critic, e1_data(), cfg);
  const TrainTrace b = train_gan(standard_gaussian(), critic, e1_data(), cfg);

  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].step == b.rows[i].step);
    CHECK(a.rows[i].gan_loss == b.rows[i].gan_loss);
    CHECK(a.rows[i].test_ll == b.rows[i].test_ll);
    CHECK(a.rows[i].param_hash == b.rows[i].param_hash);
  }
  for (size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i].step > a.rows[i - 1].step);
  for (const TraceRow& row : a.rows) CHECK(fnv1a_params(row.params) == row.param_hash);
  CHECK((measures::model_params(a.final_model).array() == a.rows.back().params.array()).all());
  CHECK(a.rows.back().step == cfg.generator_steps);
  CHECK(a.wall_seconds >= 0.0);
}

TEST_CASE("trace csv has the documented schema and survives rewriting") {
  families::MlpFamily critic(2, {8}, 0.1);
  TrainConfig cfg = quick_config(LossKind::wgan_clip, 17);
  cfg.generator_steps = 10;
  const TrainTrace t = train_gan(standard_gaussian(), critic, e1_data(), cfg);
  const std::string path = "trace_schema_tmp.csv";
  write_trace_csv(path, t);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,gan_loss,test_ll,param_hash");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == int(t.rows.size()));
  in.close();
  std::remove(path.c_str());
}

TEST_CASE("stochastic mle on the sheared gaussian recovers the closed-form fit") {
  TrainConfig cfg;
  cfg.loss = LossKind::mle;
  cfg.batch = 128;
  cfg.generator_steps = 300;
  cfg.gen_step = 1e-2;
  cfg.eval_every = 50;
  cfg.seed = 5;
  const TrainTrace t = train_mle(standard_gaussian(), e1_data(), cfg);

  const Vec final_p = t.rows.back().params;
  CHECK(std::abs(final_p[3] - 0.5) < 0.15);
  CHECK(std::abs(final_p[4] + 0.5) < 0.15);

  const GaussianModel closed = measures::gaussian_fit_mle(e1_data().train.points);
  const double closed_ll = evaluate_test_ll(closed, e1_data().test);
  CHECK(t.rows.back().test_ll > closed_ll - 0.3);

  for (const TraceRow& row : t.rows) CHECK(row.gan_loss == 0.0);

  // ascent on the train likelihood is monotone up to minibatch noise
  const EmpiricalMeasure train_slice =
      EmpiricalMeasure::uniform(e1_data().train.points.topRows(2000));
  double prev = -std::numeric_limits<double>::infinity();
  for (const TraceRow& row : t.rows) {
    const double ll =
        evaluate_test_ll(measures::model_with_params(standard_gaussian(), row.params),
                         train_slice);
    CHECK(ll >= prev - 0.05);
    prev = ll;
  }
}

TEST_CASE("truth models score their own test sets near the analytic level") {
  const double e1_ll = evaluate_test_ll(e1_data().truth, e1_data().test);
  CHECK(e1_ll > -0.125);
  CHECK(e1_ll < -0.005);

  const double e2_ll = evaluate_test_ll(e2_data().truth, e2_data().test);
  CHECK(e2_ll > 3.50);
  CHECK(e2_ll < 3.70);

  GaussianModel tight = standard_gaussian();
  tight.log_scale << -20.0, -20.0;
  const double v = evaluate_test_ll(tight, e1_data().test);
  CHECK(std::isfinite(v));
  CHECK(v < -1e6);
}

TEST_CASE("a short qgan run moves the generator toward the data") {
  families::QuadraticFamily critic(2, 0.05, 2);
  TrainConfig cfg;
  cfg.loss = LossKind::qgan;
  cfg.batch = 64;
  cfg.generator_steps = 200;
  cfg.eval_every = 50;
  cfg.seed = 2;
  const TrainTrace t = train_gan(standard_gaussian(), critic, e1_data(), cfg);

  const auto& truth = std::get<GaussianModel>(e1_data().truth);
  auto sym_kl = [&](const GenerativeModel& m) {
    const auto& g = std::get<GaussianModel>(m);
    return metrics::kl_gaussian_closed(truth, g) + metrics::kl_gaussian_closed(g, truth);
  };
  const double init_kl = sym_kl(standard_gaussian());
  const double final_kl = sym_kl(t.final_model);
  CHECK(final_kl < 0.8 * init_kl);
}

TEST_CASE("fgan with the jensen-shannon pair trains without leaving the domain") {
  auto core = std::make_shared<families::MlpFamily>(2, std::vector<int>{8}, 0.2);
  families::WrappedFamily critic(core, metrics::js_pair());
  TrainConfig cfg = quick_config(LossKind::fgan_js, 6);
  cfg.generator_steps = 20;
  const TrainTrace t = train_gan(standard_gaussian(), critic, e1_data(), cfg);
  for (const TraceRow& row : t.rows) {
    CHECK(std::isfinite(row.gan_loss));
    CHECK(std::isfinite(row.test_ll));
  }
  CHECK(t.rows.back().step == 20);
}
