#include "ipmlab/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ipmlab/csv.hpp"
#include "ipmlab/errors.hpp"
#include "ipmlab/rng.hpp"

namespace ipmlab::training {

using measures::GaussianModel;
using measures::MixtureModel;
using measures::PathSample;

namespace {

constexpr int kEvalLatents = 1000;  // frozen generator latents per trace row
constexpr int kEvalDataRows = 1000; // frozen train slice per trace row
constexpr double kRmsDecay = 0.9;
constexpr double kRmsEps = 1e-8;

// Stream ids carved out for training so runs never collide with the
// metric estimators' streams.
constexpr std::uint64_t kStreamCriticInit = 30;
constexpr std::uint64_t kStreamBatch = 31;
constexpr std::uint64_t kStreamLatent = 32;
constexpr std::uint64_t kStreamEval = 40;

Vec opt_direction(Vec& rms, const Vec& g, bool use_rms) {
  if (!use_rms) return g;
  rms = kRmsDecay * rms + (1.0 - kRmsDecay) * g.cwiseProduct(g);
  return (g.array() / (rms.array().sqrt() + kRmsEps)).matrix();
}

Eigen::Vector2d push_latent(const GenerativeModel& m, const PathSample& s) {
  if (const auto* g = std::get_if<GaussianModel>(&m)) return g->sample_given(s.z);
  return std::get<MixtureModel>(m).comp[s.component].sample_given(s.z);
}

// Mean difference objective, or its conjugate-penalized variant when the
// critic carries an activation/conjugate pair.  Rows 0..np-1 of X are data
// points, the rest generator samples.
struct CriticObjective {
  const families::Family& critic;
  const families::WrappedFamily* wrapped;  // non-null only for fgan_js
  int np;
  int nq;

  Vec coeff_at(const Vec& theta, const Mat& X) const {
    Vec c(np + nq);
    c.head(np).setConstant(1.0 / np);
    if (!wrapped) {
      c.tail(nq).setConstant(-1.0 / nq);
      return c;
    }
    const Vec g = critic.eval_batch(theta, X);
    const auto& pair = wrapped->pair();
    for (int j = 0; j < nq; ++j) c[np + j] = -(1.0 + pair.psi_star_prime(g[np + j])) / nq;
    return c;
  }

  double value_at(const Vec& theta, const Mat& X) const {
    const Vec g = critic.eval_batch(theta, X);
    double v = g.head(np).mean();
    if (!wrapped) return v - g.tail(nq).mean();
    const auto& pair = wrapped->pair();
    for (int j = 0; j < nq; ++j) v -= (g[np + j] + pair.psi_star(g[np + j])) / nq;
    return v;
  }
};

CriticObjective make_objective(const families::Family& critic, LossKind loss, int np, int nq) {
  const families::WrappedFamily* wrapped = nullptr;
  if (loss == LossKind::fgan_js) {
    wrapped = dynamic_cast<const families::WrappedFamily*>(&critic);
    if (!wrapped)
      throw UsageError("fgan_js needs a critic wrapped with a conjugate pair");
  }
  return CriticObjective{critic, wrapped, np, nq};
}

Mat draw_rows(const EmpiricalMeasure& m, int n, RngStream& rng) {
  Mat out(n, m.dim());
  for (int i = 0; i < n; ++i) out.row(i) = m.points.row(rng.index(m.size()));
  return out;
}

Mat stack(const Mat& a, const Mat& b) {
  Mat x(a.rows() + b.rows(), a.cols());
  x.topRows(a.rows()) = a;
  x.bottomRows(b.rows()) = b;
  return x;
}

// Frozen evaluation material shared by all trace rows of one run.
struct EvalContext {
  const DatasetSplit* data = nullptr;
  Mat p_eval;                       // fixed slice of the train points
  std::vector<PathSample> latents;  // fixed (component, z) draws
  LossKind loss = LossKind::wgan_clip;
  double lambda = 0.0;
};

EvalContext make_eval_context(const DatasetSplit& data, const GenerativeModel& init,
                              const TrainConfig& cfg, RngStream& rng_eval) {
  EvalContext ctx;
  ctx.data = &data;
  ctx.loss = cfg.loss;
  ctx.lambda = cfg.flow_lambda;
  const int k = std::min(kEvalDataRows, data.train.size());
  ctx.p_eval = data.train.points.topRows(k);
  if (cfg.loss != LossKind::mle) {
    ctx.latents.reserve(kEvalLatents);
    for (int i = 0; i < kEvalLatents; ++i) ctx.latents.push_back(model_path_sample(init, rng_eval));
  }
  return ctx;
}

TraceRow make_row(const EvalContext& ctx, int step, const GenerativeModel& model,
                  const families::Family* critic, const Vec* theta) {
  TraceRow row;
  row.step = step;
  row.params = measures::model_params(model);
  row.param_hash = fnv1a_params(row.params);
  row.test_ll = evaluate_test_ll(model, ctx.data->test);
  if (critic) {
    Mat xq(int(ctx.latents.size()), 2);
    for (int j = 0; j < xq.rows(); ++j) xq.row(j) = push_latent(model, ctx.latents[j]).transpose();
    const CriticObjective obj =
        make_objective(*critic, ctx.loss, int(ctx.p_eval.rows()), int(xq.rows()));
    row.gan_loss = obj.value_at(*theta, stack(ctx.p_eval, xq));
  }
  if (ctx.loss == LossKind::flowgan) {
    row.flow_nll = -measures::model_log_density_batch(model, ctx.p_eval).mean();
    row.flow_total = row.gan_loss + ctx.lambda * row.flow_nll;
  }
  return row;
}

void check_two_dim(const DatasetSplit& data) {
  if (data.train.dim() != 2 || data.test.dim() != 2)
    throw UsageError("generative models are two-dimensional; the dataset has dimension " +
                     std::to_string(data.train.dim()));
}

}  // namespace

LossKind loss_by_name(const std::string& name) {
  if (name == "wgan_clip" || name == "wgan") return LossKind::wgan_clip;
  if (name == "qgan") return LossKind::qgan;
  if (name == "fgan_js" || name == "fgan") return LossKind::fgan_js;
  if (name == "mle") return LossKind::mle;
  if (name == "flowgan") return LossKind::flowgan;
  throw UsageError("unknown loss kind '" + name +
                   "'; expected wgan_clip, qgan, fgan_js, mle, or flowgan");
}

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::wgan_clip: return "wgan_clip";
    case LossKind::qgan: return "qgan";
    case LossKind::fgan_js: return "fgan_js";
    case LossKind::mle: return "mle";
    case LossKind::flowgan: return "flowgan";
  }
  throw UsageError("unknown loss kind");
}

void TrainConfig::validate() const {
  if (batch < 2) throw UsageError("batch size must be at least 2");
  if (generator_steps < 0) throw UsageError("generator step count must be nonnegative");
  if (n_critic < 1) throw UsageError("n_critic must be at least 1");
  if (!(disc_step > 0.0) || !std::isfinite(disc_step))
    throw UsageError("discriminator step size must be positive and finite");
  if (!(gen_step > 0.0) || !std::isfinite(gen_step))
    throw UsageError("generator step size must be positive and finite");
  if (!(flow_lambda >= 0.0)) throw UsageError("flowgan lambda must be nonnegative");
  if (eval_every < 1) throw UsageError("eval interval must be at least 1");
}

std::uint64_t fnv1a_params(const Vec& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double d = params[i];
    unsigned char b[8];
    std::memcpy(b, &d, 8);
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
    for (unsigned char c : b) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

double evaluate_test_ll(const GenerativeModel& model, const EmpiricalMeasure& test) {
  const Vec lp = measures::model_log_density_batch(model, test.points);
  return lp.dot(test.weights);
}

Vec generator_pathwise_grad(const GenerativeModel& model,
                            const std::vector<PathSample>& latents,
                            const families::Family& critic, const Vec& theta,
                            const Vec& coeff) {
  const int n = int(latents.size());
  if (coeff.size() != n) throw UsageError("coefficient count must match the latent count");
  Mat xq(n, 2);
  for (int j = 0; j < n; ++j) xq.row(j) = push_latent(model, latents[j]).transpose();
  const Mat gi = critic.grad_input_batch(theta, xq);

  const bool mixture = std::holds_alternative<MixtureModel>(model);
  Vec g = Vec::Zero(mixture ? 40 : 5);
  for (int j = 0; j < n; ++j) {
    const double u1 = coeff[j] * gi(j, 0), u2 = coeff[j] * gi(j, 1);
    const GaussianModel& c = mixture ? std::get<MixtureModel>(model).comp[latents[j].component]
                                     : std::get<GaussianModel>(model);
    const int base = mixture ? 5 * latents[j].component : 0;
    const double e1z1 = std::exp(c.log_scale[0]) * latents[j].z[0];
    g[base + 0] += u2 * e1z1;
    g[base + 1] += (u1 + c.shear * u2) * e1z1;
    g[base + 2] += u2 * std::exp(c.log_scale[1]) * latents[j].z[1];
    g[base + 3] += u1;
    g[base + 4] += u2;
  }
  return g;
}

BlockReport critic_ascent_block(const families::Family& critic, LossKind loss, Vec& theta,
                                Vec& rms, const Mat& xp, const Mat& xq,
                                const TrainConfig& cfg) {
  const CriticObjective obj = make_objective(critic, loss, int(xp.rows()), int(xq.rows()));
  const Mat X = stack(xp, xq);
  BlockReport rep;
  rep.before = obj.value_at(theta, X);
  for (int s = 0; s < cfg.n_critic; ++s) {
    const Vec c = obj.coeff_at(theta, X);
    const Vec g = critic.grad_params(theta, X, c);
    theta += cfg.disc_step * opt_direction(rms, g, cfg.rmsprop);
    theta = critic.project(theta);
  }
  rep.after = obj.value_at(theta, X);
  return rep;
}

TrainTrace train_gan(const GenerativeModel& init, const families::Family& critic,
                     const DatasetSplit& data, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.loss == LossKind::mle)
    throw UsageError("mle has no critic; call train_mle instead");
  if (cfg.loss == LossKind::qgan && !dynamic_cast<const families::QuadraticFamily*>(&critic))
    throw UsageError("qgan requires a quadratic critic family");
  if (cfg.loss == LossKind::fgan_js && !dynamic_cast<const families::WrappedFamily*>(&critic))
    throw UsageError("fgan_js needs a critic wrapped with a conjugate pair");
  check_two_dim(data);

  const auto t0 = std::chrono::steady_clock::now();
  const int pc = critic.metadata().param_count;
  RngStream rng_init(cfg.seed, kStreamCriticInit);
  RngStream rng_batch(cfg.seed, kStreamBatch);
  RngStream rng_z(cfg.seed, kStreamLatent);
  RngStream rng_eval(cfg.seed, kStreamEval);

  Vec theta;
  if (cfg.disc_init) {
    if (cfg.disc_init->size() != pc)
      throw UsageError("disc_init has " + std::to_string(cfg.disc_init->size()) +
                       " entries; the critic family has " + std::to_string(pc) + " parameters");
    theta = critic.project(*cfg.disc_init);
  } else {
    theta = critic.project(critic.random_params(rng_init));
  }

  GenerativeModel model = init;
  const EvalContext ctx = make_eval_context(data, model, cfg, rng_eval);
  Vec rms_d = Vec::Zero(pc);
  Vec rms_g = Vec::Zero(measures::model_params(model).size());
  const auto* wrapped = dynamic_cast<const families::WrappedFamily*>(&critic);

  TrainTrace trace;
  trace.config = cfg;
  trace.rows.push_back(make_row(ctx, 0, model, &critic, &theta));

  const int n = cfg.batch;
  for (int t = 1; t <= cfg.generator_steps; ++t) {
    const Mat xp = draw_rows(data.train, n, rng_batch);
    Mat xq(n, 2);
    for (int j = 0; j < n; ++j) xq.row(j) = model_path_sample(model, rng_z).x.transpose();
    critic_ascent_block(critic, cfg.loss, theta, rms_d, xp, xq, cfg);

    // the likelihood batch is drawn under every loss so that flowgan with
    // lambda = 0 replays exactly the same streams as wgan_clip
    const Mat xp_gen = draw_rows(data.train, n, rng_batch);
    std::vector<PathSample> zbatch(n);
    for (int j = 0; j < n; ++j) zbatch[j] = model_path_sample(model, rng_z);

    Vec coeff(n);
    if (cfg.loss == LossKind::fgan_js) {
      Mat xq_gen(n, 2);
      for (int j = 0; j < n; ++j) xq_gen.row(j) = zbatch[j].x.transpose();
      const Vec g = critic.eval_batch(theta, xq_gen);
      const auto& pair = wrapped->pair();
      for (int j = 0; j < n; ++j) coeff[j] = -(1.0 + pair.psi_star_prime(g[j])) / n;
    } else {
      coeff.setConstant(-1.0 / n);
    }
    Vec grad = generator_pathwise_grad(model, zbatch, critic, theta, coeff);
    if (cfg.loss == LossKind::flowgan && cfg.flow_lambda != 0.0) {
      Vec gl = Vec::Zero(grad.size());
      for (int j = 0; j < n; ++j)
        gl += measures::model_grad_log_density(model, xp_gen.row(j).transpose());
      grad -= (cfg.flow_lambda / n) * gl;  // descend on lambda times the train NLL
    }
    const Vec p = measures::model_params(model) -
                  cfg.gen_step * opt_direction(rms_g, grad, cfg.rmsprop);
    model = measures::model_with_params(model, p);

    if (t % cfg.eval_every == 0 || t == cfg.generator_steps)
      trace.rows.push_back(make_row(ctx, t, model, &critic, &theta));
  }

  trace.final_model = model;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

TrainTrace train_mle(const GenerativeModel& init, const DatasetSplit& data,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.loss != LossKind::mle)
    throw UsageError("train_mle expects cfg.loss = mle; got " + loss_name(cfg.loss));
  check_two_dim(data);

  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng_batch(cfg.seed, kStreamBatch);
  RngStream rng_eval(cfg.seed, kStreamEval);

  GenerativeModel model = init;
  const EvalContext ctx = make_eval_context(data, model, cfg, rng_eval);
  Vec rms_g = Vec::Zero(measures::model_params(model).size());

  TrainTrace trace;
  trace.config = cfg;
  trace.rows.push_back(make_row(ctx, 0, model, nullptr, nullptr));

  const int n = cfg.batch;
  for (int t = 1; t <= cfg.generator_steps; ++t) {
    const Mat xp = draw_rows(data.train, n, rng_batch);
    Vec grad = Vec::Zero(rms_g.size());
    for (int j = 0; j < n; ++j)
      grad += measures::model_grad_log_density(model, xp.row(j).transpose());
    grad /= n;
    const Vec p = measures::model_params(model) +
                  cfg.gen_step * opt_direction(rms_g, grad, cfg.rmsprop);
    model = measures::model_with_params(model, p);

    if (t % cfg.eval_every == 0 || t == cfg.generator_steps)
      trace.rows.push_back(make_row(ctx, t, model, nullptr, nullptr));
  }

  trace.final_model = model;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

void write_trace_csv(const std::string& path, const TrainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << "step,gan_loss,test_ll,param_hash\n";
  for (const TraceRow& row : trace.rows) {
    out << row.step << ',' << measures::format_double(row.gan_loss) << ','
        << measures::format_double(row.test_ll) << ',' << row.param_hash << '\n';
  }
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

}  // namespace ipmlab::training
