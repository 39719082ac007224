#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipmlab/families.hpp"
#include "ipmlab/gaussian.hpp"
#include "ipmlab/types.hpp"

namespace ipmlab::training {

using measures::DatasetSplit;
using measures::EmpiricalMeasure;
using measures::GenerativeModel;

// Supported training objectives.  wgan_clip, qgan and fgan_js alternate
// critic ascent with pathwise generator descent; mle is plain stochastic
// ascent on the train log-likelihood; flowgan adds lambda times the train
// negative log-likelihood to the wgan generator objective.
enum class LossKind { wgan_clip, qgan, fgan_js, mle, flowgan };

LossKind loss_by_name(const std::string& name);
std::string loss_name(LossKind kind);

struct TrainConfig {
  LossKind loss = LossKind::wgan_clip;
  int batch = 256;
  int generator_steps = 2000;
  int n_critic = 5;          // critic ascent steps per generator step
  double disc_step = 1e-3;
  double gen_step = 3e-3;
  bool rmsprop = true;       // false selects plain SGD
  double flow_lambda = 1.0;  // weight of the likelihood term (flowgan only)
  int eval_every = 10;       // record a trace row every this many generator steps
  std::uint64_t seed = 0;
  std::optional<Vec> disc_init;  // critic start; random interior point when absent

  void validate() const;  // throws UsageError on out-of-range fields
};

// One recorded evaluation.  gan_loss and test_ll are computed on frozen
// evaluation sets (a fixed slice of the train data and a fixed batch of
// generator latents pushed through the current generator), so they are
// deterministic functions of the parameters at that step.  flow_nll and
// flow_total are filled for flowgan runs only and satisfy
// flow_total = gan_loss + lambda * flow_nll.
struct TraceRow {
  int step = 0;
  double gan_loss = 0.0;  // critic objective; 0 for mle runs
  double test_ll = 0.0;   // mean test log-likelihood, nats
  double flow_nll = 0.0;
  double flow_total = 0.0;
  std::uint64_t param_hash = 0;  // FNV-1a over the generator parameter bytes
  Vec params;                    // generator parameter snapshot
};

struct TrainTrace {
  TrainConfig config;
  std::vector<TraceRow> rows;  // strictly increasing in step
  GenerativeModel final_model;
  double wall_seconds = 0.0;
};

// 64-bit FNV-1a over the little-endian byte serialization of the entries.
std::uint64_t fnv1a_params(const Vec& params);

// Mean log-density of the test points under the model, in nats.  Safe in
// log space: degenerate scales give a large negative value, never NaN.
double evaluate_test_ll(const GenerativeModel& model, const EmpiricalMeasure& test);

// Pathwise gradient of sum_j coeff[j] * f(theta, x_j) with respect to the
// generator parameters, where x_j is the j-th frozen latent (component
// index and standard-normal z) pushed through the generator map A z + b.
// The stored x field of the latents is ignored and recomputed from model.
Vec generator_pathwise_grad(const GenerativeModel& model,
                            const std::vector<measures::PathSample>& latents,
                            const families::Family& critic, const Vec& theta,
                            const Vec& coeff);

// Objective values bracketing one critic block.
struct BlockReport {
  double before = 0.0;
  double after = 0.0;
};

// n_critic projected-ascent steps on the critic objective over the fixed
// batches xp (data) and xq (generator samples), updating theta and the
// rmsprop accumulator in place.  Every step ends with a projection, so the
// returned parameters satisfy the family's constraints exactly.
BlockReport critic_ascent_block(const families::Family& critic, LossKind loss, Vec& theta,
                                Vec& rms, const Mat& xp, const Mat& xq,
                                const TrainConfig& cfg);

// Alternating adversarial training.  qgan requires a QuadraticFamily,
// fgan_js a WrappedFamily; mle is rejected (use train_mle).  Each generator
// step draws one data batch and one generator batch for the critic block,
// then a fresh latent batch for the pathwise generator step.  Rows are
// recorded at step 0, every eval_every steps, and at the final step.
TrainTrace train_gan(const GenerativeModel& init, const families::Family& critic,
                     const DatasetSplit& data, const TrainConfig& cfg);

// Stochastic ascent on the train mean log-likelihood; the gan_loss column
// is identically zero.
TrainTrace train_mle(const GenerativeModel& init, const DatasetSplit& data,
                     const TrainConfig& cfg);

// Writes rows as CSV with header step,gan_loss,test_ll,param_hash.
void write_trace_csv(const std::string& path, const TrainTrace& trace);

}  // namespace ipmlab::training
