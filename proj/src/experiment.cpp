#include "ipmlab/experiment.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "ipmlab/conjugate.hpp"
#include "ipmlab/errors.hpp"
#include "ipmlab/metrics.hpp"
#include "ipmlab/parallel.hpp"
#include "ipmlab/svg.hpp"

namespace ipmlab::experiment {

using measures::GaussianModel;
using measures::GenerativeModel;
using measures::MixtureModel;
using training::LossKind;

namespace {

std::string benchmark_of(const std::string& name) {
  if (name == "e1") return "gaussian-e1";
  if (name == "e2") return "mixture-e2";
  throw UsageError("unknown experiment '" + name + "'; expected e1 or e2");
}

}  // namespace

GenerativeModel default_init(const std::string& name) {
  benchmark_of(name);
  if (name == "e1") {
    GaussianModel g;
    g.shear = 0.0;
    g.log_scale.setZero();
    g.bias.setZero();
    return g;
  }
  MixtureModel m;
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 8.0 + std::numbers::pi / 8.0;
    m.comp[k].shear = 0.0;
    m.comp[k].log_scale << -2.0, -2.0;
    m.comp[k].bias << 0.5 * std::cos(a), 0.5 * std::sin(a);
  }
  return m;
}

std::shared_ptr<const families::Family> default_critic(const std::string& name, LossKind loss) {
  benchmark_of(name);
  switch (loss) {
    case LossKind::mle:
      return nullptr;
    case LossKind::qgan:
      return std::make_shared<families::QuadraticFamily>(2, 0.05, 2);
    case LossKind::wgan_clip:
    case LossKind::flowgan:
    case LossKind::fgan_js:
      break;
  }
  std::shared_ptr<const families::Family> net;
  if (name == "e1")
    net = std::make_shared<families::MlpFamily>(2, std::vector<int>{500}, 0.05);
  else
    net = std::make_shared<families::MlpFamily>(2, std::vector<int>{24, 24, 24, 24}, 0.1);
  if (loss == LossKind::fgan_js)
    return std::make_shared<families::WrappedFamily>(net, metrics::js_pair());
  return net;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const std::string bench = benchmark_of(cfg.name);
  if (cfg.methods.empty()) throw UsageError("no methods requested");
  if (cfg.seeds.empty()) throw UsageError("no seeds requested");
  cfg.base.validate();

  std::vector<LossKind> kinds;
  kinds.reserve(cfg.methods.size());
  for (const std::string& m : cfg.methods) kinds.push_back(training::loss_by_name(m));

  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);

  const measures::DatasetSplit data = measures::make_benchmark(bench, cfg.data_seed);
  const GenerativeModel init = default_init(cfg.name);

  ExperimentResult result;
  result.config = cfg;
  result.truth_test_ll = training::evaluate_test_ll(data.truth, data.test);

  const int n_runs = int(kinds.size() * cfg.seeds.size());
  result.runs.resize(n_runs);
  std::vector<std::exception_ptr> failures(n_runs);

  parallel_for(n_runs, [&](int i) {
    try {
      const LossKind kind = kinds[i / int(cfg.seeds.size())];
      const std::uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
      training::TrainConfig run_cfg = cfg.base;
      run_cfg.loss = kind;
      run_cfg.seed = seed;

      RunResult& run = result.runs[i];
      run.method = training::loss_name(kind);
      run.seed = seed;
      if (kind == LossKind::mle) {
        run.trace = training::train_mle(init, data, run_cfg);
      } else {
        const auto critic = default_critic(cfg.name, kind);
        run.trace = training::train_gan(init, *critic, data, run_cfg);
      }
      const fs::path trace_path =
          out_dir / ("trace_" + run.method + "_seed" + std::to_string(seed) + ".csv");
      training::write_trace_csv(trace_path.string(), run.trace);
      run.trace_path = trace_path.string();
      run.final_gan_loss = run.trace.rows.back().gan_loss;
      run.final_test_ll = run.trace.rows.back().test_ll;
      if (const auto* truth = std::get_if<GaussianModel>(&data.truth))
        if (const auto* fit = std::get_if<GaussianModel>(&run.trace.final_model))
          run.sym_kl = metrics::kl_gaussian_closed(*truth, *fit) +
                       metrics::kl_gaussian_closed(*fit, *truth);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  nlohmann::ordered_json summary;
  summary["experiment"] = cfg.name;
  summary["data_seed"] = cfg.data_seed;
  summary["truth_test_ll"] = result.truth_test_ll;
  summary["runs"] = nlohmann::ordered_json::array();
  for (const RunResult& run : result.runs) {
    nlohmann::ordered_json j;
    j["method"] = run.method;
    j["seed"] = run.seed;
    j["trace"] = fs::path(run.trace_path).filename().string();
    j["steps"] = run.trace.rows.back().step;
    j["final_gan_loss"] = run.final_gan_loss;
    j["final_test_ll"] = run.final_test_ll;
    if (std::isfinite(run.sym_kl)) j["symmetric_kl"] = run.sym_kl;
    j["wall_seconds"] = run.trace.wall_seconds;
    summary["runs"].push_back(j);
  }
  const fs::path summary_path = out_dir / "summary.json";
  std::ofstream out(summary_path);
  if (!out) throw UsageError("cannot open '" + summary_path.string() + "' for writing");
  out << summary.dump(2) << '\n';
  result.summary_path = summary_path.string();

  if (cfg.emit_plots) {
    std::vector<svg::Series> loss_series, ll_series;
    for (const RunResult& run : result.runs) {
      svg::Series s;
      s.label = run.method + " s" + std::to_string(run.seed);
      for (const auto& row : run.trace.rows) {
        s.x.push_back(double(row.step));
        s.y.push_back(row.gan_loss);
      }
      // mle records no adversarial objective, so it only joins the
      // likelihood chart
      if (run.method != "mle") loss_series.push_back(s);
      for (size_t i = 0; i < s.y.size(); ++i) s.y[i] = run.trace.rows[i].test_ll;
      ll_series.push_back(s);
    }
    svg::write_line_chart((out_dir / "plot_neg_gan_loss.svg").string(),
                          "negative GAN loss (" + cfg.name + ")", "generator step",
                          "negative GAN loss", loss_series);
    svg::write_line_chart((out_dir / "plot_test_ll.svg").string(),
                          "test log-likelihood (" + cfg.name + ")", "generator step",
                          "test log-likelihood (nats)", ll_series);
  }
  return result;
}

}  // namespace ipmlab::experiment
