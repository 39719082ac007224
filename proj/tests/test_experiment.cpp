#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "doctest.h"
#include "ipmlab/errors.hpp"
#include "ipmlab/experiment.hpp"
#include "ipmlab/svg.hpp"

using namespace ipmlab;
using namespace ipmlab::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(const std::string& dir) {
  ExperimentConfig cfg;
  cfg.name = "e1";
  cfg.methods = {"qgan", "mle"};
  cfg.seeds = {0};
  cfg.base.batch = 16;
  cfg.base.generator_steps = 20;
  cfg.base.eval_every = 10;
  cfg.out_dir = dir;
  return cfg;
}

}  // namespace

TEST_CASE("default generator initializations match their documented shapes") {
  const auto g = std::get<measures::GaussianModel>(default_init("e1"));
  CHECK(g.shear == 0.0);
  CHECK(g.log_scale.norm() == 0.0);
  CHECK(g.bias.norm() == 0.0);

  const auto m = std::get<measures::MixtureModel>(default_init("e2"));
  for (int k = 0; k < 8; ++k) {
    CHECK(m.comp[k].bias.norm() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.comp[k].log_scale[0] == -2.0);
    CHECK(m.comp[k].log_scale[1] == -2.0);
  }
  // rotated half a sector: the first component must not sit on the truth
  // angle 0
  CHECK(std::abs(std::atan2(m.comp[0].bias[1], m.comp[0].bias[0]) - std::numbers::pi / 8)
        < 1e-12);

  CHECK_THROWS_AS(default_init("e3"), UsageError);
}

TEST_CASE("default critics have the documented families") {
  using training::LossKind;
  CHECK(default_critic("e1", LossKind::mle) == nullptr);

  const auto q = default_critic("e1", LossKind::qgan);
  CHECK(dynamic_cast<const families::QuadraticFamily*>(q.get()) != nullptr);

  const auto w1 = default_critic("e1", LossKind::wgan_clip);
  CHECK(w1->metadata().param_count == 2001);  // 500 relu neurons on 2 inputs

  const auto f = default_critic("e1", LossKind::fgan_js);
  CHECK(dynamic_cast<const families::WrappedFamily*>(f.get()) != nullptr);

  const auto w2 = default_critic("e2", LossKind::wgan_clip);
  const auto* mlp = dynamic_cast<const families::MlpFamily*>(w2.get());
  REQUIRE(mlp != nullptr);
  CHECK(mlp->layer_count() == 5);  // four hidden layers plus the output
}

TEST_CASE("a tiny experiment writes traces, summary, and plots") {
  const std::string dir = "exp_tmp_a";
  const ExperimentResult res = run_experiment(tiny_config(dir));

  CHECK(res.runs.size() == 2);
  CHECK(res.truth_test_ll > -0.125);
  CHECK(res.truth_test_ll < -0.005);

  for (const RunResult& run : res.runs) {
    CHECK(fs::exists(run.trace_path));
    CHECK(run.trace.rows.back().step == 20);
    CHECK(std::isfinite(run.final_test_ll));
    CHECK(std::isfinite(run.sym_kl));  // both arms end in a gaussian model
  }
  CHECK(fs::exists(fs::path(dir) / "trace_qgan_seed0.csv"));
  CHECK(fs::exists(fs::path(dir) / "trace_mle_seed0.csv"));

  const auto summary = nlohmann::json::parse(slurp(res.summary_path));
  CHECK(summary["experiment"] == "e1");
  CHECK(summary["runs"].size() == 2);
  CHECK(summary["runs"][0]["method"] == "qgan");
  CHECK(summary["runs"][0].contains("symmetric_kl"));
  CHECK(summary["runs"][0]["final_test_ll"].is_number());

  const std::string plot = slurp(fs::path(dir) / "plot_test_ll.svg");
  CHECK(plot.find("<svg") != std::string::npos);
  CHECK(plot.find("polyline") != std::string::npos);
  CHECK(plot.find("mle") != std::string::npos);
  const std::string loss_plot = slurp(fs::path(dir) / "plot_neg_gan_loss.svg");
  CHECK(loss_plot.find("mle") == std::string::npos);  // no adversarial objective to plot

  fs::remove_all(dir);
}

TEST_CASE("experiments are reproducible byte for byte") {
  const ExperimentResult a = run_experiment(tiny_config("exp_tmp_b1"));
  const ExperimentResult b = run_experiment(tiny_config("exp_tmp_b2"));
  for (size_t i = 0; i < a.runs.size(); ++i)
    CHECK(slurp(a.runs[i].trace_path) == slurp(b.runs[i].trace_path));

  // summaries agree except for wall-clock timings
  auto sa = nlohmann::json::parse(slurp("exp_tmp_b1/summary.json"));
  auto sb = nlohmann::json::parse(slurp("exp_tmp_b2/summary.json"));
  for (auto* s : {&sa, &sb})
    for (auto& run : (*s)["runs"]) run.erase("wall_seconds");
  CHECK(sa == sb);
  fs::remove_all("exp_tmp_b1");
  fs::remove_all("exp_tmp_b2");
}

TEST_CASE("bad experiment configurations are rejected") {
  ExperimentConfig cfg = tiny_config("exp_tmp_c");
  cfg.name = "e9";
  CHECK_THROWS_AS(run_experiment(cfg), UsageError);

  cfg = tiny_config("exp_tmp_c");
  cfg.methods = {};
  CHECK_THROWS_AS(run_experiment(cfg), UsageError);

  cfg = tiny_config("exp_tmp_c");
  cfg.methods = {"hinge"};
  CHECK_THROWS_AS(run_experiment(cfg), UsageError);
}

TEST_CASE("line charts split series at non-finite points") {
  svg::Series s;
  s.label = "gap";
  s.x = {0, 1, 2, 3, 4};
  s.y = {1.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 3.0, 4.0};
  const std::string path = "chart_tmp.svg";
  svg::write_line_chart(path, "t", "x", "y", {s});
  const std::string body = slurp(path);
  size_t count = 0, pos = 0;
  while ((pos = body.find("<polyline", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  CHECK(count == 2);
  fs::remove(path);

  svg::Series bad;
  bad.label = "bad";
  bad.x = {0.0};
  CHECK_THROWS_AS(svg::write_line_chart(path, "t", "x", "y", {bad}), UsageError);

  CHECK_NOTHROW(svg::write_line_chart(path, "empty", "x", "y", {}));
  fs::remove(path);
}
