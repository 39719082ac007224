// End-to-end checks of the command-line driver: exit codes, JSON artifacts,
// config-file precedence, and determinism of the file outputs.  Each case
// shells out to the built binary.

#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(IPMLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) out.append(buf, got);
  const int status = ::pclose(pipe);
  CliResult r;
  r.out = out;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// the human-readable lines end where the JSON document starts
json stdout_json(const std::string& out) {
  const auto pos = out.find("\n{");
  REQUIRE(pos != std::string::npos);
  return json::parse(out.substr(pos + 1));
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "ipmlab_cli_scratch";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("bound relu reports the rate constant in its json artifact") {
  const fs::path dir = scratch_dir();
  const fs::path artifact = dir / "bound.json";
  const CliResult r =
      run_cli("bound relu --m 10000 --delta 0.3678794 --json " + artifact.string());
  CHECK(r.exit_code == 0);

  const json doc = json::parse(slurp(artifact));
  CHECK(doc.at("formula_tag") == "relu_rate");
  CHECK(doc.at("C").get<double>() == doctest::Approx(9.65685).epsilon(1e-5));
  CHECK(doc.at("total").get<double>() ==
        doctest::Approx(doc.at("C").get<double>() / 100.0).epsilon(1e-12));
  // the same document closes stdout
  CHECK(stdout_json(r.out) == doc);
}

TEST_CASE("usage and domain errors exit with code one") {
  const fs::path dir = scratch_dir();
  CHECK(run_cli("frobnicate").exit_code == 1);
  CHECK(run_cli("bound relu --m 100 --delta 0.1 --bogus-flag 3").exit_code == 1);
  CHECK(run_cli("bound relu --m 100").exit_code == 1);            // missing --delta
  CHECK(run_cli("bound relu --m 100 --delta 2").exit_code == 1);  // delta outside (0,1)
  CHECK(run_cli("bound nosuch --m 100 --delta 0.1").exit_code == 1);
  CHECK(run_cli("metric mmd " + (dir / "missing.csv").string() + " " +
                (dir / "missing.csv").string())
            .exit_code == 1);
  write_file(dir / "two.csv", "x\n0\n1\n");
  CHECK(run_cli("metric neural " + (dir / "two.csv").string() + " " +
                (dir / "two.csv").string() + " --family spline:3")
            .exit_code == 1);
  CHECK(run_cli("train e1 --loss qgan --batch 1").exit_code == 1);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("metric mmd on csv files matches the closed form") {
  const fs::path dir = scratch_dir();
  write_file(dir / "a.csv", "x\n0\n");
  write_file(dir / "b.csv", "x\n1\n");
  const CliResult r = run_cli("metric mmd " + (dir / "a.csv").string() + " " +
                              (dir / "b.csv").string() + " --bandwidth 1.0");
  CHECK(r.exit_code == 0);
  const double want = std::sqrt(2.0 - 2.0 * std::exp(-0.5));
  const json doc = stdout_json(r.out);
  CHECK(doc.at("value").get<double>() == doctest::Approx(want).epsilon(1e-12));
  CHECK(doc.at("semantics") == "exact");
  // the printed line carries the same number the artifact does
  char printed[64];
  std::snprintf(printed, sizeof(printed), "%.17g", want);
  CHECK(r.out.find(printed) != std::string::npos);
}

TEST_CASE("config files feed subcommand options and explicit flags win") {
  const fs::path dir = scratch_dir();
  write_file(dir / "a.csv", "x\n0\n");
  write_file(dir / "b.csv", "x\n1\n");
  write_file(dir / "cfg.ini", "[metric]\nbandwidth=2.0\n");
  const std::string tail =
      (dir / "a.csv").string() + " " + (dir / "b.csv").string() + " --config " +
      (dir / "cfg.ini").string();

  const json from_file = stdout_json(run_cli("metric mmd " + tail).out);
  CHECK(from_file.at("bandwidth").get<double>() == 2.0);

  const json overridden = stdout_json(run_cli("metric mmd " + tail + " --bandwidth 1.0").out);
  CHECK(overridden.at("bandwidth").get<double>() == 1.0);

  CHECK(run_cli("metric mmd " + tail + "extra-missing.ini").exit_code == 1);
}

TEST_CASE("span norm recovers the planted absolute-value decomposition") {
  const fs::path dir = scratch_dir();
  std::string rows = "x,value\n";
  for (int k = 0; k <= 20; ++k) {
    const double x = -1.0 + 0.1 * k;
    rows += std::to_string(x) + "," + std::to_string(std::abs(x)) + "\n";
  }
  write_file(dir / "absval.csv", rows);
  write_file(dir / "planted.csv", "v1,v2\n1,0\n-1,0\n");
  const CliResult r = run_cli("span norm --target " + (dir / "absval.csv").string() +
                              " --members relu:0 --planted " + (dir / "planted.csv").string());
  CHECK(r.exit_code == 0);
  const json doc = stdout_json(r.out);
  CHECK(doc.at("norm").get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(doc.at("anchor_residual").get<double>() < 1e-9);
  CHECK(doc.at("members_active").get<int>() == 2);
}

TEST_CASE("train emits a trace whose schema and rows match the run") {
  const fs::path dir = scratch_dir();
  const fs::path trace = dir / "trace.csv";
  const CliResult r = run_cli("train e1 --loss qgan --steps 20 --batch 16 --seed 3 --out " +
                              trace.string());
  CHECK(r.exit_code == 0);
  const std::string text = slurp(trace);
  CHECK(text.rfind("step,gan_loss,test_ll,param_hash\n", 0) == 0);
  // rows at steps 0, 10, 20
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  const json doc = stdout_json(r.out);
  CHECK(doc.at("final_step").get<int>() == 20);
  CHECK(std::isfinite(doc.at("final_test_ll").get<double>()));
}

TEST_CASE("experiment runs are byte-identical when repeated") {
  const fs::path dir = scratch_dir();
  const std::string base = "experiment e1 --methods qgan --seed 7 --steps 30 --no-plots --out ";
  const CliResult first = run_cli(base + (dir / "one").string());
  const CliResult second = run_cli(base + (dir / "two").string());
  CHECK(first.exit_code == 0);
  CHECK(second.exit_code == 0);
  CHECK(slurp(dir / "one" / "trace_qgan_seed7.csv") ==
        slurp(dir / "two" / "trace_qgan_seed7.csv"));
  const json doc = stdout_json(first.out);
  CHECK(doc.at("runs").size() == 1);
  CHECK(doc.at("runs")[0].at("method") == "qgan");
  CHECK(std::isfinite(doc.at("truth_test_ll").get<double>()));
}

TEST_CASE("selftest passes and exits zero") {
  const CliResult r = run_cli("selftest");
  CHECK(r.exit_code == 0);
  const json doc = stdout_json(r.out);
  CHECK(doc.at("failed").get<int>() == 0);
  CHECK(doc.at("passed").get<int>() >= 12);
}
