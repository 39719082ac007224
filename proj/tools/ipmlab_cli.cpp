// Command-line front end.  Subcommands mirror the library modules: metric
// estimation, Rademacher and spectral complexity, generalization-bound
// calculators, span diagnostics, toy GAN training, canned experiments, and a
// fast selftest.  Every number printed to stdout is repeated in a JSON
// document that closes the output; --json writes the same document to a file.
// Exit codes: 0 success, 1 usage or domain error, 2 internal invariant
// violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ipmlab/bounds.hpp"
#include "ipmlab/complexity.hpp"
#include "ipmlab/conjugate.hpp"
#include "ipmlab/csv.hpp"
#include "ipmlab/errors.hpp"
#include "ipmlab/experiment.hpp"
#include "ipmlab/families.hpp"
#include "ipmlab/gaussian.hpp"
#include "ipmlab/lp.hpp"
#include "ipmlab/metrics.hpp"
#include "ipmlab/rng.hpp"
#include "ipmlab/span.hpp"
#include "ipmlab/training.hpp"
#include "ipmlab/types.hpp"

namespace {

using nlohmann::ordered_json;
using namespace ipmlab;

// ---------------------------------------------------------------------------
// small parsing helpers

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse '" + s + "' as a number in " + what);
  }
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse '" + s + "' as an integer in " + what);
  }
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : split(s, ','))
    if (!part.empty()) out.push_back(parse_double(part, what));
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& part : split(s, ','))
    if (!part.empty()) out.push_back(parse_int(part, what));
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

// ---------------------------------------------------------------------------
// shared grammars: sample sources and family descriptors

// "<csv path>" | "gaussian-e1[:train|:test]" | "mixture-e2[:train|:test]"
measures::EmpiricalMeasure load_source(const std::string& spec, std::uint64_t data_seed,
                                       int max_rows) {
  std::string name = spec, part = "train";
  const auto pos = spec.rfind(':');
  if (pos != std::string::npos) {
    const std::string tail = spec.substr(pos + 1);
    if (tail == "train" || tail == "test") {
      name = spec.substr(0, pos);
      part = tail;
    }
  }
  Mat points;
  if (name == "gaussian-e1" || name == "mixture-e2") {
    const measures::DatasetSplit data = measures::make_benchmark(name, data_seed);
    points = part == "test" ? data.test.points : data.train.points;
  } else {
    if (!std::filesystem::exists(name))
      throw UsageError("sample source '" + spec +
                       "' is neither a readable file nor a benchmark name "
                       "(gaussian-e1, mixture-e2, optional :train/:test suffix)");
    points = measures::read_csv_matrix(name);
  }
  if (max_rows > 0 && points.rows() > max_rows) points = Mat(points.topRows(max_rows));
  return measures::EmpiricalMeasure::uniform(points);
}

// "neuron:<dim>[:<radius>]" | "quadratic:<dim>:<clip>[:<degree>][:<radius>]" |
// "mlp:<dim>:<w1,w2,...>:<clip>[:<radius>]"
std::shared_ptr<const families::Family> parse_family(const std::string& desc) {
  const auto parts = split(desc, ':');
  const std::string& kind = parts.front();
  const auto want = [&](std::size_t lo, std::size_t hi, const char* grammar) {
    if (parts.size() < lo || parts.size() > hi)
      throw UsageError("family descriptor '" + desc + "' does not match " + grammar);
  };
  if (kind == "neuron") {
    want(2, 3, "neuron:<dim>[:<radius>]");
    const int dim = parse_int(parts[1], "family dim");
    const double radius = parts.size() > 2 ? parse_double(parts[2], "family radius") : 1.0;
    return std::make_shared<families::SingleNeuronFamily>(dim, radius);
  }
  if (kind == "quadratic") {
    want(3, 5, "quadratic:<dim>:<clip>[:<degree>][:<radius>]");
    const int dim = parse_int(parts[1], "family dim");
    const double clip = parse_double(parts[2], "family clip");
    const int degree = parts.size() > 3 ? parse_int(parts[3], "family degree") : 2;
    const double radius = parts.size() > 4 ? parse_double(parts[4], "family radius") : 1.0;
    return std::make_shared<families::QuadraticFamily>(dim, clip, degree, radius);
  }
  if (kind == "mlp") {
    want(4, 5, "mlp:<dim>:<w1,w2,...>:<clip>[:<radius>]");
    const int dim = parse_int(parts[1], "family dim");
    const std::vector<int> hidden = parse_int_list(parts[2], "mlp widths");
    const double clip = parse_double(parts[3], "family clip");
    const double radius = parts.size() > 4 ? parse_double(parts[4], "family radius") : 1.0;
    return std::make_shared<families::MlpFamily>(dim, hidden, clip, radius);
  }
  throw UsageError("unknown family kind '" + kind + "' (neuron | quadratic | mlp)");
}

// ---------------------------------------------------------------------------
// output plumbing

void emit(const ordered_json& doc, const std::string& json_path) {
  std::cout << doc.dump(2) << "\n";
  if (json_path.empty()) return;
  std::ofstream out(json_path);
  if (!out) throw UsageError("cannot write json artifact '" + json_path + "'");
  out << doc.dump(2) << "\n";
}

ordered_json estimate_json(const metrics::MetricEstimate& est) {
  ordered_json j;
  j["value"] = est.value;
  j["semantics"] = metrics::semantics_name(est.semantics);
  j["standard_error"] = est.standard_error;
  if (est.restarts > 0) j["restarts"] = est.restarts;
  if (est.steps > 0) j["steps"] = est.steps;
  return j;
}

// ---------------------------------------------------------------------------
// metric

struct MetricArgs {
  std::string kind, a, b;
  std::string family;
  std::string pair = "js";
  double bandwidth = 1.0;
  bool unbiased = false;
  bool exact = false;
  int grid_points = 4001;
  int mc_samples = 20000;
  int max_rows = 2000;
  std::uint64_t data_seed = 1;
  metrics::OptimizerConfig opt;
  bool sgd = false;
  std::string json_path;
};

int run_metric(const MetricArgs& args) {
  MetricArgs a = args;
  a.opt.rmsprop = !a.sgd;
  const measures::EmpiricalMeasure P = load_source(a.a, a.data_seed, a.max_rows);
  const measures::EmpiricalMeasure Q = load_source(a.b, a.data_seed, a.max_rows);

  ordered_json doc;
  doc["command"] = "metric";
  doc["kind"] = a.kind;
  doc["source_a"] = a.a;
  doc["source_b"] = a.b;
  doc["rows_a"] = P.size();
  doc["rows_b"] = Q.size();

  metrics::MetricEstimate est;
  if (a.kind == "neural") {
    if (a.family.empty()) throw UsageError("metric neural requires --family");
    const auto fam = parse_family(a.family);
    est = a.exact ? metrics::neural_distance_exact(P, Q, *fam, a.grid_points)
                  : metrics::neural_distance(P, Q, *fam, a.opt);
    doc["family"] = a.family;
  } else if (a.kind == "mmd") {
    est = metrics::mmd(P, Q, a.bandwidth, a.unbiased);
    doc["bandwidth"] = a.bandwidth;
    doc["unbiased"] = a.unbiased;
  } else if (a.kind == "bl") {
    est = metrics::bl_distance(P, Q);
  } else if (a.kind == "w1") {
    est = metrics::w1_distance(P, Q);
  } else if (a.kind == "symkl") {
    const measures::GaussianModel mu = measures::gaussian_fit_mle(P.points);
    const measures::GaussianModel nu = measures::gaussian_fit_mle(Q.points);
    RngStream rng(a.opt.seed, 0x300);
    est = metrics::symmetric_kl(mu, nu, a.mc_samples, rng);
    const double closed =
        metrics::kl_gaussian_closed(mu, nu) + metrics::kl_gaussian_closed(nu, mu);
    doc["mc_samples"] = a.mc_samples;
    doc["closed_form"] = closed;
    std::cout << "closed form (gaussian fits) = " << measures::format_double(closed) << "\n";
  } else if (a.kind == "fdiv") {
    if (a.family.empty()) throw UsageError("metric fdiv requires --family");
    const families::WrappedFamily fam(parse_family(a.family),
                                      metrics::conjugate_pair_by_name(a.pair));
    est = a.exact ? metrics::neural_f_divergence_exact(P, Q, fam, a.grid_points)
                  : metrics::neural_f_divergence(P, Q, fam, a.opt);
    doc["family"] = a.family;
    doc["pair"] = a.pair;
  } else {
    throw UsageError("unknown metric kind '" + a.kind +
                     "' (neural | mmd | bl | w1 | symkl | fdiv)");
  }

  std::cout << a.kind << " = " << measures::format_double(est.value) << "  ["
            << metrics::semantics_name(est.semantics) << "]\n";
  if (est.standard_error > 0.0)
    std::cout << "standard error = " << measures::format_double(est.standard_error) << "\n";
  doc.update(estimate_json(est));
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// rademacher

struct RademacherArgs {
  std::string mode;  // empirical | analytic
  std::string source;
  std::string family;
  std::string kind = "relu_neuron";
  int trials = 20;
  int m = 0;  // analytic sample count, or empirical row cap (0 = all rows)
  double param = 0.0;
  std::uint64_t data_seed = 1;
  metrics::OptimizerConfig opt;
  bool sgd = false;
  std::string json_path;
};

int run_rademacher(const RademacherArgs& args) {
  RademacherArgs a = args;
  a.opt.rmsprop = !a.sgd;
  ordered_json doc;
  doc["command"] = "rademacher";
  doc["mode"] = a.mode;

  if (a.mode == "empirical") {
    if (a.family.empty() || a.source.empty())
      throw UsageError("rademacher empirical requires --family and --source");
    const measures::EmpiricalMeasure X = load_source(a.source, a.data_seed, a.m);
    const complexity::RademacherEstimate est =
        complexity::empirical_rademacher(*parse_family(a.family), X.points, a.trials, a.opt);
    std::cout << "empirical rademacher = " << measures::format_double(est.value) << "\n"
              << "standard error       = " << measures::format_double(est.standard_error)
              << "\n"
              << "m = " << X.size() << ", trials = " << est.trials << "\n";
    doc["family"] = a.family;
    doc["source"] = a.source;
    doc["m"] = X.size();
    doc["trials"] = est.trials;
    doc["value"] = est.value;
    doc["standard_error"] = est.standard_error;
    doc["trial_values"] = est.trial_values;
  } else if (a.mode == "analytic") {
    if (a.m <= 0) throw UsageError("rademacher analytic requires --m > 0");
    const complexity::RademacherKind kind = complexity::rademacher_kind_by_name(a.kind);
    const double value = complexity::rademacher_bound_analytic(kind, a.m, a.param);
    std::cout << "analytic rademacher bound = " << measures::format_double(value) << "\n";
    doc["kind"] = complexity::rademacher_kind_name(kind);
    doc["m"] = a.m;
    doc["param"] = a.param;
    doc["value"] = value;
  } else {
    throw UsageError("unknown rademacher mode '" + a.mode + "' (empirical | analytic)");
  }
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// spectral

struct SpectralArgs {
  std::string layers;  // "s,b,rho;s,b,rho;..."
  int max_width = 0;
  double x_frobenius = 0.0;
  double m = 0.0;
  std::string json_path;
};

int run_spectral(const SpectralArgs& a) {
  std::vector<complexity::SpectralLayer> layers;
  for (const auto& chunk : split(a.layers, ';')) {
    if (chunk.empty()) continue;
    const auto nums = parse_double_list(chunk, "spectral layer");
    if (nums.size() != 3)
      throw UsageError("each layer is <spectral bound>,<(2,1) norm bound>,<lipschitz>");
    layers.push_back({nums[0], nums[1], nums[2]});
  }
  if (layers.empty()) throw UsageError("spectral requires --layers");
  if (a.max_width <= 0) throw UsageError("spectral requires --max-width > 0");

  const complexity::SpectralComplexityReport report =
      complexity::spectral_complexity(layers, a.max_width);
  std::cout << "spectral complexity R = " << measures::format_double(report.value) << "\n";

  ordered_json doc;
  doc["command"] = "spectral";
  doc["max_width"] = a.max_width;
  doc["layers"] = ordered_json::array();
  for (const auto& l : layers)
    doc["layers"].push_back({{"spectral_bound", l.spectral_bound},
                             {"norm21_bound", l.norm21_bound},
                             {"lipschitz", l.lipschitz}});
  doc["value"] = report.value;
  if (a.x_frobenius > 0.0 && a.m > 0.0) {
    const double bound = complexity::spectral_rademacher_bound(a.x_frobenius, report.value, a.m);
    std::cout << "rademacher bound at m = " << measures::format_double(a.m) << ": "
              << measures::format_double(bound) << "\n";
    doc["x_frobenius"] = a.x_frobenius;
    doc["m"] = a.m;
    doc["rademacher_bound"] = bound;
  }
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// bound

struct BoundArgs {
  std::string tag;
  double rademacher = 0.0, output_bound = 1.0, delta = 0.0;
  int m = 0, param_count = 0, dim = 0;
  double epsilon = 0.0, modeling_error = 0.0;
  double lipschitz = 0.0, ck = 0.0, lambda = 0.0, inf_kl = 0.0;
  double x_frobenius = 0.0, spectral = 0.0;
  double neural_total = 0.0, alpha = 0.5;
  std::string json_path;
  CLI::App* sub = nullptr;  // for per-tag required-flag checks
};

std::string canonical_bound_tag(const std::string& tag) {
  static const std::map<std::string, std::string> names = {
      {"ipm", "ipm"},          {"ipm_generalization", "ipm"},
      {"relu", "relu"},        {"relu_rate", "relu"},
      {"parametric", "parametric"}, {"parametric_rate", "parametric"},
      {"mmd", "mmd"},          {"mmd_rate", "mmd"},
      {"kl", "kl"},            {"kl_compatibility", "kl"},
      {"spectral", "spectral"}, {"spectral_rate", "spectral"},
      {"fdiv", "fdiv"},        {"fdiv_generalization", "fdiv"},
      {"bl", "bl"},            {"bl_rate", "bl"}};
  const auto it = names.find(tag);
  if (it == names.end())
    throw UsageError("unknown bound tag '" + tag +
                     "' (ipm | relu | parametric | mmd | kl | spectral | fdiv | bl)");
  return it->second;
}

int run_bound(const BoundArgs& a) {
  const std::string tag = canonical_bound_tag(a.tag);
  const auto need = [&](std::initializer_list<const char*> flags) {
    std::string missing;
    for (const char* f : flags)
      if (a.sub->count(f) == 0) missing += std::string(missing.empty() ? "" : ", ") + f;
    if (!missing.empty())
      throw UsageError("bound " + tag + " requires " + missing);
  };

  ordered_json doc;
  doc["command"] = "bound";

  if (tag == "bl") {
    need({"--total", "--dim"});
    const double rate = bounds::bl_rate_from_neural(a.neural_total, a.dim, a.alpha);
    std::cout << "bounded-lipschitz rate = " << measures::format_double(rate) << "\n";
    doc["formula_tag"] = "bl_rate_from_neural";
    doc["inputs"] = {{"neural_total", a.neural_total}, {"dim", a.dim}, {"alpha", a.alpha}};
    doc["total"] = rate;
    emit(doc, a.json_path);
    return 0;
  }

  bounds::BoundReport report;
  if (tag == "ipm") {
    need({"--rademacher", "--delta", "--m"});
    report = bounds::ipm_generalization_bound(a.rademacher, a.output_bound, a.delta, a.m,
                                              a.epsilon, a.modeling_error);
  } else if (tag == "relu") {
    need({"--m", "--delta"});
    report = bounds::relu_rate_bound(a.m, a.delta, a.epsilon, a.modeling_error);
  } else if (tag == "parametric") {
    need({"--param-count", "--lipschitz", "--delta", "--m"});
    report = bounds::parametric_rate_bound(a.param_count, a.lipschitz, a.output_bound, a.delta,
                                           a.m, a.epsilon, a.modeling_error);
  } else if (tag == "mmd") {
    need({"--ck", "--delta", "--m"});
    report = bounds::mmd_rate_bound(a.ck, a.delta, a.m, a.epsilon, a.modeling_error);
  } else if (tag == "kl") {
    need({"--lambda", "--rademacher", "--delta", "--m"});
    report = bounds::kl_compatibility_bound(a.lambda, a.rademacher, a.output_bound, a.delta,
                                            a.m, a.epsilon, a.inf_kl);
  } else if (tag == "spectral") {
    need({"--x-frobenius", "--spectral-complexity", "--m", "--delta"});
    report = bounds::spectral_rate_bound(a.x_frobenius, a.spectral, a.output_bound, a.m,
                                         a.delta, a.epsilon, a.modeling_error);
  } else {  // fdiv
    need({"--rademacher", "--delta", "--m"});
    report = bounds::fdiv_generalization_bound(a.rademacher, a.output_bound, a.delta, a.m,
                                               a.epsilon, a.modeling_error);
  }

  if (std::abs(bounds::recompute_total(report) - report.total) >
      1e-9 * std::max(1.0, std::abs(report.total)))
    throw std::logic_error("bound report total does not match the sum of its terms");

  std::cout << "formula            = " << report.formula_tag << "\n"
            << "rademacher term    = " << measures::format_double(report.rademacher_term) << "\n"
            << "concentration term = " << measures::format_double(report.concentration_term)
            << "\n"
            << "modeling term      = " << measures::format_double(report.modeling_term) << "\n"
            << "epsilon term       = " << measures::format_double(report.epsilon_term) << "\n"
            << "total              = " << measures::format_double(report.total) << "\n"
            << "confidence         = " << measures::format_double(report.confidence) << "\n";

  doc.update(ordered_json::parse(bounds::bound_report_json(report)));
  if (tag == "relu" || tag == "parametric" || tag == "mmd") {
    const double c = (report.rademacher_term + report.concentration_term) *
                     std::sqrt(report.inputs.at("m"));
    std::cout << "rate constant C    = " << measures::format_double(c) << "\n";
    doc["C"] = c;
  }
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// span

struct SpanArgs {
  std::string mode;  // norm | decay | density
  std::string target;
  std::string members = "relu:64";
  std::string planted;
  std::string radii;
  std::string counts = "8,16,32,64,128,256";
  std::uint64_t seed = 0;
  std::string out;
  std::string json_path;
};

struct TargetTable {
  Mat points;
  Vec values;
};

TargetTable load_target(const std::string& path) {
  if (path.empty()) throw UsageError("span requires --target <csv>");
  if (!std::filesystem::exists(path))
    throw UsageError("target csv '" + path + "' does not exist");
  const Mat table = measures::read_csv_matrix(path);
  if (table.cols() < 2)
    throw UsageError("target csv needs coordinate columns plus a final value column");
  return {Mat(table.leftCols(table.cols() - 1)), Vec(table.col(table.cols() - 1))};
}

std::optional<Mat> load_planted(const std::string& path, int dim) {
  if (path.empty()) return std::nullopt;
  if (!std::filesystem::exists(path))
    throw UsageError("planted csv '" + path + "' does not exist");
  const Mat rows = measures::read_csv_matrix(path);
  if (rows.cols() != dim + 1)
    throw UsageError("planted rows must have dim+1 entries (direction and offset)");
  return rows;
}

// "relu:<count>[:<seed>]" | "monomial:<degree>"
span::Dictionary make_members(const std::string& spec, const Mat& points,
                              const Mat* planted, std::uint64_t default_seed) {
  const auto parts = split(spec, ':');
  const auto rows = span::all_rows(int(points.rows()));
  if (parts.front() == "relu") {
    if (parts.size() > 3) throw UsageError("relu members are relu:<count>[:<seed>]");
    const int count = parts.size() > 1 ? parse_int(parts[1], "relu member count") : 64;
    const std::uint64_t seed =
        parts.size() > 2 ? std::uint64_t(parse_int(parts[2], "relu member seed")) : default_seed;
    RngStream rng(seed, 0);
    return span::relu_dictionary(points, rows, count, rng, planted);
  }
  if (parts.front() == "monomial") {
    if (planted != nullptr)
      throw UsageError("planted neurons only combine with relu dictionaries");
    if (parts.size() != 2) throw UsageError("monomial members are monomial:<degree>");
    return span::monomial_dictionary(points, rows, parse_int(parts[1], "monomial degree"));
  }
  throw UsageError("unknown member spec '" + spec + "' (relu:<n>[:<seed>] | monomial:<d>)");
}

int run_span(const SpanArgs& a) {
  const TargetTable target = load_target(a.target);
  const std::optional<Mat> planted = load_planted(a.planted, int(target.points.cols()));
  const Mat* planted_ptr = planted ? &*planted : nullptr;

  ordered_json doc;
  doc["command"] = "span";
  doc["mode"] = a.mode;
  doc["target"] = a.target;
  doc["members"] = a.members;

  if (a.mode == "norm") {
    const span::Dictionary dict = make_members(a.members, target.points, planted_ptr, a.seed);
    const span::DecompositionResult result =
        span::f_variation_norm(Vec(dict.anchor_slice(target.values)), dict);
    int nonzero = 0;
    for (int k = 0; k < result.weights.size(); ++k)
      if (result.weights[k] != 0.0) ++nonzero;
    std::cout << "variation norm   = " << measures::format_double(result.norm) << "\n"
              << "offset           = " << measures::format_double(result.offset) << "\n"
              << "anchor residual  = " << measures::format_double(result.anchor_residual)
              << "\n"
              << "members          = " << dict.members() << " (" << nonzero << " active)\n";
    doc["norm"] = result.norm;
    doc["offset"] = result.offset;
    doc["anchor_residual"] = result.anchor_residual;
    doc["members_total"] = dict.members();
    doc["members_active"] = nonzero;
    doc["weights"] = std::vector<double>(result.weights.begin(), result.weights.end());
  } else if (a.mode == "decay") {
    if (a.radii.empty()) throw UsageError("span decay requires --radii r1,r2,...");
    const std::vector<double> rvals = parse_double_list(a.radii, "--radii");
    const span::Dictionary dict = make_members(a.members, target.points, planted_ptr, a.seed);
    const Vec radii = Eigen::Map<const Vec>(rvals.data(), long(rvals.size()));
    const span::DecayCurve curve = span::error_decay_curve(target.values, dict, radii);
    for (int k = 0; k < curve.radii.size(); ++k)
      std::cout << "r = " << measures::format_double(curve.radii[k])
                << "  sup error = " << measures::format_double(curve.epsilon[k]) << "\n";
    std::cout << "kappa = " << measures::format_double(curve.kappa)
              << "  fit residual = " << measures::format_double(curve.fit_residual)
              << (curve.exact ? "  (exact fit)" : "") << "\n";
    doc["radii"] = std::vector<double>(curve.radii.begin(), curve.radii.end());
    doc["epsilon"] = std::vector<double>(curve.epsilon.begin(), curve.epsilon.end());
    doc["kappa"] = curve.kappa;
    doc["fit_residual"] = curve.fit_residual;
    doc["exact"] = curve.exact;
    if (!a.out.empty()) {
      span::write_decay_csv(a.out, curve);
      std::cout << "wrote " << a.out << "\n";
      doc["csv"] = a.out;
    }
  } else if (a.mode == "density") {
    const std::vector<int> counts = parse_int_list(a.counts, "--counts");
    RngStream rng(a.seed, 0);
    const std::vector<span::DensityRow> rows =
        span::span_density_check(target.values, target.points, counts, rng, planted_ptr);
    doc["rows"] = ordered_json::array();
    for (const auto& row : rows) {
      std::cout << "n = " << row.n
                << "  sup error = " << measures::format_double(row.sup_error) << "\n";
      doc["rows"].push_back({{"n", row.n}, {"sup_error", row.sup_error}});
    }
    if (!a.out.empty()) {
      span::write_density_csv(a.out, rows);
      std::cout << "wrote " << a.out << "\n";
      doc["csv"] = a.out;
    }
  } else {
    throw UsageError("unknown span mode '" + a.mode + "' (norm | decay | density)");
  }
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// train

std::string short_benchmark_name(const std::string& name) {
  if (name == "e1" || name == "gaussian-e1") return "e1";
  if (name == "e2" || name == "mixture-e2") return "e2";
  throw UsageError("unknown benchmark '" + name + "' (e1 | e2)");
}

struct TrainArgs {
  std::string benchmark;
  std::string loss;
  std::string family;
  training::TrainConfig cfg;
  bool sgd = false;
  std::uint64_t data_seed = 1;
  std::string out = "trace.csv";
  std::string json_path;
};

ordered_json trace_summary_json(const training::TrainTrace& trace) {
  const training::TraceRow& last = trace.rows.back();
  ordered_json j;
  j["rows"] = trace.rows.size();
  j["final_step"] = last.step;
  j["final_gan_loss"] = last.gan_loss;
  j["final_test_ll"] = last.test_ll;
  j["final_param_hash"] = last.param_hash;
  j["wall_seconds"] = trace.wall_seconds;
  return j;
}

int run_train(const TrainArgs& args) {
  TrainArgs a = args;
  a.cfg.loss = training::loss_by_name(a.loss);
  a.cfg.rmsprop = !a.sgd;
  const std::string name = short_benchmark_name(a.benchmark);
  const measures::DatasetSplit data = measures::make_benchmark(
      name == "e1" ? "gaussian-e1" : "mixture-e2", a.data_seed);
  const measures::GenerativeModel init = experiment::default_init(name);

  training::TrainTrace trace;
  if (a.cfg.loss == training::LossKind::mle) {
    trace = training::train_mle(init, data, a.cfg);
  } else {
    const std::shared_ptr<const families::Family> critic =
        a.family.empty() ? experiment::default_critic(name, a.cfg.loss)
                         : parse_family(a.family);
    trace = training::train_gan(init, *critic, data, a.cfg);
  }
  training::write_trace_csv(a.out, trace);

  const training::TraceRow& last = trace.rows.back();
  std::cout << "loss = " << training::loss_name(a.cfg.loss) << ", steps = " << last.step
            << ", batch = " << a.cfg.batch << "\n"
            << "final gan loss = " << measures::format_double(last.gan_loss) << "\n"
            << "final test ll  = " << measures::format_double(last.test_ll) << "\n"
            << "wall seconds   = " << measures::format_double(trace.wall_seconds) << "\n"
            << "wrote " << a.out << "\n";

  ordered_json doc;
  doc["command"] = "train";
  doc["benchmark"] = name;
  doc["loss"] = training::loss_name(a.cfg.loss);
  doc["seed"] = a.cfg.seed;
  doc["data_seed"] = a.data_seed;
  doc["batch"] = a.cfg.batch;
  doc["generator_steps"] = a.cfg.generator_steps;
  doc["n_critic"] = a.cfg.n_critic;
  doc["disc_step"] = a.cfg.disc_step;
  doc["gen_step"] = a.cfg.gen_step;
  doc["rmsprop"] = a.cfg.rmsprop;
  doc["flow_lambda"] = a.cfg.flow_lambda;
  doc["eval_every"] = a.cfg.eval_every;
  doc["trace_csv"] = a.out;
  doc.update(trace_summary_json(trace));
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string name;
  std::string methods;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool no_plots = false;
  std::uint64_t data_seed = 1;
  training::TrainConfig base;
  bool sgd = false;
  std::string json_path;
};

int run_experiment_cmd(const ExperimentArgs& args) {
  ExperimentArgs a = args;
  const std::string name = short_benchmark_name(a.name);
  experiment::ExperimentConfig cfg;
  cfg.name = name;
  if (a.methods.empty())
    cfg.methods = name == "e1"
                      ? std::vector<std::string>{"mle", "qgan", "wgan_clip"}
                      : std::vector<std::string>{"mle", "wgan_clip", "flowgan"};
  else
    for (const auto& m : split(a.methods, ','))
      if (!m.empty()) cfg.methods.push_back(m);
  cfg.seeds = a.seeds.empty() ? std::vector<std::uint64_t>{0} : a.seeds;
  cfg.base = a.base;
  cfg.base.rmsprop = !a.sgd;
  cfg.out_dir = a.out_dir.empty() ? "runs-" + name : a.out_dir;
  cfg.emit_plots = !a.no_plots;
  cfg.data_seed = a.data_seed;

  const experiment::ExperimentResult result = experiment::run_experiment(cfg);

  std::cout << "truth test ll = " << measures::format_double(result.truth_test_ll) << "\n";
  ordered_json runs = ordered_json::array();
  for (const auto& run : result.runs) {
    std::cout << "method = " << run.method << ", seed = " << run.seed
              << ": final test ll = " << measures::format_double(run.final_test_ll)
              << ", final gan loss = " << measures::format_double(run.final_gan_loss);
    ordered_json rj;
    rj["method"] = run.method;
    rj["seed"] = run.seed;
    rj["trace_csv"] = run.trace_path;
    rj["final_test_ll"] = run.final_test_ll;
    rj["final_gan_loss"] = run.final_gan_loss;
    if (std::isfinite(run.sym_kl)) {
      std::cout << ", symmetric kl = " << measures::format_double(run.sym_kl);
      rj["symmetric_kl"] = run.sym_kl;
    }
    std::cout << "\n";
    runs.push_back(rj);
  }
  std::cout << "wrote " << result.summary_path << "\n";

  ordered_json doc;
  doc["command"] = "experiment";
  doc["name"] = name;
  doc["out_dir"] = cfg.out_dir;
  doc["data_seed"] = cfg.data_seed;
  doc["truth_test_ll"] = result.truth_test_ll;
  doc["summary_json"] = result.summary_path;
  doc["runs"] = runs;
  emit(doc, a.json_path);
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: re-derives every closed-form oracle the test suites freeze and
// checks the library against them.  Fast by construction; the heavyweight
// statistical reproductions live in the acceptance test binary.

struct CheckOutcome {
  std::string name;
  bool ok = true;
  std::string detail;
};

void expect(bool condition, const std::string& detail) {
  if (!condition) throw std::runtime_error(detail);
}

void expect_near(double got, double want, double tol, const std::string& what) {
  if (!(std::abs(got - want) <= tol))
    throw std::runtime_error(what + ": got " + measures::format_double(got) + ", want " +
                             measures::format_double(want) + " +- " +
                             measures::format_double(tol));
}

measures::EmpiricalMeasure dirac1(double x) {
  Mat p(1, 1);
  p(0, 0) = x;
  return measures::EmpiricalMeasure::uniform(p);
}

int run_selftest(const std::string& json_path) {
  std::vector<CheckOutcome> outcomes;
  const auto check = [&](const std::string& name, const std::function<void()>& body) {
    CheckOutcome out;
    out.name = name;
    try {
      body();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = e.what();
    }
    std::cout << (out.ok ? "ok   " : "FAIL ") << name
              << (out.ok ? "" : ": " + out.detail) << "\n";
    outcomes.push_back(out);
  };

  check("simplex solves a hand-checked program", [] {
    // max x + y subject to x + 2y <= 4, x <= 3 at x = (3, 0.5)
    numerics::LpProblem p = numerics::LpProblem::sized(2, 2);
    p.maximize = true;
    p.objective << 1.0, 1.0;
    p.constraints << 1.0, 2.0, 1.0, 0.0;
    p.senses = {numerics::Sense::le, numerics::Sense::le};
    p.rhs << 4.0, 3.0;
    const numerics::LpSolution sol = numerics::solve_lp(p);
    expect(sol.status == numerics::LpStatus::optimal, "expected an optimal status");
    expect_near(sol.value, 3.5, 1e-9, "objective");
    expect_near(sol.x[0], 3.0, 1e-9, "x");
    expect_near(sol.x[1], 0.5, 1e-9, "y");
  });

  check("benchmark truths match their anchors", [] {
    const measures::DatasetSplit e1 = measures::make_benchmark("gaussian-e1", 1);
    const double ll1 = training::evaluate_test_ll(e1.truth, e1.test);
    expect(ll1 > -0.125 && ll1 < -0.005, "sheared gaussian truth ll out of band");
    const Vec mean = e1.train.points.colwise().mean();
    expect_near(mean[0], 0.5, 0.02, "train mean x");
    expect_near(mean[1], -0.5, 0.02, "train mean y");
    const measures::DatasetSplit e2 = measures::make_benchmark("mixture-e2", 1);
    const double ll2 = training::evaluate_test_ll(e2.truth, e2.test);
    expect(ll2 > 3.50 && ll2 < 3.70, "ring mixture truth ll out of band");
  });

  check("mmd matches the two-point closed form", [] {
    const double got = metrics::mmd(dirac1(0.0), dirac1(1.0), 1.0).value;
    expect_near(got, std::sqrt(2.0 - 2.0 * std::exp(-0.5)), 1e-12, "mmd");
  });

  check("transport lps match hand-solved cases", [] {
    expect_near(metrics::bl_distance(dirac1(0.0), dirac1(1.0)).value, 1.0, 1e-9, "bl short");
    expect_near(metrics::bl_distance(dirac1(0.0), dirac1(3.0)).value, 2.0, 1e-9, "bl capped");
    expect_near(metrics::w1_distance(dirac1(0.0), dirac1(3.0)).value, 3.0, 1e-9, "w1");
  });

  check("monte-carlo symmetric kl sits on the closed form", [] {
    measures::GaussianModel a;
    a.shear = 0.0;
    a.log_scale = Eigen::Vector2d::Zero();
    a.bias = Eigen::Vector2d::Zero();
    measures::GaussianModel b = a;
    b.bias << 1.0, 0.0;
    const double closed = metrics::kl_gaussian_closed(a, b) + metrics::kl_gaussian_closed(b, a);
    expect_near(closed, 1.0, 1e-12, "unit-shift closed form");
    RngStream rng(9, 0);
    const metrics::MetricEstimate mc = metrics::symmetric_kl(a, b, 20000, rng);
    expect(std::abs(mc.value - closed) <= 4.0 * mc.standard_error,
           "monte carlo outside four standard errors");
  });

  check("neural distance vanishes on identical samples", [] {
    RngStream rng(4, 0);
    const measures::EmpiricalMeasure p =
        measures::EmpiricalMeasure::uniform(rng.normal_vec(32).reshaped(16, 2));
    families::SingleNeuronFamily fam(2);
    metrics::OptimizerConfig cfg;
    cfg.restarts = 2;
    cfg.steps = 40;
    expect(metrics::neural_distance(p, p, fam, cfg).value <= 1e-12,
           "self-distance not zero");
  });

  check("analytic rademacher constants", [] {
    using complexity::RademacherKind;
    expect_near(complexity::rademacher_bound_analytic(RademacherKind::relu_neuron, 32),
                2.0 * std::sqrt(2.0) / std::sqrt(32.0), 1e-12, "relu neuron");
    expect_near(complexity::rademacher_bound_analytic(RademacherKind::rkhs, 4, 1.0), 1.0,
                1e-12, "rkhs");
    expect_near(complexity::rademacher_bound_analytic(RademacherKind::bounded_lipschitz, 16, 4),
                0.5, 1e-12, "bounded lipschitz");
    expect_near(complexity::rademacher_bound_analytic(RademacherKind::total_variation, 7), 2.0,
                1e-12, "total variation");
  });

  check("spectral complexity closed forms", [] {
    const complexity::SpectralComplexityReport r =
        complexity::spectral_complexity({{2.0, 3.0, 1.0}}, 4);
    expect_near(r.value, 3.0 * std::sqrt(std::log(32.0)), 1e-12, "one-layer R");
    expect_near(complexity::spectral_rademacher_bound(1.0, 1.0, 3.0), 8.0, 1e-12,
                "bound at the log knee");
  });

  check("rate-bound constants match their closed forms", [] {
    const double delta = std::exp(-1.0);
    const auto constant = [](const bounds::BoundReport& r) {
      return (r.rademacher_term + r.concentration_term) * std::sqrt(r.inputs.at("m"));
    };
    expect_near(constant(bounds::relu_rate_bound(10000, delta, 0, 0)),
                4.0 * std::sqrt(2.0) + 4.0, 1e-9, "relu constant");
    expect_near(constant(bounds::parametric_rate_bound(2, 1.0, 1.0, delta, 1, 0, 0)),
                32.0 * std::sqrt(2.0 * std::numbers::pi) + 2.0 * std::sqrt(2.0), 1e-9,
                "parametric constant");
    expect_near(constant(bounds::mmd_rate_bound(1.0, delta, 10000, 0, 0)),
                2.0 * (2.0 + std::sqrt(2.0)), 1e-9, "kernel constant");
  });

  check("absolute value has variation norm two", [] {
    Mat planted(2, 2);
    planted << 1.0, 0.0, -1.0, 0.0;  // relu(x) and relu(-x)
    const Mat grid = span::grid_1d(-1.0, 1.0, 11);
    RngStream rng(0, 0);
    const span::Dictionary dict =
        span::relu_dictionary(grid, span::all_rows(11), 0, rng, &planted);
    const Vec target = grid.col(0).cwiseAbs();
    expect_near(span::f_variation_norm(target, dict).norm, 2.0, 1e-9, "norm of |x|");
  });

  check("decay exponent recovers a planted power law", [] {
    Vec radii(5), eps(5);
    radii << 1.0, 2.0, 4.0, 8.0, 16.0;
    for (int k = 0; k < 5; ++k) eps[k] = std::pow(radii[k], -2.0);
    const span::DecayFit fit = span::fit_decay_exponent(radii, eps);
    expect_near(fit.kappa, 2.0, 1e-6, "kappa");
  });

  check("pearson point masses match the grid oracle", [] {
    const families::WrappedFamily fam(std::make_shared<families::QuadraticFamily>(1, 1.0, 1),
                                      metrics::pearson_pair());
    const double got =
        metrics::neural_f_divergence_exact(dirac1(0.0), dirac1(1.0), fam).value;
    expect_near(got, 0.75, 1e-9, "pearson two-point divergence");
  });

  check("f-divergence of identical samples is zero", [] {
    RngStream rng(11, 0);
    const measures::EmpiricalMeasure p =
        measures::EmpiricalMeasure::uniform(rng.normal_vec(20).reshaped(10, 2));
    const families::WrappedFamily fam(std::make_shared<families::QuadraticFamily>(2, 0.05),
                                      metrics::pearson_pair());
    metrics::OptimizerConfig cfg;
    cfg.restarts = 2;
    cfg.steps = 40;
    const double v = metrics::neural_f_divergence(p, p, fam, cfg).value;
    expect(v >= 0.0 && v <= 1e-12, "self-divergence not pinned at zero");
  });

  check("training replays bitwise and flow at lambda zero matches wgan", [] {
    const measures::DatasetSplit data = measures::make_benchmark("gaussian-e1", 3);
    const measures::GenerativeModel init = experiment::default_init("e1");
    const auto critic = std::make_shared<families::QuadraticFamily>(2, 0.05);
    training::TrainConfig cfg;
    cfg.loss = training::LossKind::wgan_clip;
    cfg.batch = 16;
    cfg.generator_steps = 10;
    cfg.eval_every = 5;
    cfg.seed = 5;
    const training::TrainTrace a = training::train_gan(init, *critic, data, cfg);
    const training::TrainTrace b = training::train_gan(init, *critic, data, cfg);
    training::TrainConfig flow = cfg;
    flow.loss = training::LossKind::flowgan;
    flow.flow_lambda = 0.0;
    const training::TrainTrace c = training::train_gan(init, *critic, data, flow);
    expect(a.rows.back().step == 10, "trace must end at the final step");
    expect(a.rows.back().param_hash == b.rows.back().param_hash,
           "identical runs diverged");
    expect(a.rows.back().param_hash == c.rows.back().param_hash,
           "lambda zero flow diverged from wgan");
  });

  int failed = 0;
  for (const auto& out : outcomes)
    if (!out.ok) ++failed;
  std::cout << "selftest: " << (outcomes.size() - failed) << "/" << outcomes.size()
            << " checks passed\n";

  ordered_json doc;
  doc["command"] = "selftest";
  doc["checks"] = ordered_json::array();
  for (const auto& out : outcomes) {
    ordered_json c;
    c["name"] = out.name;
    c["ok"] = out.ok;
    if (!out.ok) c["detail"] = out.detail;
    doc["checks"].push_back(c);
  }
  doc["passed"] = outcomes.size() - failed;
  doc["failed"] = failed;
  emit(doc, json_path);
  return failed == 0 ? 0 : 2;
}

void add_optimizer_flags(CLI::App* sub, metrics::OptimizerConfig& opt, bool& sgd) {
  sub->add_option("--restarts", opt.restarts, "random optimizer restarts");
  sub->add_option("--opt-steps", opt.steps, "ascent steps per restart");
  sub->add_option("--step-size", opt.step_size, "ascent step size");
  sub->add_option("--opt-seed", opt.seed, "optimizer rng seed");
  sub->add_flag("--sgd", sgd, "plain sign-free ascent instead of rmsprop");
}

void add_train_flags(CLI::App* sub, training::TrainConfig& cfg, bool& sgd) {
  sub->add_option("--batch", cfg.batch, "minibatch size");
  sub->add_option("--steps", cfg.generator_steps, "generator steps");
  sub->add_option("--n-critic", cfg.n_critic, "critic steps per generator step");
  sub->add_option("--disc-step", cfg.disc_step, "critic step size");
  sub->add_option("--gen-step", cfg.gen_step, "generator step size");
  sub->add_option("--lambda", cfg.flow_lambda, "likelihood weight for flowgan");
  sub->add_option("--eval-every", cfg.eval_every, "steps between trace rows");
  sub->add_flag("--sgd", sgd, "plain gradient steps instead of rmsprop");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distances, complexities, generalization bounds, and toy gan training"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; [section] names select subcommands");

  MetricArgs metric;
  CLI::App* metric_cmd = app.add_subcommand("metric", "estimate a distance between two samples");
  metric_cmd->add_option("kind", metric.kind, "neural | mmd | bl | w1 | symkl | fdiv")
      ->required();
  metric_cmd->add_option("a", metric.a, "csv path or benchmark name")->required();
  metric_cmd->add_option("b", metric.b, "csv path or benchmark name")->required();
  metric_cmd->add_option("--family", metric.family, "critic family descriptor");
  metric_cmd->add_option("--pair", metric.pair, "conjugate pair for fdiv (js | pearson)");
  metric_cmd->add_option("--bandwidth", metric.bandwidth, "gaussian kernel bandwidth");
  metric_cmd->add_flag("--unbiased", metric.unbiased, "u-statistic mmd estimator");
  metric_cmd->add_flag("--exact", metric.exact, "grid search instead of ascent (low dim)");
  metric_cmd->add_option("--grid-points", metric.grid_points, "grid resolution for --exact");
  metric_cmd->add_option("--mc-samples", metric.mc_samples, "draws for symkl");
  metric_cmd->add_option("--max-rows", metric.max_rows,
                         "cap rows per source, 0 keeps everything");
  metric_cmd->add_option("--data-seed", metric.data_seed, "benchmark generation seed");
  add_optimizer_flags(metric_cmd, metric.opt, metric.sgd);
  metric_cmd->add_option("--json", metric.json_path, "also write the json document here");

  RademacherArgs rad;
  CLI::App* rad_cmd = app.add_subcommand("rademacher", "estimate or bound complexity");
  rad_cmd->add_option("mode", rad.mode, "empirical | analytic")->required();
  rad_cmd->add_option("--source", rad.source, "csv path or benchmark name");
  rad_cmd->add_option("--family", rad.family, "family descriptor for empirical mode");
  rad_cmd->add_option("--kind", rad.kind,
                      "relu_neuron | rkhs | bounded_lipschitz | total_variation");
  rad_cmd->add_option("--trials", rad.trials, "sign draws for empirical mode");
  rad_cmd->add_option("--m", rad.m, "sample count (analytic) or row cap (empirical)");
  rad_cmd->add_option("--param", rad.param, "kernel bound or dimension for analytic kinds");
  rad_cmd->add_option("--data-seed", rad.data_seed, "benchmark generation seed");
  add_optimizer_flags(rad_cmd, rad.opt, rad.sgd);
  rad_cmd->add_option("--json", rad.json_path, "also write the json document here");

  SpectralArgs spectral;
  CLI::App* spectral_cmd = app.add_subcommand("spectral", "layer-norm network complexity");
  spectral_cmd->add_option("--layers", spectral.layers,
                           "semicolon list of <spectral>,<norm21>,<lipschitz>")
      ->required();
  spectral_cmd->add_option("--max-width", spectral.max_width, "largest layer width");
  spectral_cmd->add_option("--x-frobenius", spectral.x_frobenius, "data frobenius norm");
  spectral_cmd->add_option("--m", spectral.m, "sample count for the bound");
  spectral_cmd->add_option("--json", spectral.json_path, "also write the json document here");

  BoundArgs bound;
  CLI::App* bound_cmd = app.add_subcommand("bound", "generalization-bound calculators");
  bound_cmd->add_option("tag", bound.tag,
                        "ipm | relu | parametric | mmd | kl | spectral | fdiv | bl")
      ->required();
  bound_cmd->add_option("--rademacher", bound.rademacher, "rademacher complexity input");
  bound_cmd->add_option("--output-bound", bound.output_bound, "sup norm of the class");
  bound_cmd->add_option("--delta", bound.delta, "failure probability");
  bound_cmd->add_option("--m", bound.m, "sample count");
  bound_cmd->add_option("--epsilon", bound.epsilon, "optimization slack");
  bound_cmd->add_option("--modeling-error", bound.modeling_error, "best loss in the class");
  bound_cmd->add_option("--param-count", bound.param_count, "parameter count (parametric)");
  bound_cmd->add_option("--lipschitz", bound.lipschitz, "parameter lipschitz constant");
  bound_cmd->add_option("--ck", bound.ck, "kernel sup bound (mmd)");
  bound_cmd->add_option("--lambda", bound.lambda, "compatibility coefficient (kl)");
  bound_cmd->add_option("--inf-kl", bound.inf_kl, "best kl inside the generator class");
  bound_cmd->add_option("--x-frobenius", bound.x_frobenius, "data frobenius norm (spectral)");
  bound_cmd->add_option("--spectral-complexity", bound.spectral, "network complexity R");
  bound_cmd->add_option("--total", bound.neural_total, "neural distance bound (bl)");
  bound_cmd->add_option("--dim", bound.dim, "data dimension (bl)");
  bound_cmd->add_option("--alpha", bound.alpha, "interpolation exponent (bl)");
  bound_cmd->add_option("--json", bound.json_path, "also write the json document here");
  bound.sub = bound_cmd;

  SpanArgs span_args;
  CLI::App* span_cmd = app.add_subcommand("span", "variation-norm diagnostics");
  span_cmd->add_option("mode", span_args.mode, "norm | decay | density")->required();
  span_cmd->add_option("--target", span_args.target, "csv of coordinates plus a value column");
  span_cmd->add_option("--members", span_args.members,
                       "dictionary spec: relu:<n>[:<seed>] | monomial:<degree>");
  span_cmd->add_option("--planted", span_args.planted, "csv of fixed relu directions");
  span_cmd->add_option("--radii", span_args.radii, "comma list of coefficient budgets");
  span_cmd->add_option("--counts", span_args.counts, "comma list of neuron counts");
  span_cmd->add_option("--seed", span_args.seed, "rng seed for random members");
  span_cmd->add_option("--out", span_args.out, "csv output path for decay/density");
  span_cmd->add_option("--json", span_args.json_path, "also write the json document here");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "one training run on a benchmark");
  train_cmd->add_option("benchmark", train.benchmark, "e1 | e2")->required();
  train_cmd->add_option("--loss", train.loss, "wgan_clip | qgan | fgan_js | mle | flowgan")
      ->required();
  train_cmd->add_option("--family", train.family, "critic family override");
  train_cmd->add_option("--seed", train.cfg.seed, "training rng seed");
  train_cmd->add_option("--data-seed", train.data_seed, "benchmark generation seed");
  add_train_flags(train_cmd, train.cfg, train.sgd);
  train_cmd->add_option("--out", train.out, "trace csv path");
  train_cmd->add_option("--json", train.json_path, "also write the json document here");

  ExperimentArgs exp;
  CLI::App* exp_cmd = app.add_subcommand("experiment", "run a benchmark across methods/seeds");
  exp_cmd->add_option("name", exp.name, "e1 | e2")->required();
  exp_cmd->add_option("--methods", exp.methods, "comma list of losses (default per benchmark)");
  exp_cmd->add_option("--seed,--seeds", exp.seeds, "training seeds, repeatable or comma list")
      ->delimiter(',');
  exp_cmd->add_option("--out", exp.out_dir, "output directory (default runs-<name>)");
  exp_cmd->add_flag("--no-plots", exp.no_plots, "skip svg charts");
  exp_cmd->add_option("--data-seed", exp.data_seed, "benchmark generation seed");
  add_train_flags(exp_cmd, exp.base, exp.sgd);
  exp_cmd->add_option("--json", exp.json_path, "also write the json document here");

  std::string selftest_json;
  CLI::App* selftest_cmd = app.add_subcommand("selftest", "fast oracle checks, exit 0 or 2");
  selftest_cmd->add_option("--json", selftest_json, "also write the json document here");

  // --config may follow the subcommand name; unmatched options climb to the app
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(metric_cmd)) return run_metric(metric);
    if (app.got_subcommand(rad_cmd)) return run_rademacher(rad);
    if (app.got_subcommand(spectral_cmd)) return run_spectral(spectral);
    if (app.got_subcommand(bound_cmd)) return run_bound(bound);
    if (app.got_subcommand(span_cmd)) return run_span(span_args);
    if (app.got_subcommand(train_cmd)) return run_train(train);
    if (app.got_subcommand(exp_cmd)) return run_experiment_cmd(exp);
    if (app.got_subcommand(selftest_cmd)) return run_selftest(selftest_json);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ScaleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DegenerateDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NotInSpanError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
