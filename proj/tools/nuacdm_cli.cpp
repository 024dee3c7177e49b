#include <cstdio>
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nuacdm/acceptance.hpp>
#include <nuacdm/nuacdm.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nuacdm;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;
constexpr int kIo = 3;

// Parameter labels for summary.csv; shortest form, not round-trip.
std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

struct GenArgs {
  std::string kind;
  Index m = 300;
  Index n = 100;
  double r = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

struct SolveArgs {
  std::string problem;
  std::string algo;
  double beta = 0.0;
  double lambda = 1e-3;
  double lambda2 = 0.0;
  double epochs = 50.0;
  std::uint64_t seed = 0;
  std::string data;
  std::string trace_out;
  Index m = 300;
  Index n = 100;
  double r = 0.1;
};

struct BenchArgs {
  std::string experiment;
  std::uint64_t seeds = 10;
  std::string out;
  unsigned jobs = 1;
  Index m = 300;
  Index n = 100;
  double r = 0.1;
  double eps = 1e-8;
  double epochs = 50.0;
  double lambda = 1e-3;
  std::string variant = "ridge";
  std::string data;
};

struct SpeedupArgs {
  std::vector<double> r_list;
  Index m = 300;
  Index n = 100;
  std::uint64_t seed = 0;
  std::uint64_t measure_seeds = 0;
  unsigned jobs = 1;
};

struct CheckArgs {
  unsigned jobs = 1;
  std::vector<int> only;
};

std::vector<std::uint64_t> seed_list(std::uint64_t k) {
  std::vector<std::uint64_t> s(k);
  for (std::uint64_t i = 0; i < k; ++i) s[i] = i;
  return s;
}

ErmVariant parse_variant(const std::string& name) {
  if (name == "ridge") return ErmVariant::ridge;
  if (name == "lasso") return ErmVariant::smoothed_lasso;
  if (name == "penalty") return ErmVariant::l1l2_penalty;
  throw InvalidArgument("unknown ERM problem '" + name + "'");
}

// Dataset with a fraction r of rows at norm 10 and the rest at norm 1.
Dataset default_dataset(Index n, Index d, double r, std::uint64_t seed) {
  return gen_skewed_dataset(n, d, norm_profile::two_level(n, r, 10.0, 1.0), seed);
}

std::optional<Vector> read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    if (!nuacdm::detail::parse_double(tok, v)) throw ParseError("bad number '" + tok + "' in " + path, 0, 0);
    vals.push_back(v);
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

void write_vector(const Vector& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void emit_traces(const std::vector<LabeledTrace>& traces, const std::string& path) {
  if (path.empty()) {
    write_trace(std::cout, traces);
  } else {
    write_trace(traces, path);
  }
}

json run_gen(const GenArgs& a) {
  require(a.m >= 1 && a.n >= 1, "gen: --m and --n must be positive");
  if (a.kind == "linsys") {
    const LinearSystem sys = gen_linear_system(a.m, a.n, a.r, a.seed);
    write_libsvm(a.out, Dataset{sys.a, sys.b});
    write_vector(sys.x_star, a.out + ".xstar");
  } else {
    write_libsvm(a.out, default_dataset(a.m, a.n, a.r, a.seed));
  }
  return {{"kind", a.kind}, {"m", a.m}, {"n", a.n}, {"r", a.r}, {"out", a.out}};
}

json run_solve(const SolveArgs& a) {
  SolverConfig cfg;
  cfg.seed = a.seed;
  json info;
  std::vector<LabeledTrace> traces;
  if (a.problem == "kaczmarz") {
    LinearSystem sys;
    if (a.data.empty()) {
      sys = gen_linear_system(a.m, a.n, a.r, stream_seed(a.seed, 0));
    } else {
      const Dataset ds = parse_libsvm(a.data);
      sys.a = ds.features;
      sys.b = ds.labels;
      if (auto xs = read_vector(a.data + ".xstar")) sys.x_star = *xs;
    }
    const Index m = sys.a.rows();
    const Index n = sys.a.cols();
    const bool have_star = sys.x_star.size() == n;
    cfg.iters = static_cast<std::int64_t>(a.epochs * static_cast<double>(m));
    SolverResult res;
    if (a.algo == algo::kaczmarz) {
      std::optional<Vector> xs;
      if (have_star) xs = sys.x_star;
      res = kaczmarz(sys.a, sys.b, Vector::Zero(n), cfg, xs);
    } else {
      const auto prob = build_kaczmarz(sys.a, sys.b, a.beta);
      if (have_star) {
        const Vector xs = sys.x_star;
        const double d0 = xs.squaredNorm() > 0.0 ? xs.squaredNorm() : 1.0;
        cfg.distance = [xs, d0](const OracleState& st) {
          return (KaczmarzQuadratic::recovered_solution(st) - xs).squaredNorm() / d0;
        };
      } else {
        cfg.f_star = reference_minimum(prob.oracle).value;
      }
      res = run_algorithm(a.algo, prob.oracle, prob.profile, Vector::Zero(m), cfg);
    }
    info = {{"m", m}, {"n", n}};
    traces.push_back({a.algo, a.seed, std::move(res.trace)});
  } else {
    const ErmVariant variant = parse_variant(a.problem);
    if (a.algo == algo::kaczmarz) throw InvalidArgument("--algo kaczmarz needs --problem kaczmarz");
    const Dataset ds = a.data.empty() ? default_dataset(a.m, a.n, a.r, stream_seed(a.seed, 0)) : parse_libsvm(a.data);
    const auto prob = build_erm(ds, variant, a.lambda, a.lambda2, a.beta);
    cfg.f_star = reference_minimum(prob.oracle).value;
    const Index n = prob.oracle.dim();
    cfg.iters = static_cast<std::int64_t>(a.epochs * static_cast<double>(n));
    SolverResult res = run_algorithm(a.algo, prob.oracle, prob.profile, Vector::Zero(n), cfg);
    info = {{"n", n}, {"d", ds.features.cols()}, {"lambda", a.lambda}, {"f_star", *cfg.f_star}};
    traces.push_back({a.algo, a.seed, std::move(res.trace)});
  }
  emit_traces(traces, a.trace_out);
  info.update({{"problem", a.problem}, {"algo", a.algo}, {"beta", a.beta}, {"epochs", a.epochs},
               {"final_value", traces.front().trace.back().value}});
  return info;
}

json run_bench(const BenchArgs& a) {
  require(a.seeds >= 1, "bench: --seeds must be at least 1");
  fs::create_directories(a.out);
  const auto seeds = seed_list(a.seeds);
  std::vector<SummaryRow> summary;
  std::vector<LabeledTrace> traces;
  if (a.experiment == "kaczmarz-race") {
    RaceOptions opt;
    opt.jobs = a.jobs;
    const RaceResult race = run_kaczmarz_race(a.m, a.n, a.r, seeds, a.eps, opt);
    for (const auto& al : race.algos) {
      summary.push_back({a.experiment, al.algo, "r=" + label(a.r), al.median_epochs(), race.theory_speedup});
    }
    traces = race.all_traces();
  } else if (a.experiment == "erm-race") {
    const Dataset ds = a.data.empty() ? default_dataset(a.m, a.n, a.r, 0) : parse_libsvm(a.data);
    ErmRaceSpec spec;
    spec.variant = parse_variant(a.variant);
    spec.lambda = a.lambda;
    spec.seeds = seeds;
    spec.epochs = a.epochs;
    spec.jobs = a.jobs;
    spec.algos = {algo::nu_acdm, algo::acdm, algo::rcdm, algo::gd};
    const RaceResult race = run_erm_race(ds, spec);
    for (const auto& al : race.algos) {
      summary.push_back({a.experiment, al.algo, a.variant + ":lambda=" + label(a.lambda), al.median_epochs(),
                         race.theory_speedup});
    }
    traces = race.all_traces();
  } else {
    const Dataset ds = a.data.empty() ? default_dataset(a.m, a.n, a.r, 0) : parse_libsvm(a.data);
    BetaSweepSpec spec;
    spec.lambda = a.lambda;
    spec.seeds = seeds;
    spec.jobs = a.jobs;
    // bound checks at the default budgets plus one --epochs run for the traces
    spec.iters.push_back(std::max<std::int64_t>(1000, static_cast<std::int64_t>(a.epochs * ds.features.rows())));
    const auto entries = beta_sweep(ds, spec);
    for (const auto& e : entries) {
      std::vector<double> epochs;
      for (const auto& t : e.traces) epochs.push_back(nuacdm::detail::normalized_epochs_to(t.trace, a.eps));
      const auto profile = build_penalty_dual(ds.features, ds.labels, a.lambda, e.beta).profile;
      summary.push_back({a.experiment, algo::nu_acdm_ns, "beta=" + label(e.beta), median(epochs),
                         speedup_factor(profile)});
      traces.insert(traces.end(), e.traces.begin(), e.traces.end());
    }
  }
  write_trace(traces, (fs::path(a.out) / (a.experiment + "_traces.csv")).string());
  write_summary(summary, (fs::path(a.out) / "summary.csv").string());
  return {{"experiment", a.experiment}, {"seeds", a.seeds}, {"jobs", a.jobs}, {"out", a.out}};
}

json run_speedup(const SpeedupArgs& a) {
  SpeedupOptions opt;
  opt.m = a.m;
  opt.n = a.n;
  opt.seed = a.seed;
  opt.measure_seeds = seed_list(a.measure_seeds);
  opt.race.jobs = a.jobs;
  write_speedup_csv(std::cout, speedup_table(a.r_list, opt));
  return {{"r_list", a.r_list}, {"m", a.m}, {"n", a.n}, {"measure_seeds", a.measure_seeds}};
}

json run_check(const CheckArgs& a, bool& all_passed) {
  AcceptanceOptions opt;
  opt.jobs = a.jobs;
  const auto results = run_acceptance(opt, a.only);
  all_passed = true;
  json failed = json::array();
  for (const auto& r : results) {
    std::cout << format_result(r) << std::endl;
    if (!r.passed) {
      all_passed = false;
      failed.push_back(r.id);
    }
  }
  return {{"criteria", results.size()}, {"failed", failed}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerated coordinate descent with non-uniform sampling"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a linear system or a regression dataset (LibSVM)");
  gen_cmd->add_option("--kind", gen.kind, "linsys or dataset")->required()->check(CLI::IsMember({"linsys", "dataset"}));
  gen_cmd->add_option("--m", gen.m, "rows / examples")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "columns / features")->capture_default_str();
  gen_cmd->add_option("--r", gen.r, "fraction of rows with norm 10")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output path")->required();

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run one algorithm and write its trace");
  solve_cmd->add_option("--problem", solve.problem)->required()->check(
      CLI::IsMember({"kaczmarz", "ridge", "lasso", "penalty"}));
  solve_cmd->add_option("--algo", solve.algo)->required()->check(
      CLI::IsMember({"nu-acdm", "nu-acdm-ns", "acdm", "rcdm", "kaczmarz", "gd"}));
  solve_cmd->add_option("--beta", solve.beta)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  solve_cmd->add_option("--lambda", solve.lambda)->capture_default_str();
  solve_cmd->add_option("--lambda2", solve.lambda2, "smoothing for lasso (0: lambda / 10)")->capture_default_str();
  solve_cmd->add_option("--epochs", solve.epochs)->capture_default_str();
  solve_cmd->add_option("--seed", solve.seed)->capture_default_str();
  solve_cmd->add_option("--data", solve.data, "LibSVM file (default: generated)");
  solve_cmd->add_option("--trace-out", solve.trace_out, "trace CSV (default: stdout)");
  solve_cmd->add_option("--m", solve.m, "generated rows / examples")->capture_default_str();
  solve_cmd->add_option("--n", solve.n, "generated columns / features")->capture_default_str();
  solve_cmd->add_option("--r", solve.r, "generated fraction of norm-10 rows")->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment; write traces and summary.csv");
  bench_cmd->add_option("--experiment", bench.experiment)->required()->check(
      CLI::IsMember({"kaczmarz-race", "erm-race", "beta-sweep"}));
  bench_cmd->add_option("--seeds", bench.seeds)->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "output directory")->required();
  bench_cmd->add_option("--jobs", bench.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--m", bench.m)->capture_default_str();
  bench_cmd->add_option("--n", bench.n)->capture_default_str();
  bench_cmd->add_option("--r", bench.r)->capture_default_str();
  bench_cmd->add_option("--eps", bench.eps)->capture_default_str();
  bench_cmd->add_option("--epochs", bench.epochs)->capture_default_str();
  bench_cmd->add_option("--lambda", bench.lambda)->capture_default_str();
  bench_cmd->add_option("--variant", bench.variant)->capture_default_str()->check(
      CLI::IsMember({"ridge", "lasso", "penalty"}));
  bench_cmd->add_option("--data", bench.data, "LibSVM file for the ERM experiments");

  SpeedupArgs speed;
  auto* speed_cmd = app.add_subcommand("speedup", "Theoretical (and optionally measured) speed-up factors");
  speed_cmd->add_option("--r-list", speed.r_list)->required()->check(CLI::Range(0.0, 1.0));
  speed_cmd->add_option("--m", speed.m)->capture_default_str();
  speed_cmd->add_option("--n", speed.n)->capture_default_str();
  speed_cmd->add_option("--seed", speed.seed)->capture_default_str();
  speed_cmd->add_option("--measure-seeds", speed.measure_seeds, "seeds for the measured column")->capture_default_str();
  speed_cmd->add_option("--jobs", speed.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Run the acceptance suite");
  check_cmd->add_option("--jobs", check.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  check_cmd->add_option("--only", check.only, "criterion ids")->check(CLI::Range(1, 12));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  json meta = {{"rng", kRngName}};
  int code = kOk;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (*gen_cmd) {
      meta["subcommand"] = "gen";
      meta["seed"] = gen.seed;
      meta["params"] = run_gen(gen);
    } else if (*solve_cmd) {
      meta["subcommand"] = "solve";
      meta["seed"] = solve.seed;
      meta["params"] = run_solve(solve);
    } else if (*bench_cmd) {
      meta["subcommand"] = "bench";
      meta["params"] = run_bench(bench);
      meta["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else if (*speed_cmd) {
      meta["subcommand"] = "speedup";
      meta["seed"] = speed.seed;
      meta["params"] = run_speedup(speed);
    } else {
      meta["subcommand"] = "check";
      bool passed = false;
      meta["params"] = run_check(check, passed);
      if (!passed) code = kFailed;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    meta["error"] = e.what();
    code = kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta["error"] = e.what();
    code = kFailed;
  }
  meta["exit_code"] = code;
  std::cerr << meta.dump() << std::endl;
  return code;
}
