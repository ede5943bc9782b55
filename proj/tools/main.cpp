// noisyopt command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 budget or infeasibility,
// 1 anything else (I/O).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisyopt/harness.hpp"
#include "noisyopt/kv_config.hpp"
#include "noisyopt/optimizer.hpp"
#include "noisyopt/oracle.hpp"
#include "noisyopt/rng.hpp"
#include "noisyopt/testbed.hpp"

namespace {

using namespace noisyopt;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

std::string num(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string join(PointView x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ' ';
    s += num(x[i]);
  }
  return s;
}

// Flags shared by every subcommand. Values stay as text and go through the
// same KvConfig path as a config file, so both report errors the same way.
struct CommonFlags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::string config_path;
  std::string out;
  bool prescreen = false;
  CLI::Option* prescreen_flag = nullptr;

  void attach(CLI::App* app) {
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"seed", "master seed"},
        {"n", "query budget"},
        {"d", "dimension"},
        {"alpha", "smoothness order"},
        {"M", "smoothness constant"},
        {"noise-sd", "noise standard deviation"},
        {"grid-size", "number of design grid points"},
        {"family", "power | convex | constant | two-valley"},
        {"beta", "growth exponent (power family, rates)"},
        {"a0", "scale of the power family"},
        {"sigma", "curvature of the convex family"},
        {"delta", "confidence level of each interval"},
    };
    for (const auto& [name, help] : flags) {
      options.emplace_back(name, app->add_option("--" + name, values[name], help));
    }
    app->add_option("--config", config_path, "key = value config file");
    app->add_option("--out", out, "output file");
    prescreen_flag = app->add_flag("--prescreen", prescreen, "enable pre-screening");
  }

  KvConfig load() const {
    KvConfig cfg;
    if (!config_path.empty()) cfg = KvConfig::from_file(config_path);
    for (const auto& [name, opt] : options) {
      if (opt->count() == 0) continue;
      std::string key = name;
      for (auto& c : key) c = c == '-' ? '_' : c;
      cfg.set(key, values.at(name));
    }
    if (prescreen_flag->count() > 0) cfg.set("prescreen", prescreen ? "true" : "false");
    return cfg;
  }
};

void emit(const std::string& text, const std::string& path) {
  std::cout << text;
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  f << text;
  if (!f) throw Error(ErrorCode::kIoFailure, "write failed: " + path);
}

struct SingleRun {
  FunctionSpec f;
  OptimizerConfig cfg;
  double noise_sd = 1.0;
  PointSet grid;
  RngStream stream;
};

SingleRun single_run(const KvConfig& kv) {
  FamilyConfig fam = family_from_config(kv);
  SingleRun run{make_family(fam), {}, 1.0, PointSet(1), RngStream(0)};
  optimizer_from_config(kv, run.cfg);
  const auto s = smoothness_from_config(kv);
  run.cfg.alpha = s.alpha.value_or(run.f.alpha);
  run.cfg.M = s.M.value_or(run.f.holder_M);
  run.cfg.kappa = s.kappa.value_or(run.f.kappa);
  const auto n = kv.get_int("n", 1024);
  if (n < 2) throw Error(ErrorCode::kBudgetExhausted, "n must be at least 2");
  run.cfg.n = static_cast<std::size_t>(n);
  run.noise_sd = kv.get_double("noise_sd", 1.0);
  if (!(run.noise_sd >= 0.0)) throw Error(ErrorCode::kConfig, "noise_sd must be >= 0");
  run.stream = RngStream(static_cast<std::uint64_t>(kv.get_int("seed", 0)));
  run.cfg.seed = run.stream.split("optimizer").key();
  kv.require_all_used();
  auto grid_rng = run.stream.split("grid");
  run.grid = build_grid(run.cfg, run.f.dim, grid_rng);
  return run;
}

int cmd_optimize(const CommonFlags& flags) {
  auto run = single_run(flags.load());
  NoisyOracle oracle(run.f, run.noise_sd, run.cfg.n, run.stream.split("oracle"));
  const auto res = run_active(oracle, run.cfg, run.grid);

  std::ostringstream os;
  os << "family " << run.f.name << "\n";
  os << "n " << run.cfg.n << "\n";
  os << "epochs " << res.plan.epochs << "\n";
  os << "per_epoch " << res.plan.per_epoch << "\n";
  os << "queries " << oracle.used() << "\n";
  os << "active " << res.state.active.size() << "\n";
  os << "x_hat " << join(res.x_hat) << "\n";
  os << "regret " << num(regret(run.f, res.x_hat)) << "\n";
  os << "grid_gap " << num(grid_gap(run.f, run.grid)) << "\n";
  write_trace_csv(res.trace, os);
  emit(os.str(), flags.out);
  return 0;
}

int cmd_baseline(const CommonFlags& flags) {
  auto run = single_run(flags.load());
  NoisyOracle oracle(run.f, run.noise_sd, run.cfg.n, run.stream.split("oracle"));
  const auto res = run_passive(oracle, run.cfg, run.grid);

  std::ostringstream os;
  os << "family " << run.f.name << "\n";
  os << "n " << run.cfg.n << "\n";
  os << "queries " << oracle.used() << "\n";
  os << "bandwidth " << num(res.bandwidth) << "\n";
  os << "unusable " << res.unusable << "\n";
  os << "x_hat " << join(res.x_hat) << "\n";
  os << "regret " << num(regret(run.f, res.x_hat)) << "\n";
  os << "grid_gap " << num(grid_gap(run.f, run.grid)) << "\n";
  emit(os.str(), flags.out);
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& plot_prefix) {
  auto kv = flags.load();
  if (!flags.out.empty()) kv.set("output", flags.out);
  const auto plan = sweep_plan_from_config(kv);
  const auto rows = run_sweep(plan);
  const auto f = make_family(plan.family);

  std::ostringstream os;
  os << "rows " << rows.size() << "\n";
  for (auto m : plan.methods) {
    os << to_string(m) << " medians";
    for (const auto& p : median_regret(rows, m)) os << " " << p.n << ":" << num(p.median, 4);
    os << "\n";
    try {
      const auto fit = fit_slope(rows, m);
      os << to_string(m) << " slope " << num(fit.slope, 4) << " stderr " << num(fit.stderr_, 3)
         << "\n";
      for (auto n : fit.excluded_n) {
        std::cerr << "warning: zero median regret at n=" << n << " left out of the slope fit\n";
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData) throw;
    }
  }
  try {
    const auto cmp = compare_methods(rows);
    const auto& top = cmp.largest();
    os << "win_rate n=" << top.n << " " << num(top.win_rate, 4) << " over " << top.pairs
       << " pairs\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientData) throw;
  }
  std::cout << os.str();
  if (!plot_prefix.empty()) {
    emit_plotdata(rows, plot_prefix,
                  PlotMeta{plan.alpha.value_or(f.alpha), f.dim, family_beta(f)});
  }
  return 0;
}

int cmd_rates(const CommonFlags& flags, const std::vector<std::size_t>& n_values) {
  auto kv = flags.load();
  const auto f = make_family(family_from_config(kv));
  const auto s = smoothness_from_config(kv);
  const double alpha = s.alpha.value_or(f.alpha);
  const double beta = kv.has("beta") ? kv.get_double("beta", 0.0) : family_beta(f);
  kv.require_all_used();
  if (!f.has_volume_law()) {
    throw Error(ErrorCode::kConfig, "family '" + f.name + "' has no level-set volume law");
  }
  const double omega = default_omega(f.dim, alpha);

  std::ostringstream os;
  os << "n,theoretical_rate,eps_upper,eps_lower\n";
  for (auto n : n_values) {
    const double nn = static_cast<double>(n);
    os << n << "," << num(theoretical_rate(nn, alpha, f.dim, beta)) << ","
       << num(solve_eps_n(f.volume_law, f.dim, alpha, nn, omega, EpsVariant::kUpper)) << ","
       << num(solve_eps_n(f.volume_law, f.dim, alpha, nn, omega, EpsVariant::kLower)) << "\n";
  }
  emit(os.str(), flags.out);
  return 0;
}

int cmd_advgen(const CommonFlags& flags, std::size_t bumps, int smooth_N) {
  auto kv = flags.load();
  const auto f0 = make_family(family_from_config(kv));
  const auto n = kv.get_int("n", 1024);
  const auto seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  kv.require_all_used();
  if (n < 2) throw Error(ErrorCode::kBudgetExhausted, "n must be at least 2");
  if (bumps < 1) throw Error(ErrorCode::kConfig, "bumps must be >= 1");

  const double eps = solve_eps_n(f0, static_cast<double>(n), default_omega(f0.dim, f0.alpha),
                                 EpsVariant::kLower);
  const double h = stress_bandwidth(f0, eps);
  const auto packing = pack_level_set(f0, eps, h, 20000);
  if (packing.size() < bumps) {
    throw Error(ErrorCode::kPackingTooSmall,
                "level-set packing holds " + std::to_string(packing.size()) + " boxes");
  }
  const auto location = RngStream(seed).split("advgen").index(bumps);
  const auto center = packing[location];
  const auto f = make_adversarial(f0, center, h, smooth_N);

  std::ostringstream os;
  os << "base " << f0.name << "\n";
  os << "name " << f.name << "\n";
  os << "d " << f.dim << "\n";
  os << "alpha " << num(f.alpha) << "\n";
  os << "holder_M " << num(f.holder_M) << "\n";
  os << "n " << n << "\n";
  os << "eps_lower " << num(eps) << "\n";
  os << "h " << num(h) << "\n";
  os << "amplitude " << num(bump_peak(h, f0.holder_M, f0.alpha)) << "\n";
  os << "smoothstep_N " << smooth_N << "\n";
  os << "packing_size " << packing.size() << "\n";
  os << "location " << location << "\n";
  os << "bump_center " << join(center) << "\n";
  os << "planted_minimizer " << join(*f.minimizer) << "\n";
  os << "planted_min " << num(f.min_value()) << "\n";
  os << "base_min " << num(f0.min_value()) << "\n";
  emit(os.str(), flags.out);
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidBeta:
    case ErrorCode::kDomainViolation:
    case ErrorCode::kEmptySet:
      return kExitConfig;
    case ErrorCode::kBudgetExhausted:
    case ErrorCode::kPackingTooSmall:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kNoSamples:
    case ErrorCode::kNoMinimum:
    case ErrorCode::kUnusableFit:
      return kExitInfeasible;
    case ErrorCode::kIoFailure:
      break;
  }
  return kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy zeroth-order optimization toolkit"};
  app.require_subcommand(1);

  CommonFlags optimize_flags, baseline_flags, sweep_flags, rates_flags, advgen_flags;
  auto* optimize = app.add_subcommand("optimize", "single active run");
  optimize_flags.attach(optimize);
  auto* baseline = app.add_subcommand("baseline", "single passive run");
  baseline_flags.attach(baseline);

  auto* sweep = app.add_subcommand("sweep", "convergence sweep from a config file");
  sweep_flags.attach(sweep);
  std::string plot_prefix;
  sweep->add_option("--plot-prefix", plot_prefix, "write <prefix>_points.csv and _summary.csv");

  auto* rates = app.add_subcommand("rates", "theoretical rate and eps_n tables");
  rates_flags.attach(rates);
  std::vector<std::size_t> n_values{512, 1024, 2048, 4096, 8192, 16384};
  rates->add_option("--n-values", n_values, "budgets to tabulate")->delimiter(',');

  auto* advgen = app.add_subcommand("advgen", "adversarial bump perturbation of a family");
  advgen_flags.attach(advgen);
  std::size_t bumps = 1;
  int smooth_N = 2;
  advgen->add_option("--bumps", bumps, "candidate bump locations");
  advgen->add_option("--smoothness-N", smooth_N, "vanishing derivatives of the smoothstep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*optimize) return cmd_optimize(optimize_flags);
    if (*baseline) return cmd_baseline(baseline_flags);
    if (*sweep) return cmd_sweep(sweep_flags, plot_prefix);
    if (*rates) return cmd_rates(rates_flags, n_values);
    if (*advgen) return cmd_advgen(advgen_flags, bumps, smooth_N);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
