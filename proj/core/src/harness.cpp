#include "noisyopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "noisyopt/oracle.hpp"
#include "noisyopt/rng.hpp"
#include "noisyopt/testbed.hpp"

namespace noisyopt {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RngStream cell_stream(const SweepPlan& plan, std::size_t n, int seed) {
  return RngStream(plan.master_seed)
      .split("cell")
      .split(static_cast<std::uint64_t>(n))
      .split(static_cast<std::uint64_t>(seed));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

void check_stream(const std::ostream& out, const std::string& path) {
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path);
}

}  // namespace

FunctionSpec make_family(const FamilyConfig& fam) {
  if (fam.d < 1) throw Error(ErrorCode::kConfig, "family dimension must be >= 1");
  if (fam.name == "power") return make_power_family(fam.d, fam.beta, fam.a0, fam.alpha);
  if (fam.name == "convex") return make_strongly_convex(fam.d, fam.sigma, Point(fam.d, fam.center));
  if (fam.name == "constant") return make_constant(fam.d, fam.value);
  if (fam.name == "two-valley") return make_two_valley(fam.d, fam.raise);
  throw Error(ErrorCode::kConfig, "unknown family '" + fam.name + "'");
}

double family_beta(const FunctionSpec& f) { return f.beta_hint.value_or(0.0); }

const char* to_string(Method m) noexcept {
  return m == Method::kActive ? "active" : "passive";
}

Method parse_method(const std::string& s) {
  if (s == "active") return Method::kActive;
  if (s == "passive") return Method::kPassive;
  throw Error(ErrorCode::kConfig, "unknown method '" + s + "'");
}

void SweepPlan::validate() const {
  if (n_values.empty()) throw Error(ErrorCode::kConfig, "n_values is empty");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 64) throw Error(ErrorCode::kConfig, "every n must be >= 64");
    if (i > 0 && n_values[i] <= n_values[i - 1]) {
      throw Error(ErrorCode::kConfig, "n_values must be strictly increasing");
    }
  }
  if (seeds < 1) throw Error(ErrorCode::kConfig, "seeds must be >= 1");
  if (methods.empty()) throw Error(ErrorCode::kConfig, "no methods");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (methods[i] == methods[j]) throw Error(ErrorCode::kConfig, "duplicate method");
    }
  }
  if (!(noise_sd >= 0.0)) throw Error(ErrorCode::kConfig, "noise_sd must be >= 0");
  if (optimizer.grid_size < 1) throw Error(ErrorCode::kConfig, "grid_size must be >= 1");
  if (threads < 1) throw Error(ErrorCode::kConfig, "threads must be >= 1");
}

void write_rows_header(std::ostream& out) {
  out << "method,n,seed,regret,queries,epochs,grid_size,wall_ms,grid_gap\n";
}

void write_row(std::ostream& out, const ExperimentRow& r) {
  out << to_string(r.method) << ',' << r.n << ',' << r.seed << ',' << fmt(r.regret) << ','
      << r.queries << ',' << r.epochs << ',' << r.grid_size << ',' << r.wall_ms << ','
      << fmt(r.grid_gap) << '\n';
}

std::vector<ExperimentRow> read_rows_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cols;
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() != 9) throw Error(ErrorCode::kIoFailure, "malformed row in " + path);
    ExperimentRow r;
    r.method = parse_method(cols[0]);
    r.n = std::stoull(cols[1]);
    r.seed = std::stoi(cols[2]);
    r.regret = std::stod(cols[3]);
    r.queries = std::stoull(cols[4]);
    r.epochs = std::stoi(cols[5]);
    r.grid_size = std::stoull(cols[6]);
    r.wall_ms = std::stoll(cols[7]);
    r.grid_gap = std::stod(cols[8]);
    rows.push_back(r);
  }
  return rows;
}

OptimizerConfig cell_config(const SweepPlan& plan, const FunctionSpec& f, std::size_t n,
                            int seed) {
  OptimizerConfig cfg = plan.optimizer;
  cfg.n = n;
  cfg.seed = cell_stream(plan, n, seed).split("optimizer").key();
  cfg.alpha = plan.alpha.value_or(f.alpha);
  cfg.M = plan.M.value_or(f.holder_M);
  cfg.kappa = plan.kappa.value_or(f.kappa);
  return cfg;
}

ExperimentRow run_cell(const SweepPlan& plan, const FunctionSpec& f, Method method, std::size_t n,
                       int seed) {
  const auto cfg = cell_config(plan, f, n, seed);
  const auto stream = cell_stream(plan, n, seed);
  auto grid_rng = stream.split("grid");
  const auto grid = build_grid(cfg, f.dim, grid_rng);
  NoisyOracle oracle(f, plan.noise_sd, n, stream.split("oracle").split(to_string(method)));

  ExperimentRow row;
  row.method = method;
  row.n = n;
  row.seed = seed;
  row.grid_size = grid.size();
  const auto t0 = std::chrono::steady_clock::now();
  Point x_hat;
  if (method == Method::kActive) {
    auto res = run_active(oracle, cfg, grid);
    x_hat = std::move(res.x_hat);
    row.epochs = res.plan.epochs;
  } else {
    x_hat = run_passive(oracle, cfg, grid).x_hat;
  }
  const auto t1 = std::chrono::steady_clock::now();
  row.queries = oracle.used();
  row.regret = regret(f, x_hat);
  row.grid_gap = grid_gap(f, grid);
  if (plan.timing) {
    row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  }
  return row;
}

std::vector<ExperimentRow> run_sweep(const SweepPlan& plan) {
  plan.validate();
  const auto f = make_family(plan.family);

  struct Cell {
    Method method;
    std::size_t n;
    int seed;
  };
  std::vector<Cell> cells;
  for (auto m : plan.methods) {
    for (auto n : plan.n_values) {
      for (int s = 0; s < plan.seeds; ++s) cells.push_back({m, n, s});
    }
  }

  std::ofstream out;
  if (!plan.output_path.empty()) {
    out.open(plan.output_path, std::ios::out | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + plan.output_path);
    write_rows_header(out);
    out.flush();
    check_stream(out, plan.output_path);
  }

  // Workers claim cells in order; the writer emits the finished prefix so the
  // file is in cell order whatever the completion order.
  std::vector<ExperimentRow> rows(cells.size());
  std::vector<char> done(cells.size(), 0);
  std::size_t written = 0;
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        auto row = run_cell(plan, f, cells[i].method, cells[i].n, cells[i].seed);
        std::lock_guard lock(mu);
        rows[i] = row;
        done[i] = 1;
        while (written < cells.size() && done[written]) {
          if (out.is_open()) write_row(out, rows[written]);
          ++written;
        }
        if (out.is_open()) {
          out.flush();
          check_stream(out, plan.output_path);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
    }
  };

  const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(plan.threads), cells.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<MedianPoint> median_regret(std::span<const ExperimentRow> rows, Method method) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : rows) {
    if (r.method == method) by_n[r.n].push_back(r.regret);
  }
  std::vector<MedianPoint> out;
  for (auto& [n, v] : by_n) out.push_back({n, median_of(v), v.size()});
  return out;
}

SlopeFit fit_slope(std::span<const ExperimentRow> rows, Method method) {
  const auto medians = median_regret(rows, method);
  if (medians.size() < 3) {
    throw Error(ErrorCode::kInsufficientData,
                std::string("fewer than 3 distinct n for ") + to_string(method));
  }
  SlopeFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : medians) {
    if (p.median > 0.0) {
      xs.push_back(std::log(static_cast<double>(p.n)));
      ys.push_back(std::log(p.median));
    } else {
      fit.excluded_n.push_back(p.n);
    }
  }
  const std::size_t k = xs.size();
  if (k < 3) {
    throw Error(ErrorCode::kInsufficientData,
                std::string("fewer than 3 nonzero medians for ") + to_string(method));
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr += e * e;
  }
  fit.stderr_ = std::sqrt(ssr / static_cast<double>(k - 2) / sxx);
  fit.points = k;
  return fit;
}

ComparisonReport compare_methods(std::span<const ExperimentRow> rows) {
  std::map<std::pair<std::size_t, int>, std::pair<const ExperimentRow*, const ExperimentRow*>> pairs;
  std::size_t largest_n = 0;
  for (const auto& r : rows) {
    largest_n = std::max(largest_n, r.n);
    auto& slot = pairs[{r.n, r.seed}];
    (r.method == Method::kActive ? slot.first : slot.second) = &r;
  }

  ComparisonReport report;
  std::map<std::size_t, std::vector<std::pair<double, double>>> by_n;
  for (const auto& [key, p] : pairs) {
    if (p.first && p.second) by_n[key.first].emplace_back(p.first->regret, p.second->regret);
  }
  if (!by_n.count(largest_n)) {
    throw Error(ErrorCode::kInsufficientData, "both methods are needed at the largest n");
  }
  for (const auto& [n, v] : by_n) {
    ComparisonRow row;
    row.n = n;
    row.pairs = v.size();
    double wins = 0.0;
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& [ra, rp] : v) {
      wins += ra < rp ? 1.0 : (ra == rp ? 0.5 : 0.0);
      a.push_back(ra);
      b.push_back(rp);
    }
    row.win_rate = wins / static_cast<double>(v.size());
    row.active_median = median_of(a);
    row.passive_median = median_of(b);
    row.median_ratio = row.passive_median > 0.0 ? row.active_median / row.passive_median : kNaN;
    report.rows.push_back(row);
  }
  for (auto m : {Method::kActive, Method::kPassive}) {
    try {
      (m == Method::kActive ? report.active_slope : report.passive_slope) = fit_slope(rows, m);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData) throw;
    }
  }
  return report;
}

double stress_bandwidth(const FunctionSpec& f0, double eps) {
  return std::pow(4.0 * eps / f0.holder_M, 1.0 / f0.alpha);
}

StressReport adversarial_stress(const FunctionSpec& f0, const StressOptions& opt) {
  if (opt.bumps < 1) throw Error(ErrorCode::kConfig, "bumps must be >= 1");
  if (opt.seeds < 1) throw Error(ErrorCode::kConfig, "seeds must be >= 1");
  if (!(opt.amplitude_scale >= 0.0)) throw Error(ErrorCode::kConfig, "amplitude must be >= 0");

  StressReport rep;
  const double n = static_cast<double>(opt.n);
  rep.eps_lower = solve_eps_n(f0, n, default_omega(f0.dim, f0.alpha), EpsVariant::kLower);
  rep.h = stress_bandwidth(f0, rep.eps_lower);
  rep.amplitude = opt.amplitude_scale * bump_peak(rep.h, f0.holder_M, f0.alpha);
  rep.packing = pack_level_set(f0, rep.eps_lower, rep.h, opt.packing_candidates);
  if (rep.packing.size() < opt.bumps) {
    throw Error(ErrorCode::kPackingTooSmall,
                "level-set packing holds " + std::to_string(rep.packing.size()) + " boxes, " +
                    std::to_string(opt.bumps) + " requested");
  }
  const double f0_min = f0.min_value();

  std::size_t successes = 0;
  for (int s = 0; s < opt.seeds; ++s) {
    const auto stream =
        RngStream(opt.master_seed).split("stress").split(static_cast<std::uint64_t>(s));
    StressRun run;
    run.seed = s;
    run.location = stream.split("location").index(opt.bumps);

    FunctionSpec f = f0;
    if (opt.amplitude_scale > 0.0) {
      const auto center = rep.packing[run.location];
      f = make_adversarial(f0, center, rep.h, opt.smoothness_N, 1.0 / opt.amplitude_scale);
      // The planted minimum must sit inside the bump and beat f0*.
      run.minimizer_verified = f.minimizer && f.min_value() < f0_min &&
                               linf_distance(*f.minimizer, center) <= rep.h;
    } else {
      run.minimizer_verified = true;
    }

    OptimizerConfig cfg = opt.optimizer;
    cfg.n = opt.n;
    cfg.seed = stream.split("optimizer").key();
    cfg.alpha = f.alpha;
    cfg.M = f.holder_M;
    cfg.kappa = f.kappa;
    auto grid_rng = stream.split("grid");
    const auto grid = build_grid(cfg, f.dim, grid_rng);
    NoisyOracle oracle(f, opt.noise_sd, opt.n, stream.split("oracle"));
    const auto res = run_active(oracle, cfg, grid);
    run.regret = regret(f, res.x_hat);
    if (run.regret < rep.eps_lower) ++successes;
    rep.runs.push_back(run);
  }
  rep.success_fraction = static_cast<double>(successes) / static_cast<double>(opt.seeds);
  return rep;
}

void emit_plotdata(std::span<const ExperimentRow> rows, const std::string& prefix,
                   const PlotMeta& meta) {
  if (rows.empty()) throw Error(ErrorCode::kInsufficientData, "no rows to plot");
  std::vector<Method> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
  }
  std::sort(methods.begin(), methods.end());

  const std::string points_path = prefix + "_points.csv";
  std::ofstream points(points_path);
  if (!points) throw Error(ErrorCode::kIoFailure, "cannot open " + points_path);
  points << "method,log_n,log_median_regret\n";
  for (auto m : methods) {
    for (const auto& p : median_regret(rows, m)) {
      if (p.median <= 0.0) continue;
      points << to_string(m) << ',' << fmt(std::log(static_cast<double>(p.n))) << ','
             << fmt(std::log(p.median)) << '\n';
    }
  }
  check_stream(points, points_path);

  const std::string summary_path = prefix + "_summary.csv";
  std::ofstream summary(summary_path);
  if (!summary) throw Error(ErrorCode::kIoFailure, "cannot open " + summary_path);
  summary << "method,slope,stderr,theoretical_slope\n";
  for (auto m : methods) {
    double slope = kNaN;
    double se = kNaN;
    try {
      const auto fit = fit_slope(rows, m);
      slope = fit.slope;
      se = fit.stderr_;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData) throw;
    }
    const double beta = m == Method::kActive ? meta.beta : 0.0;
    summary << to_string(m) << ',' << fmt(slope) << ',' << fmt(se) << ','
            << fmt(theoretical_exponent(meta.alpha, meta.d, beta)) << '\n';
  }
  check_stream(summary, summary_path);
}

FamilyConfig family_from_config(const KvConfig& cfg, FamilyConfig fam) {
  fam.name = cfg.get_string("family", fam.name);
  fam.d = static_cast<int>(cfg.get_int("d", fam.d));
  fam.beta = cfg.get_double("beta", fam.beta);
  fam.a0 = cfg.get_double("a0", fam.a0);
  fam.alpha = cfg.get_double("family_alpha", cfg.get_double("alpha", fam.alpha));
  fam.sigma = cfg.get_double("sigma", fam.sigma);
  fam.center = cfg.get_double("center", fam.center);
  fam.value = cfg.get_double("value", fam.value);
  fam.raise = cfg.get_double("raise", fam.raise);
  return fam;
}

void optimizer_from_config(const KvConfig& cfg, OptimizerConfig& opt) {
  const auto grid_size = cfg.get_int("grid_size", static_cast<std::int64_t>(opt.grid_size));
  if (grid_size < 1) throw Error(ErrorCode::kConfig, "grid_size must be >= 1");
  opt.grid_size = static_cast<std::size_t>(grid_size);
  opt.prescreen = cfg.get_bool("prescreen", opt.prescreen);
  if (cfg.has("delta")) opt.delta = cfg.get_double("delta", 0.0);
  if (cfg.has("epochs")) opt.epochs_override = static_cast<int>(cfg.get_int("epochs", 0));
  if (cfg.has("grid_resolution")) opt.grid_resolution = cfg.get_int("grid_resolution", 0);
  const auto search = cfg.get_string("search", "breakpoint");
  if (search == "breakpoint") {
    opt.search = BandwidthSearch::kBreakpoint;
  } else if (search == "exhaustive") {
    opt.search = BandwidthSearch::kExhaustive;
  } else {
    throw Error(ErrorCode::kConfig, "unknown search '" + search + "'");
  }
  opt.ridge_rel = cfg.get_double("ridge_rel", opt.ridge_rel);
  if (cfg.has("bound_noise_sd")) opt.noise_sd = cfg.get_double("bound_noise_sd", 1.0);
  opt.c_h = cfg.get_double("c_h", opt.c_h);
  opt.grid_tilt = cfg.get_double("grid_tilt", opt.grid_tilt);
  const auto output = cfg.get_string("output_rule", "min-upper");
  if (output == "min-upper") {
    opt.output = OutputRule::kMinUpper;
  } else if (output == "last-query") {
    opt.output = OutputRule::kLastQuery;
  } else {
    throw Error(ErrorCode::kConfig, "unknown output_rule '" + output + "'");
  }
}

SmoothnessOverrides smoothness_from_config(const KvConfig& cfg) {
  SmoothnessOverrides s;
  if (cfg.has("alpha")) s.alpha = cfg.get_double("alpha", 0.0);
  if (cfg.has("M")) s.M = cfg.get_double("M", 0.0);
  if (cfg.has("kappa")) s.kappa = cfg.get_double("kappa", 0.0);
  return s;
}

SweepPlan sweep_plan_from_config(const KvConfig& cfg) {
  SweepPlan plan;
  plan.family = family_from_config(cfg, plan.family);
  for (auto n : cfg.get_ints("n_values")) {
    if (n < 0) throw Error(ErrorCode::kConfig, "n_values must be positive");
    plan.n_values.push_back(static_cast<std::size_t>(n));
  }
  plan.seeds = static_cast<int>(cfg.get_int("seeds", plan.seeds));
  if (cfg.has("methods")) {
    plan.methods.clear();
    for (const auto& m : cfg.get_strings("methods")) plan.methods.push_back(parse_method(m));
  }
  plan.noise_sd = cfg.get_double("noise_sd", plan.noise_sd);
  plan.output_path = cfg.get_string("output", plan.output_path);
  plan.master_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  plan.timing = cfg.get_bool("timing", plan.timing);
  plan.threads = static_cast<int>(cfg.get_int("threads", plan.threads));
  optimizer_from_config(cfg, plan.optimizer);
  const auto s = smoothness_from_config(cfg);
  plan.alpha = s.alpha;
  plan.M = s.M;
  plan.kappa = s.kappa;

  cfg.require_all_used();
  plan.validate();
  return plan;
}

}  // namespace noisyopt
