#include "noisyopt/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "noisyopt/polyreg.hpp"

namespace noisyopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tilted_coordinate(double u, double tilt) {
  if (tilt == 0.0) return u;
  // inverse of F(z) = tilt z^2 + (1 - tilt) z
  const double a = 1.0 - tilt;
  return std::clamp((-a + std::sqrt(a * a + 4.0 * tilt * u)) / (2.0 * tilt), 0.0, 1.0);
}

// Grid indices sorted by first coordinate, for range queries along axis 0.
struct AxisIndex {
  std::vector<std::size_t> order;
  std::vector<double> key;

  explicit AxisIndex(const PointSet& grid) : order(grid.size()) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grid[a][0] < grid[b][0]; });
    key.reserve(order.size());
    for (auto i : order) key.push_back(grid[i][0]);
  }

  // `skip(g)` lets callers avoid distance checks for points already handled.
  template <typename F, typename Skip>
  void for_each_within(const PointSet& grid, PointView x, double r, F&& visit, Skip&& skip) const {
    auto lo = std::lower_bound(key.begin(), key.end(), x[0] - r);
    for (auto it = lo; it != key.end() && *it <= x[0] + r; ++it) {
      const auto g = order[static_cast<std::size_t>(it - key.begin())];
      if (!skip(g) && linf_distance(grid[g], x) <= r) visit(g);
    }
  }
};

std::vector<std::size_t> extension_with(const AxisIndex& index, std::span<const std::size_t> active,
                                        std::span<const double> radii, const PointSet& grid) {
  std::vector<char> mark(grid.size(), 0);
  std::size_t marked = 0;
  for (auto x : active) {
    if (!(radii[x] < 1.0) || marked == grid.size()) {
      std::vector<std::size_t> all(grid.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }
    index.for_each_within(
        grid, grid[x], radii[x],
        [&](std::size_t g) {
          mark[g] = 1;
          ++marked;
        },
        [&](std::size_t g) { return mark[g] != 0; });
  }
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (mark[g]) out.push_back(g);
  }
  return out;
}

bool better_point(double v, PointView p, double best_v, PointView best) {
  return v < best_v || (v == best_v && lex_less(p, best));
}

void require_grid(const PointSet& grid, int d) {
  if (grid.empty()) throw Error(ErrorCode::kEmptySet, "grid is empty");
  if (grid.dim() != static_cast<std::size_t>(d)) {
    throw Error(ErrorCode::kDomainViolation, "grid dimension does not match the objective");
  }
}

RngStream run_stream(const OptimizerConfig& cfg) { return RngStream(cfg.seed); }

}  // namespace

bool prescreen_enabled(const OptimizerConfig& cfg) noexcept {
  return cfg.prescreen && std::isfinite(cfg.kappa);
}

EpochPlan epoch_plan(const OptimizerConfig& cfg) {
  if (cfg.n < 2) throw Error(ErrorCode::kBudgetExhausted, "budget n must be at least 2");
  EpochPlan plan;
  plan.epochs = cfg.epochs_override ? *cfg.epochs_override
                                    : static_cast<int>(std::bit_width(cfg.n)) - 1;
  if (plan.epochs < 1) throw Error(ErrorCode::kConfig, "need at least one epoch");
  if (prescreen_enabled(cfg)) {
    plan.prescreen_queries =
        static_cast<std::size_t>(std::floor(static_cast<double>(cfg.n) / std::log(cfg.n)));
  }
  if (plan.prescreen_queries >= cfg.n) throw Error(ErrorCode::kBudgetExhausted, "budget too small for pre-screening");
  plan.per_epoch = (cfg.n - plan.prescreen_queries) / static_cast<std::size_t>(plan.epochs);
  if (plan.per_epoch < 1) throw Error(ErrorCode::kBudgetExhausted, "budget smaller than the epoch count");
  return plan;
}

double default_delta(std::size_t n, std::size_t grid_size) {
  const double nn = static_cast<double>(n);
  return 1.0 / (nn * nn * nn * nn * static_cast<double>(std::max<std::size_t>(grid_size, 1)));
}

PointSet build_grid(const OptimizerConfig& cfg, int d, RngStream& rng) {
  if (cfg.grid_size < 1) throw Error(ErrorCode::kConfig, "grid_size must be >= 1");
  if (d < 1) throw Error(ErrorCode::kConfig, "dimension must be positive");
  if (!(cfg.grid_tilt >= 0.0 && cfg.grid_tilt < 1.0)) {
    throw Error(ErrorCode::kConfig, "grid_tilt must lie in [0, 1)");
  }
  PointSet grid(static_cast<std::size_t>(d));
  grid.reserve(cfg.grid_size);
  Point z(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < cfg.grid_size; ++i) {
    for (auto& v : z) v = tilted_coordinate(rng.uniform(), cfg.grid_tilt);
    grid.push_back(z);
  }
  return grid;
}

std::vector<std::size_t> extension_indices(std::span<const std::size_t> active,
                                           std::span<const double> radii, const PointSet& grid) {
  return extension_with(AxisIndex(grid), active, radii, grid);
}

PointSet extension_set(const PointSet& S, std::span<const double> radii, const PointSet& grid) {
  if (radii.size() != S.size()) throw Error(ErrorCode::kConfig, "one radius per point expected");
  PointSet out(grid.dim());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (linf_distance(grid[g], S[i]) <= radii[i]) {
        out.push_back(grid[g]);
        break;
      }
    }
  }
  return out;
}

PrescreenResult prescreen(NoisyOracle& oracle, const PointSet& grid, std::size_t n) {
  if (n < 3) throw Error(ErrorCode::kConfig, "pre-screening needs n >= 3");
  const std::size_t d = grid.dim();
  const double log_n = std::log(static_cast<double>(n));
  PrescreenResult r;
  r.queries = static_cast<std::size_t>(std::floor(static_cast<double>(n) / log_n));
  if (r.queries < 1) throw Error(ErrorCode::kConfig, "pre-screening budget is empty");
  const auto samples = oracle.batch_uniform_cube(r.queries);
  r.h0 = std::min(1.0, std::pow(static_cast<double>(r.queries), -1.0 / (2.0 * static_cast<double>(d))) *
                           log_n * log_n * log_n);

  r.averages.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  double best = kInf;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < samples.size(); ++t) {
      if (linf_distance(samples.point(t), grid[g]) <= r.h0) {
        sum += samples.response(t);
        ++hits;
      }
    }
    if (hits > 0) {
      r.averages[g] = sum / static_cast<double>(hits);
      best = std::min(best, r.averages[g]);
    }
  }
  r.threshold = best + 1.0 / log_n;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (std::isnan(r.averages[g]) || r.averages[g] < r.threshold) r.retained.push_back(g);
  }
  return r;
}

ActiveResult run_active(NoisyOracle& oracle, const OptimizerConfig& cfg, const PointSet& grid) {
  const FunctionSpec& f = oracle.objective();
  require_grid(grid, f.dim);
  ActiveResult res;
  res.plan = epoch_plan(cfg);
  if (oracle.remaining() < res.plan.total()) {
    throw Error(ErrorCode::kBudgetExhausted, "oracle budget is smaller than the epoch plan");
  }
  res.delta = cfg.delta ? *cfg.delta : default_delta(cfg.n, grid.size());

  BandwidthRule rule = BandwidthRule::for_budget(cfg.n);
  if (cfg.grid_resolution) rule.grid_resolution = *cfg.grid_resolution;
  rule.search = cfg.search;
  rule.ridge_rel = cfg.ridge_rel;
  rule.noise_sd = cfg.noise_sd ? *cfg.noise_sd : oracle.noise_sd();
  const auto basis = FeatureBasis::for_smoothness(f.dim, cfg.alpha);

  GridState& st = res.state;
  st.points = grid;
  st.radii.assign(grid.size(), kInf);
  st.ci.assign(grid.size(), CIRecord{});
  if (prescreen_enabled(cfg)) {
    st.active = prescreen(oracle, grid, cfg.n).retained;
  } else {
    st.active.resize(grid.size());
    std::iota(st.active.begin(), st.active.end(), std::size_t{0});
  }
  res.active_history.push_back(st.active);
  res.radii_history.push_back(st.radii);

  RngStream rng = run_stream(cfg).split("active");
  const AxisIndex index(grid);
  PooledSamples pooled(grid.dim());
  std::vector<std::ptrdiff_t> slot(grid.size(), -1);
  std::size_t last_query = 0;

  for (int tau = 1; tau <= res.plan.epochs; ++tau) {
    st.epoch = tau;
    EpochRecord rec;
    rec.epoch = tau;
    const auto ext = extension_with(index, st.active, st.radii, grid);
    rec.extension = ext.size();
    for (std::size_t q = 0; q < res.plan.per_epoch; ++q) {
      const auto g = ext[rng.index(ext.size())];
      const double y = oracle.query(grid[g]);
      if (slot[g] < 0) {
        slot[g] = static_cast<std::ptrdiff_t>(pooled.size());
        pooled.add(grid[g], y, 1.0);
      } else {
        pooled.sum[static_cast<std::size_t>(slot[g])] += y;
        pooled.count[static_cast<std::size_t>(slot[g])] += 1.0;
      }
      last_query = g;
    }

    std::vector<double> new_radii = st.radii;
    std::vector<char> fresh(grid.size(), 0);
    rec.max_eta = 0.0;
    const SampleIndex sample_index(pooled);
    for (auto x : st.active) {
      const auto choice = select_bandwidth(rule, pooled, sample_index, basis, grid[x], cfg.M,
                                           cfg.alpha, res.delta);
      rec.max_eta = std::max(rec.max_eta, choice.bound.total);
      if (!choice.bound.finite()) {
        ++rec.unusable;
        continue;
      }
      st.ci[x] = update_ci(st.ci[x], choice.fit.coeffs[0], choice.bound, choice.h);
      new_radii[x] = std::min(st.radii[x], choice.h);
      fresh[x] = 1;
    }

    double min_upper = kInf;
    for (auto x : st.active) min_upper = std::min(min_upper, st.ci[x].upper);
    rec.min_upper = min_upper;
    std::vector<std::size_t> survivors;
    for (auto x : st.active) {
      if (!fresh[x] || st.ci[x].lower <= min_upper) survivors.push_back(x);
      if (crossing_check(st.ci[x]) == CIStatus::kCrossed) ++rec.crossed;
    }
    if (survivors.empty()) throw Error(ErrorCode::kEmptySet, "active set emptied");
    st.active = std::move(survivors);
    st.radii = std::move(new_radii);
    rec.active = st.active.size();
    rec.queries = oracle.used();
    res.trace.push_back(rec);
    res.active_history.push_back(st.active);
    res.radii_history.push_back(st.radii);
  }

  if (cfg.output == OutputRule::kLastQuery) {
    res.x_hat_index = last_query;
  } else {
    std::size_t best = st.active.front();
    for (auto x : st.active) {
      const auto& a = st.ci[x];
      const auto& b = st.ci[best];
      if (a.upper < b.upper || (a.upper == b.upper && (a.lower < b.lower ||
                                                       (a.lower == b.lower && lex_less(grid[x], grid[best]))))) {
        best = x;
      }
    }
    res.x_hat_index = best;
  }
  res.x_hat = grid.point(res.x_hat_index);
  res.queries = oracle.used();
  return res;
}

ActiveResult run_active(NoisyOracle& oracle, const OptimizerConfig& cfg) {
  RngStream rng = run_stream(cfg).split("grid");
  const auto grid = build_grid(cfg, oracle.objective().dim, rng);
  return run_active(oracle, cfg, grid);
}

PassiveResult run_passive(NoisyOracle& oracle, const OptimizerConfig& cfg, const PointSet& grid) {
  const FunctionSpec& f = oracle.objective();
  require_grid(grid, f.dim);
  if (cfg.n < 2) throw Error(ErrorCode::kBudgetExhausted, "budget n must be at least 2");
  const auto d = static_cast<std::size_t>(f.dim);
  const double nn = static_cast<double>(cfg.n);

  PassiveResult res;
  res.bandwidth = std::min(1.0, cfg.c_h * std::pow(std::log(nn) / nn, 1.0 / (2.0 * cfg.alpha + static_cast<double>(d))));
  const auto log = oracle.batch_uniform_cube(cfg.n);
  res.queries = cfg.n;

  // Bucket the samples in cells no narrower than the bandwidth.
  const double h = res.bandwidth;
  std::size_t per_axis = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / h)));
  while (per_axis > 1 && std::pow(static_cast<double>(per_axis), static_cast<double>(d)) > 1e6) --per_axis;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < d; ++i) cells *= per_axis;
  auto cell_coord = [&](double v) {
    return std::min(per_axis - 1, static_cast<std::size_t>(v * static_cast<double>(per_axis)));
  };
  std::vector<std::vector<std::size_t>> bucket(cells);
  for (std::size_t t = 0; t < log.size(); ++t) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < d; ++i) c = c * per_axis + cell_coord(log.point(t)[i]);
    bucket[c].push_back(t);
  }

  const auto basis = FeatureBasis::for_smoothness(f.dim, cfg.alpha);
  GramAccumulator acc(basis);
  Point offset(d);
  std::vector<std::size_t> lo(d), hi(d), idx(d);
  res.estimates.assign(grid.size(), kInf);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const PointView x = grid[g];
    acc = GramAccumulator(basis);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t c = cell_coord(x[i]);
      lo[i] = c == 0 ? 0 : c - 1;
      hi[i] = std::min(per_axis - 1, c + 1);
      idx[i] = lo[i];
    }
    while (true) {
      std::size_t c = 0;
      for (std::size_t i = 0; i < d; ++i) c = c * per_axis + idx[i];
      for (auto t : bucket[c]) {
        const PointView z = log.point(t);
        bool inside = true;
        for (std::size_t i = 0; i < d; ++i) {
          offset[i] = z[i] - x[i];
          if (std::abs(offset[i]) > h) inside = false;
        }
        if (inside) acc.add(offset, log.response(t));
      }
      std::size_t a = d;
      while (a > 0 && ++idx[a - 1] > hi[a - 1]) {
        idx[a - 1] = lo[a - 1];
        --a;
      }
      if (a == 0) break;
    }
    const auto fit = acc.solve(x, h, cfg.ridge_rel);
    if (fit.usable && !fit.rank_deficient) {
      res.estimates[g] = fit.coeffs[0];
    } else {
      ++res.unusable;
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (better_point(res.estimates[g], grid[g], res.estimates[best], grid[best])) best = g;
  }
  res.x_hat_index = best;
  res.x_hat = grid.point(best);
  return res;
}

PassiveResult run_passive(NoisyOracle& oracle, const OptimizerConfig& cfg) {
  RngStream rng = run_stream(cfg).split("grid");
  const auto grid = build_grid(cfg, oracle.objective().dim, rng);
  return run_passive(oracle, cfg, grid);
}

double regret(const FunctionSpec& f, PointView x) { return f(x) - f.min_value(); }

std::size_t grid_argmin(const FunctionSpec& f, const PointSet& grid) {
  if (grid.empty()) throw Error(ErrorCode::kEmptySet, "grid is empty");
  std::size_t best = 0;
  double best_v = f(grid[0]);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double v = f(grid[g]);
    if (better_point(v, grid[g], best_v, grid[best])) {
      best = g;
      best_v = v;
    }
  }
  return best;
}

double grid_gap(const FunctionSpec& f, const PointSet& grid) {
  return f(grid[grid_argmin(f, grid)]) - f.min_value();
}

void write_trace_csv(std::span<const EpochRecord> trace, std::ostream& out) {
  out << "epoch,active,extension,max_eta,min_upper,queries,unusable,crossed\n";
  char buf[160];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%.17g,%.17g,%zu,%zu,%zu\n", r.epoch, r.active,
                  r.extension, r.max_eta, r.min_upper, r.queries, r.unusable, r.crossed);
    out << buf;
  }
}

}  // namespace noisyopt
