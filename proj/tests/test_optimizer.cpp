#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "noisyopt/optimizer.hpp"
#include "noisyopt/testbed.hpp"
#include "support.hpp"

using namespace noisyopt;

namespace {

OptimizerConfig small_config(std::size_t n, std::size_t grid, double alpha, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.n = n;
  cfg.grid_size = grid;
  cfg.alpha = alpha;
  cfg.seed = seed;
  return cfg;
}

FunctionSpec shifted_square() {
  FunctionSpec f = make_strongly_convex(1, 2.0, Point{0.3});
  return f;
}

void check_structure(const ActiveResult& r, std::size_t n) {
  REQUIRE(r.active_history.size() == static_cast<std::size_t>(r.plan.epochs) + 1);
  for (std::size_t t = 1; t < r.active_history.size(); ++t) {
    const auto& prev = r.active_history[t - 1];
    const auto& cur = r.active_history[t];
    CHECK_FALSE(cur.empty());
    CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
    for (auto x : cur) CHECK(r.radii_history[t][x] <= r.radii_history[t - 1][x]);
  }
  CHECK(r.queries == r.plan.total());
  CHECK(r.queries <= n);
  CHECK(r.trace.back().queries == r.queries);
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("epoch plan") {
  auto cfg = small_config(1000, 16, 2.0, 0);
  const auto p = epoch_plan(cfg);
  CHECK(p.epochs == 9);
  CHECK(p.per_epoch == 111);
  CHECK(p.total() == 999);

  cfg.n = 1;
  CHECK(testsupport::error_code_of([&] { epoch_plan(cfg); }) == ErrorCode::kBudgetExhausted);
  cfg.n = 10;
  cfg.epochs_override = 20;
  CHECK(testsupport::error_code_of([&] { epoch_plan(cfg); }) == ErrorCode::kBudgetExhausted);

  cfg = small_config(1000, 16, 2.0, 0);
  cfg.kappa = 1.0;
  cfg.prescreen = true;
  const auto q = epoch_plan(cfg);
  CHECK(q.prescreen_queries == static_cast<std::size_t>(std::floor(1000 / std::log(1000.0))));
  CHECK(q.total() <= 1000);
  cfg.kappa = std::numeric_limits<double>::infinity();
  CHECK(epoch_plan(cfg).prescreen_queries == 0);
  CHECK(default_delta(10, 100) == doctest::Approx(1e-6));
}

TEST_CASE("grid construction") {
  auto cfg = small_config(100, 1, 2.0, 0);
  RngStream a(1);
  const auto one = build_grid(cfg, 3, a);
  REQUIRE(one.size() == 1);
  CHECK(in_unit_cube(one[0]));

  cfg.grid_size = 100000;
  RngStream b(2), c(2);
  const auto g = build_grid(cfg, 1, b);
  CHECK(g == build_grid(cfg, 1, c));
  std::vector<double> v(g.coords());
  std::sort(v.begin(), v.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double n = static_cast<double>(v.size());
    sup = std::max({sup, std::abs((i + 1) / n - v[i]), std::abs(i / n - v[i])});
  }
  CHECK(sup <= 0.006);
}

TEST_CASE("extension sets") {
  PointSet G(1);
  for (double z : {0.0, 0.45, 0.55, 0.9}) G.push_back(Point{z});
  PointSet S(1);
  S.push_back(Point{0.5});
  const std::vector<double> r{0.1};
  const auto e = extension_set(S, r, G);
  REQUIRE(e.size() == 2);
  CHECK(e[0][0] == 0.45);
  CHECK(e[1][0] == 0.55);

  const std::vector<double> inf{std::numeric_limits<double>::infinity()};
  CHECK(extension_set(S, inf, G) == G);

  RngStream rng(4);
  auto cfg = small_config(100, 500, 2.0, 0);
  const auto grid = build_grid(cfg, 2, rng);
  std::vector<std::size_t> active;
  std::vector<double> radii(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    radii[i] = rng.uniform(0.0, 0.1);
    if (rng.uniform() < 0.1) active.push_back(i);
  }
  const auto idx = extension_indices(active, radii, grid);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(std::includes(idx.begin(), idx.end(), active.begin(), active.end()));
  PointSet SA(2);
  std::vector<double> ra;
  for (auto a : active) {
    SA.push_back(grid[a]);
    ra.push_back(radii[a]);
  }
  const auto ref = extension_set(SA, ra, grid);
  REQUIRE(ref.size() == idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(grid.point(idx[i]) == ref.point(i));
}

TEST_CASE("pre-screening keeps everything on a flat function") {
  auto cfg = small_config(2000, 200, 2.0, 0);
  RngStream rng(3);
  const auto grid = build_grid(cfg, 1, rng);
  NoisyOracle o(make_constant(1), 0.0, 2000, RngStream(1));
  const auto r = prescreen(o, grid, 2000);
  CHECK(r.retained.size() == grid.size());
  CHECK(r.queries == o.used());

  // Small n: h0 clips to 1, every average uses all samples.
  NoisyOracle noisy(make_two_valley(1, 0.5), 1.0, 100, RngStream(2));
  const auto s = prescreen(noisy, grid, 100);
  CHECK(s.h0 == 1.0);
  CHECK(s.retained.size() == grid.size());
  for (double a : s.averages) CHECK(a == s.averages.front());
}

TEST_CASE("flat noiseless objective keeps the whole grid") {
  auto cfg = small_config(256, 64, 2.0, 5);
  NoisyOracle o(make_constant(1, 0.7), 0.0, cfg.n, RngStream(9));
  const auto r = run_active(o, cfg);
  check_structure(r, cfg.n);
  CHECK(r.state.active.size() == 64);
  CHECK(regret(o.objective(), r.x_hat) == 0.0);
  for (auto x : r.state.active) {
    const auto& ci = r.state.ci[x];
    if (ci.updates == 0) continue;
    CHECK(ci.upper - ci.lower <= 2.0 * ci.last_bound.total * (1 + 1e-12));
    CHECK(ci.lower <= 0.7 + 1e-12);
    CHECK(ci.upper >= 0.7 - 1e-12);
  }
}

TEST_CASE("structural invariants over seeded runs") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int d = 1 + static_cast<int>(seed % 2);
    auto cfg = small_config(512, 128, 2.0, seed);
    cfg.M = 2.0;
    const auto f = d == 1 ? shifted_square() : make_strongly_convex(2, 2.0, Point{0.3, 0.6});
    NoisyOracle o(f, seed % 3 == 0 ? 0.0 : 1.0, cfg.n, RngStream(seed).split("oracle"));
    const auto r = run_active(o, cfg);
    check_structure(r, cfg.n);
    CHECK(r.trace.size() == static_cast<std::size_t>(r.plan.epochs));
    CHECK(std::find(r.state.active.begin(), r.state.active.end(), r.x_hat_index) !=
          r.state.active.end());
  }
}

TEST_CASE("noiseless regret stays under twice the widest interval") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto cfg = small_config(1024, 256, 2.0, seed);
    cfg.M = 2.0;
    const auto f = shifted_square();
    NoisyOracle o(f, 0.0, cfg.n, RngStream(seed));
    RngStream grng(seed + 100);
    const auto grid = build_grid(cfg, 1, grng);
    const auto r = run_active(o, cfg, grid);
    double widest = 0.0;
    bool crossed = false;
    for (auto x : r.state.active) {
      widest = std::max(widest, r.state.ci[x].last_bound.total);
      crossed = crossed || r.state.ci[x].crossed;
    }
    REQUIRE_FALSE(crossed);
    CHECK(regret(f, r.x_hat) <= 2.0 * widest + grid_gap(f, grid) + 1e-12);
  }
}

TEST_CASE("runs are deterministic") {
  auto run = [] {
    auto cfg = small_config(512, 128, 2.0, 77);
    NoisyOracle o(make_strongly_convex(2, 2.0, Point{0.4, 0.4}), 1.0, cfg.n, RngStream(1));
    const auto r = run_active(o, cfg);
    std::ostringstream s;
    write_trace_csv(r.trace, s);
    return std::make_pair(r.x_hat, s.str());
  };
  CHECK(run() == run());
}

TEST_CASE("output rule switch returns the last query") {
  auto cfg = small_config(256, 64, 2.0, 3);
  cfg.output = OutputRule::kLastQuery;
  NoisyOracle o(shifted_square(), 1.0, cfg.n, RngStream(1));
  const auto r = run_active(o, cfg);
  CHECK(o.log().point(o.log().size() - 1)[0] == r.x_hat[0]);
}

TEST_CASE("oracle budget below the plan is refused") {
  auto cfg = small_config(512, 64, 2.0, 0);
  NoisyOracle o(shifted_square(), 1.0, 100, RngStream(1));
  CHECK(testsupport::error_code_of([&] { run_active(o, cfg); }) == ErrorCode::kBudgetExhausted);
}

TEST_CASE("passive baseline") {
  auto cfg = small_config(1024, 200, 2.0, 1);
  NoisyOracle flat(make_constant(1, 2.0), 0.0, cfg.n, RngStream(1));
  const auto a = run_passive(flat, cfg);
  CHECK(regret(flat.objective(), a.x_hat) == 0.0);
  CHECK(a.queries == cfg.n);

  // Degree-2 objective, noiseless: every local fit is exact.
  const auto f = shifted_square();
  RngStream grng(5);
  const auto grid = build_grid(cfg, 1, grng);
  NoisyOracle o(f, 0.0, cfg.n, RngStream(2));
  const auto p = run_passive(o, cfg, grid);
  CHECK(p.unusable == 0);
  CHECK(p.x_hat_index == grid_argmin(f, grid));
  for (std::size_t g = 0; g < grid.size(); ++g) CHECK(std::abs(p.estimates[g] - f(grid[g])) < 1e-9);
}

TEST_CASE("regret and grid helpers") {
  const auto f = make_power_family(1, 0.5, 1.0);
  CHECK(regret(f, Point{0.1}) == doctest::Approx(0.01));
  CHECK(regret(f, Point{0.0}) == 0.0);
  CHECK(regret(make_constant(2), Point{0.3, 0.9}) == 0.0);
  PointSet g(1);
  for (double z : {0.9, 0.2, 0.5}) g.push_back(Point{z});
  CHECK(grid_argmin(f, g) == 1);
  CHECK(grid_gap(f, g) == doctest::Approx(0.04));
  FunctionSpec unknown;
  unknown.eval = [](PointView) { return 0.0; };
  CHECK(testsupport::error_code_of([&] { regret(unknown, Point{0.5}); }) == ErrorCode::kNoMinimum);
}

}  // TEST_SUITE

TEST_SUITE("optimizer_mc") {

// Monte Carlo comparisons at desk scale; each takes minutes.

TEST_CASE("active beats passive on a shifted square at n = 2^14") {
  std::vector<double> act, pas;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto cfg = small_config(16384, 4096, 2.0, seed);
    cfg.M = 2.0;
    const auto f = shifted_square();
    RngStream grng = RngStream(seed).split("grid");
    const auto grid = build_grid(cfg, 1, grng);
    NoisyOracle a(f, 1.0, cfg.n, RngStream(seed).split("active"));
    NoisyOracle p(f, 1.0, cfg.n, RngStream(seed).split("passive"));
    act.push_back(regret(f, run_active(a, cfg, grid).x_hat));
    pas.push_back(regret(f, run_passive(p, cfg, grid).x_hat));
  }
  std::sort(act.begin(), act.end());
  std::sort(pas.begin(), pas.end());
  const double ma = 0.5 * (act[9] + act[10]), mp = 0.5 * (pas[9] + pas[10]);
  MESSAGE("median regret active " << ma << " passive " << mp);
  CHECK(ma <= mp);
}

TEST_CASE("passive slope on a shifted square") {
  std::vector<double> xs, ys;
  for (int e = 9; e <= 14; ++e) {
    const std::size_t n = std::size_t{1} << e;
    std::vector<double> r;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto cfg = small_config(n, 4096, 2.0, seed);
      const auto f = shifted_square();
      NoisyOracle p(f, 1.0, n, RngStream(seed).split("passive"));
      r.push_back(regret(f, run_passive(p, cfg).x_hat));
    }
    std::sort(r.begin(), r.end());
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(0.5 * (r[9] + r[10])));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  MESSAGE("passive slope " << slope << " (theory -0.4)");
  CHECK(slope >= -0.55);
  CHECK(slope <= -0.25);
}

}  // TEST_SUITE
