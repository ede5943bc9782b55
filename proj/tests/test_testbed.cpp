#include <doctest.h>

#include <cmath>
#include <numbers>

#include "noisyopt/optimizer.hpp"
#include "noisyopt/testbed.hpp"
#include "support.hpp"

using namespace noisyopt;

TEST_SUITE("testbed") {

TEST_CASE("power family values and volumes") {
  const auto f = make_power_family(1, 0.5, 1.0);
  CHECK(f(Point{0.5}) == doctest::Approx(0.25));
  CHECK(f.volume_law(0.25) == doctest::Approx(0.5));
  CHECK(regret(f, Point{0.1}) == doctest::Approx(0.01));

  const auto g = make_power_family(2, 1.0, 1.0);
  for (double eps : {0.01, 0.1, 0.5, 1.0}) {
    CHECK(g.volume_law(eps) == doctest::Approx(std::numbers::pi / 4.0 * eps).epsilon(1e-12));
  }
}

TEST_CASE("power family rejects beta outside (0, d/alpha]") {
  CHECK(testsupport::error_code_of([] { make_power_family(1, 0.0, 1.0); }) ==
        ErrorCode::kInvalidBeta);
  CHECK(testsupport::error_code_of([] { make_power_family(2, 1.5, 1.0, 2.0); }) ==
        ErrorCode::kInvalidBeta);
}

TEST_CASE("power family volume bracket") {
  for (int d : {1, 2, 3}) {
    for (double beta : {0.25, 0.5, 1.0}) {
      if (beta > d) continue;
      const double a0 = 2.0;
      const auto f = make_power_family(d, beta, a0);
      for (double eps : {1e-3, 0.01, 0.3, 1.0, 2.0}) {
        const double mu = f.volume_law(eps);
        CHECK(mu >= std::pow(eps / (a0 * d), beta) * (1.0 - 1e-12));
        CHECK(mu <= std::pow(eps / a0, beta) * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("constant family") {
  const auto f = make_constant(3, 0.0);
  CHECK(f(Point{0.1, 0.7, 0.3}) == 0.0);
  CHECK(f.volume_law(1e-6) == 1.0);
  CHECK(regret(f, Point{0.9, 0.9, 0.9}) == 0.0);
}

TEST_CASE("strongly convex family") {
  const auto f = make_strongly_convex(2, 2.0, Point{0.5, 0.5});
  CHECK(f(Point{0.5, 0.5}) == 0.0);
  REQUIRE(f.beta_hint);
  CHECK(*f.beta_hint == 1.0);
  const auto g = make_strongly_convex(1, 2.0, Point{0.5});
  CHECK(g.volume_law(0.01) == doctest::Approx(0.2));
}

TEST_CASE("analytic minima agree with brute force") {
  RngStream rng(5);
  const std::vector<FunctionSpec> fs{
      make_power_family(2, 1.0, 1.0), make_strongly_convex(2, 2.0, Point{0.3, 0.6}),
      make_two_valley(2, 0.5), make_constant(1, 1.5), make_power_family(1, 0.5, 1.0)};
  for (const auto& f : fs) {
    const auto bf = brute_force_minimum(f, rng);
    const double slack = f.holder_M * std::pow(bf.spacing, std::min(f.alpha, 1.0));
    CHECK(bf.value >= f.min_value() - 1e-12);
    CHECK(bf.value <= f.min_value() + slack);
  }
}

TEST_CASE("Holder self-check on the kappa level set") {
  RngStream rng(11);
  const std::vector<FunctionSpec> fs{make_strongly_convex(2, 2.0, Point{0.3, 0.6}),
                                     make_power_family(2, 1.0, 1.0), make_two_valley(1, 0.5)};
  for (const auto& f : fs) {
    const double fstar = f.min_value();
    int checked = 0;
    for (int t = 0; t < 20000; ++t) {
      Point a(f.dim), b(f.dim);
      for (int i = 0; i < f.dim; ++i) {
        a[i] = rng.uniform();
        b[i] = std::clamp(a[i] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
      }
      if (f(a) - fstar > f.kappa || f(b) - fstar > f.kappa) continue;
      const double r = linf_distance(a, b);
      CHECK(std::abs(f(a) - f(b)) <= f.holder_M * std::pow(r, std::min(f.alpha, 1.0)) + 1e-12);
      ++checked;
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("smoothstep values and flat ends") {
  CHECK(smoothstep(1, 1.0, 0.5) == doctest::Approx(0.5));
  for (int N = 0; N <= 5; ++N) {
    CHECK(smoothstep(N, 1.0, 0.0) == 0.0);
    CHECK(smoothstep(N, 1.0, 1.0) == doctest::Approx(1.0));
  }
  // S_2 continues as 0 below 0 and 1 above 1. First differences vanish to
  // 1e-6 at step 1e-4; second differences carry an O(step) truncation error
  // (third derivative at most 60), so they are held to that bound and must
  // shrink with the step.
  auto S = [](double x) { return x <= 0.0 ? 0.0 : x >= 1.0 ? 1.0 : smoothstep(2, 1.0, x); };
  auto d1 = [&](double x, double s) { return (S(x + s) - S(x - s)) / (2 * s); };
  auto d2 = [&](double x, double s) { return (S(x + s) - 2 * S(x) + S(x - s)) / (s * s); };
  for (double x : {0.0, 1.0}) {
    CHECK(std::abs(d1(x, 1e-4)) < 1e-6);
    CHECK(std::abs(d2(x, 1e-4)) <= 60.0 * 1e-4);
    CHECK(std::abs(d2(x, 1e-5)) <= 0.2 * std::abs(d2(x, 1e-4)));
  }
}

TEST_CASE("bump support and peak") {
  const Point x{0.4, 0.5};
  const double h = 0.1, M = 3.0, alpha = 2.0;
  CHECK(bump(x, h, M, alpha, 2, Point{0.4 + 2 * h, 0.5}) == 0.0);
  CHECK(bump(x, h, M, alpha, 2, Point{0.4, 0.5 - 2 * h}) == 0.0);
  CHECK(bump(x, h, M, alpha, 2, x) == doctest::Approx(bump_peak(h, M, alpha)));
  CHECK(bump_peak(h, M, alpha, 2.0) == doctest::Approx(0.5 * M * h * h / 2.0));
  // The profile vanishes once the l1 norm reaches 1.
  RngStream rng(1);
  for (int t = 0; t < 10000; ++t) {
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Point u{std::cos(th), std::sin(th)};
    CHECK(bump_profile(2, 1.0, u) >= -1e-15);
  }
  CHECK(bump_profile(2, 1.0, Point{0.6, 0.4}) == doctest::Approx(0.0));
}

TEST_CASE("bump gradient scales like M h^(alpha - 1)") {
  const Point x{0.5};
  const double M = 1.0, alpha = 2.0;
  for (double h : {0.2, 0.05}) {
    double worst = 0.0;
    const double s = h * 1e-4;
    for (int i = 1; i < 1000; ++i) {
      const double z = 0.5 - h + 2 * h * i / 1000.0;
      const double g = (bump(x, h, M, alpha, 2, Point{z + s}) - bump(x, h, M, alpha, 2, Point{z - s})) / (2 * s);
      worst = std::max(worst, std::abs(g));
    }
    CHECK(worst <= 5.0 * M * std::pow(h, alpha - 1.0));
  }
}

TEST_CASE("adversarial perturbation of a flat function") {
  const auto f0 = make_constant(1, 0.0);
  const Point x{0.37};
  const double h = 0.1;
  const auto f = make_adversarial(f0, x, h, 2);
  const double peak = bump_peak(h, f0.holder_M, f0.alpha);
  REQUIRE(f.minimizer);
  CHECK((*f.minimizer)[0] == doctest::Approx(0.37));
  CHECK(f.min_value() == doctest::Approx(-peak));
  CHECK(f(Point{0.37 + 1.5 * h}) == 0.0);
  double sup = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const Point z{i / 10000.0};
    sup = std::max(sup, std::abs(f(z) - f0(z)));
  }
  CHECK(sup == doctest::Approx(peak).epsilon(1e-6));
}

TEST_CASE("level-set packing") {
  const auto flat = make_constant(1, 0.0);
  const auto p = pack_level_set(flat, 1.0, 0.25, 1001);
  CHECK(p.size() >= 2);

  const auto f = make_strongly_convex(2, 2.0, Point{0.5, 0.5});
  const auto q = pack_level_set(f, 0.02, 0.03, 20000);
  CHECK(q.size() >= 2);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = i + 1; j < q.size(); ++j) CHECK(linf_distance(q[i], q[j]) >= 0.06 - 1e-12);
  }
  // Too thin a level set holds no box of this size.
  CHECK(pack_level_set(f, 1e-6, 0.2, 20000).empty());
}

TEST_CASE("Monte Carlo volumes") {
  RngStream rng(3);
  CHECK(estimate_volume(make_constant(2), 0.1, 1000, rng) == 1.0);
  const auto f = make_power_family(1, 0.5, 1.0);
  CHECK(std::abs(estimate_volume(f, 0.25, 1000000, rng) - 0.5) <= 0.002);
  CHECK(estimate_volume(make_strongly_convex(2, 2.0, Point{0.5, 0.5}), 0.0, 100000, rng) == 0.0);

  RngStream a(8);
  const auto prof = monte_carlo_profile(f, {0.01, 0.05, 0.1, 0.3}, 20000, a);
  for (std::size_t i = 1; i < prof.volumes.size(); ++i) CHECK(prof.volumes[i] >= prof.volumes[i - 1]);
  for (double v : prof.volumes) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("covering and packing diagnostics") {
  const auto f = make_strongly_convex(1, 2.0, Point{0.5});
  const auto prof = analytic_profile(f, {0.01});  // level set [0.4, 0.6], r = 0.1
  const std::vector<double> deltas{0.01, 0.02, 0.05, 0.5};
  const auto rep = check_A2(prof, f, deltas);
  REQUIRE(rep.entries.size() == 4);
  for (const auto& e : rep.entries) {
    if (e.delta >= 0.2) {
      CHECK(e.cover == 1);
    } else {
      // The optimal net needs about r / delta centers; a greedy sweep in grid
      // order places them delta apart, at most twice that.
      const double expect = 0.1 / e.delta;
      CHECK(static_cast<double>(e.cover) >= 0.9 * expect);
      CHECK(static_cast<double>(e.cover) <= 2.0 * expect + 1.0);
    }
    CHECK(e.packing <= e.cover);
  }
}

TEST_CASE("theoretical rates") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (int d : {1, 2, 3}) {
      CHECK(theoretical_rate(1e4, alpha, d, 0.0) == std::pow(1e4, -alpha / (2 * alpha + d)));
      CHECK(theoretical_rate(1e4, alpha, d, d / alpha) == std::pow(1e4, -0.5));
    }
  }
  CHECK(theoretical_rate(1e4, 2.0, 2, 0.0) == doctest::Approx(0.0464).epsilon(1e-3));
  CHECK(testsupport::error_code_of([] { theoretical_rate(100, 1.0, 1, 3.5); }) ==
        ErrorCode::kInvalidBeta);
}

TEST_CASE("solve_eps_n against closed forms") {
  const auto& grid = eps_grid();
  const double step = grid[1] / grid[0];
  for (double n : {1e3, 1e4, 1e6}) {
    const auto flat = make_constant(1);
    const double lower = solve_eps_n(flat, n, default_omega(1, 1.0), EpsVariant::kLower);
    const double closed = std::pow(n, -flat.alpha / (2 * flat.alpha + 1));
    CHECK(lower <= closed * (1 + 1e-12));
    CHECK(lower * step >= closed);

    const double beta = 0.5;
    auto mu = [beta](double e) { return std::pow(e, beta); };
    const double alpha = 2.0;
    const double l = solve_eps_n(mu, 2, alpha, n, default_omega(2, alpha), EpsVariant::kLower);
    const double c = std::pow(n, -alpha / (2 * alpha + 2 - alpha * beta));
    CHECK(l <= c * (1 + 1e-12));
    CHECK(l * step >= c);
    const double u = solve_eps_n(mu, 2, alpha, n, default_omega(2, alpha), EpsVariant::kUpper);
    CHECK(u >= l);
  }
}

}  // TEST_SUITE
