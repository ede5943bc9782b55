#include <doctest.h>

#include <cmath>
#include <numeric>

#include "noisyopt/oracle.hpp"
#include "noisyopt/testbed.hpp"
#include "support.hpp"

using namespace noisyopt;

namespace {

FunctionSpec square_1d() {
  FunctionSpec f;
  f.name = "square";
  f.dim = 1;
  f.eval = [](PointView x) { return x[0] * x[0]; };
  f.analytic_min = 0.0;
  return f;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("noiseless queries evaluate the objective") {
  NoisyOracle zero(make_constant(1), 0.0, 10, RngStream(1));
  const Point half{0.5};
  CHECK(zero.query(half) == 0.0);

  NoisyOracle sq(square_1d(), 0.0, 10, RngStream(1));
  CHECK(sq.query(half) == 0.25);
  CHECK(sq.query(half) == 0.25);
  CHECK(sq.used() == 2);
  CHECK(sq.log().size() == 2);
}

TEST_CASE("noise has unit variance and no lag-one correlation") {
  const std::size_t n = 100000;
  NoisyOracle o(make_constant(1), 1.0, n, RngStream(7));
  const Point x{0.5};
  std::vector<double> y(n);
  for (auto& v : y) v = o.query(x);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0, lag = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (y[i] - mean) * (y[i] - mean);
  for (std::size_t i = 1; i < n; ++i) lag += (y[i] - mean) * (y[i - 1] - mean);
  var /= n - 1;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
  CHECK(std::abs(lag / (var * (n - 1))) < 0.02);
}

TEST_CASE("batch_uniform draws from the support") {
  PointSet single(1);
  single.push_back(Point{0.3});
  NoisyOracle o(make_constant(1), 0.0, 20000, RngStream(3));
  const auto log = o.batch_uniform(single, 3);
  REQUIRE(log.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(log.point(t)[0] == 0.3);

  PointSet two(1);
  two.push_back(Point{0.2});
  two.push_back(Point{0.8});
  const auto big = o.batch_uniform(two, 10000);
  std::size_t a = 0;
  for (std::size_t t = 0; t < big.size(); ++t) a += big.point(t)[0] == 0.2;
  const double freq = static_cast<double>(a) / 10000.0;
  CHECK(freq >= 0.48);
  CHECK(freq <= 0.52);
}

TEST_CASE("budget is enforced at the oracle") {
  NoisyOracle o(make_constant(1), 1.0, 5, RngStream(0));
  PointSet pts(1);
  pts.push_back(Point{0.5});
  CHECK(testsupport::error_code_of([&] { o.batch_uniform(pts, 6); }) ==
        ErrorCode::kBudgetExhausted);
  CHECK(o.used() == 0);
  o.batch_uniform(pts, 5);
  CHECK(o.remaining() == 0);
  CHECK(testsupport::error_code_of([&] { o.query(Point{0.5}); }) == ErrorCode::kBudgetExhausted);
  CHECK(o.used() == o.budget());
}

TEST_CASE("queries outside the cube are rejected") {
  NoisyOracle o(make_constant(2), 1.0, 5, RngStream(0));
  CHECK(testsupport::error_code_of([&] { o.query(Point{0.5, 1.5}); }) ==
        ErrorCode::kDomainViolation);
}

TEST_CASE("same seed and call sequence give identical responses") {
  auto run = [] {
    NoisyOracle o(make_constant(2), 1.0, 200, RngStream(42));
    auto log = o.batch_uniform_cube(100);
    for (int i = 0; i < 100; ++i) o.query(Point{0.1, 0.9});
    return o.log().responses();
  };
  CHECK(run() == run());
}

TEST_CASE("log is append-only in query order") {
  NoisyOracle o(square_1d(), 0.0, 3, RngStream(0));
  o.query(Point{0.1});
  o.query(Point{0.2});
  o.query(Point{0.3});
  REQUIRE(o.log().size() == 3);
  CHECK(o.log().point(0)[0] == 0.1);
  CHECK(o.log().point(2)[0] == 0.3);
  CHECK(o.log().response(1) == doctest::Approx(0.04));
}

TEST_CASE("split streams are reproducible and independent of parent draws") {
  RngStream a(9), b(9);
  for (int i = 0; i < 10; ++i) a.uniform();
  auto ca = a.split("child");
  auto cb = b.split("child");
  CHECK(ca.uniform() == cb.uniform());
  CHECK(a.split(1).key() != a.split(2).key());
}

}  // TEST_SUITE
