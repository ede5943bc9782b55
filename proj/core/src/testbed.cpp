#include "noisyopt/testbed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>
#include <utility>

namespace noisyopt {

double FunctionSpec::min_value() const {
  if (!analytic_min) throw Error(ErrorCode::kNoMinimum, "minimum of '" + name + "' is unknown");
  return *analytic_min;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 4> kGaussNodes = {0.1834346424956498, 0.5255324099163290,
                                               0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kGaussWeights = {0.3626837833783620, 0.3137066458778873,
                                                 0.2223810344533745, 0.1012285362903763};

template <typename F>
double gauss_panels(F&& f, double a, double b, int panels) {
  double total = 0.0;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    double s = 0.0;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i) {
      s += kGaussWeights[i] * (f(mid - half * kGaussNodes[i]) + f(mid + half * kGaussNodes[i]));
    }
    total += s * half;
  }
  return total;
}

// Integrates over [a, b], restarting the composite rule at every kink in `splits`.
template <typename F>
double integrate_split(F&& f, double a, double b, std::vector<double> splits, int panels = 16) {
  splits.erase(std::remove_if(splits.begin(), splits.end(),
                              [&](double s) { return !(s > a && s < b); }),
               splits.end());
  std::sort(splits.begin(), splits.end());
  double total = 0.0;
  double lo = a;
  for (double s : splits) {
    total += gauss_panels(f, lo, s, panels);
    lo = s;
  }
  return total + gauss_panels(f, lo, b, panels);
}

// vol{z in [0,1]^d : sum z_j^p <= r}
double power_volume(int d, double p, double r) {
  if (r <= 0.0) return 0.0;
  if (r >= d) return 1.0;
  if (r <= 1.0) {
    return std::pow(r, d / p) * std::pow(std::tgamma(1.0 + 1.0 / p), d) /
           std::tgamma(1.0 + d / p);
  }
  std::vector<double> splits;
  for (int k = 1; k < d; ++k) {
    if (r - k > 0.0 && r - k < 1.0) splits.push_back(std::pow(r - k, 1.0 / p));
  }
  return integrate_split([&](double z) { return power_volume(d - 1, p, r - std::pow(z, p)); },
                         0.0, 1.0, std::move(splits));
}

// vol{z in [0,1]^d : ||z - c||_2 <= r}
double ball_cube_volume(std::span<const double> c, double r) {
  if (r <= 0.0) return 0.0;
  const auto d = c.size();
  if (d == 1) return std::max(0.0, std::min(1.0, c[0] + r) - std::max(0.0, c[0] - r));
  const bool inside = std::all_of(c.begin(), c.end(),
                                  [r](double ci) { return ci - r >= 0.0 && ci + r <= 1.0; });
  if (inside) {
    const double dd = static_cast<double>(d);
    return std::pow(std::numbers::pi, dd / 2) / std::tgamma(dd / 2 + 1) * std::pow(r, dd);
  }
  const double lo = std::max(0.0, c[0] - r);
  const double hi = std::min(1.0, c[0] + r);
  if (lo >= hi) return 0.0;
  const double t_lo = std::asin(std::clamp((lo - c[0]) / r, -1.0, 1.0));
  const double t_hi = std::asin(std::clamp((hi - c[0]) / r, -1.0, 1.0));
  std::vector<double> splits;
  for (std::size_t j = 1; j < d; ++j) {
    for (double s : {c[j], 1.0 - c[j]}) {
      if (s < r) {
        const double t = std::acos(s / r);
        splits.push_back(t);
        splits.push_back(-t);
      }
    }
  }
  const auto rest = c.subspan(1);
  return integrate_split(
      [&](double t) {
        const double rc = r * std::cos(t);
        return rc * ball_cube_volume(rest, rc);
      },
      t_lo, t_hi, std::move(splits));
}

double falling(double p, int j) {
  double v = 1.0;
  for (int i = 0; i < j; ++i) v *= (p - i);
  return v;
}

// Iterates a regular grid with `per_axis` nodes on [lo_i, hi_i], first
// coordinate most significant (lexicographic order of the points).
template <typename F>
void for_each_grid_point(std::span<const double> lo, std::span<const double> hi,
                         std::size_t per_axis, F&& visit) {
  const std::size_t d = lo.size();
  std::vector<std::size_t> idx(d, 0);
  Point z(d);
  auto coord = [&](std::size_t axis, std::size_t i) {
    if (per_axis == 1) return 0.5 * (lo[axis] + hi[axis]);
    if (i + 1 == per_axis) return hi[axis];
    return lo[axis] + (hi[axis] - lo[axis]) * static_cast<double>(i) /
                          static_cast<double>(per_axis - 1);
  };
  while (true) {
    for (std::size_t a = 0; a < d; ++a) z[a] = coord(a, idx[a]);
    visit(PointView(z));
    std::size_t a = d;
    while (a > 0) {
      --a;
      if (++idx[a] < per_axis) break;
      idx[a] = 0;
      if (a == 0) return;
    }
    if (d == 0) return;
  }
}

std::size_t per_axis_for(std::size_t total, std::size_t d) {
  const double c = std::pow(static_cast<double>(total), 1.0 / static_cast<double>(d));
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(c)));
}

// Uniform hash of points into cubic cells, used for neighbour queries.
class CellHash {
 public:
  CellHash(std::size_t dim, double cell) : dim_(dim), cell_(cell), points_(dim) {}

  void insert(PointView p) {
    cells_[key_of(p)].push_back(points_.size());
    points_.push_back(p);
  }

  // True when some stored point q satisfies pred(q); only the 3^d cells around p are scanned.
  template <typename Pred>
  bool any_near(PointView p, Pred&& pred) const {
    std::vector<std::int64_t> base(dim_), off(dim_, -1);
    for (std::size_t i = 0; i < dim_; ++i) base[i] = cell_index(p[i]);
    while (true) {
      std::vector<std::int64_t> c(dim_);
      for (std::size_t i = 0; i < dim_; ++i) c[i] = base[i] + off[i];
      auto it = cells_.find(hash(c));
      if (it != cells_.end()) {
        for (std::size_t idx : it->second) {
          if (pred(points_[idx])) return true;
        }
      }
      std::size_t a = 0;
      while (a < dim_ && ++off[a] > 1) off[a++] = -1;
      if (a == dim_) return false;
    }
  }

  std::size_t size() const { return points_.size(); }
  const PointSet& points() const { return points_; }

 private:
  std::int64_t cell_index(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  static std::uint64_t hash(const std::vector<std::int64_t>& c) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return h;
  }
  std::uint64_t key_of(PointView p) const {
    std::vector<std::int64_t> c(dim_);
    for (std::size_t i = 0; i < dim_; ++i) c[i] = cell_index(p[i]);
    return hash(c);
  }

  std::size_t dim_;
  double cell_;
  PointSet points_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

void require_dim(int d) {
  if (d < 1) throw Error(ErrorCode::kConfig, "dimension must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------

FunctionSpec make_power_family(int d, double beta, double a0, double alpha) {
  require_dim(d);
  if (!(alpha > 0.0)) throw Error(ErrorCode::kConfig, "alpha must be positive");
  if (!(beta > 0.0) || beta > d / alpha * (1.0 + 1e-12)) {
    throw Error(ErrorCode::kInvalidBeta, "power family needs beta in (0, d/alpha]");
  }
  if (!(a0 > 0.0)) throw Error(ErrorCode::kConfig, "a0 must be positive");
  const double p = d / beta;
  const int k = static_cast<int>(std::floor(alpha));

  double M = a0 * d;
  for (int j = 1; j <= k; ++j) M += d * a0 * falling(p, j);
  M += d * a0 * falling(p, k) * std::max(p - k, 1.0);

  FunctionSpec f;
  f.name = "power";
  f.dim = d;
  f.alpha = alpha;
  f.holder_M = M;
  f.eval = [a0, p](PointView z) {
    double s = 0.0;
    for (double v : z) s += std::pow(v, p);
    return a0 * s;
  };
  f.analytic_min = 0.0;
  f.minimizer = Point(static_cast<std::size_t>(d), 0.0);
  f.volume_law = [d, p, a0](double eps) { return power_volume(d, p, eps / a0); };
  f.beta_hint = beta;
  return f;
}

FunctionSpec make_constant(int d, double value) {
  require_dim(d);
  FunctionSpec f;
  f.name = "constant";
  f.dim = d;
  f.alpha = 2.0;
  f.holder_M = std::max(1.0, std::abs(value));
  f.eval = [value](PointView) { return value; };
  f.analytic_min = value;
  f.minimizer = Point(static_cast<std::size_t>(d), 0.5);
  f.volume_law = [](double eps) { return eps >= 0.0 ? 1.0 : 0.0; };
  f.beta_hint = 0.0;
  return f;
}

FunctionSpec make_strongly_convex(int d, double sigma, const Point& center) {
  require_dim(d);
  if (!(sigma > 0.0)) throw Error(ErrorCode::kConfig, "sigma must be positive");
  if (center.size() != static_cast<std::size_t>(d) || !in_unit_cube(center)) {
    throw Error(ErrorCode::kDomainViolation, "center must lie in [0,1]^d");
  }
  double sup_f = 0.0, sup_grad = 0.0;
  for (double c : center) {
    const double reach = std::max(c, 1.0 - c);
    sup_f += 0.5 * sigma * reach * reach;
    sup_grad += sigma * reach;
  }
  FunctionSpec f;
  f.name = "convex";
  f.dim = d;
  f.alpha = 2.0;
  f.holder_M = sup_f + sup_grad + sigma * d;
  f.eval = [sigma, center](PointView z) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (z[i] - center[i]) * (z[i] - center[i]);
    return 0.5 * sigma * s;
  };
  f.analytic_min = 0.0;
  f.minimizer = center;
  f.volume_law = [sigma, center](double eps) {
    if (eps <= 0.0) return 0.0;
    return ball_cube_volume(center, std::sqrt(2.0 * eps / sigma));
  };
  f.beta_hint = d / 2.0;
  return f;
}

FunctionSpec make_two_valley(int d, double raise) {
  require_dim(d);
  if (!(raise > 0.0)) throw Error(ErrorCode::kConfig, "raise must be positive");
  Point low(static_cast<std::size_t>(d), 0.5), high(static_cast<std::size_t>(d), 0.5);
  low[0] = 0.25;
  high[0] = 0.75;
  FunctionSpec f;
  f.name = "two-valley";
  f.dim = d;
  f.alpha = 2.0;
  f.holder_M = (0.0625 + 0.25 * (d - 1)) + d + 2.0 * d;
  f.kappa = raise / 2.0;
  f.eval = [low, high, raise](PointView z) {
    const bool left = z[0] < 0.5;
    const Point& c = left ? low : high;
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += (z[i] - c[i]) * (z[i] - c[i]);
    return left ? s : raise + s;
  };
  f.analytic_min = 0.0;
  f.minimizer = low;
  return f;
}

// ---------------------------------------------------------------------------

BruteForceMinimum brute_force_minimum(const FunctionSpec& f, RngStream& rng) {
  const auto d = static_cast<std::size_t>(f.dim);
  BruteForceMinimum best{kInf, Point(d), 0.0};
  if (d <= 2) {
    const std::size_t per_axis = d == 1 ? 100000 : 317;
    const Point lo(d, 0.0), hi(d, 1.0);
    for_each_grid_point(lo, hi, per_axis, [&](PointView z) {
      const double v = f(z);
      if (v < best.value) {
        best.value = v;
        best.argmin.assign(z.begin(), z.end());
      }
    });
    best.spacing = 1.0 / static_cast<double>(per_axis - 1);
  } else {
    constexpr std::size_t kDraws = 1000000;
    Point z(d);
    for (std::size_t i = 0; i < kDraws; ++i) {
      for (auto& v : z) v = rng.uniform();
      const double v = f(z);
      if (v < best.value) {
        best.value = v;
        best.argmin = z;
      }
    }
    best.spacing = std::pow(static_cast<double>(kDraws), -1.0 / static_cast<double>(d));
  }
  return best;
}

BruteForceMinimum brute_force_minimum_box(const FunctionSpec& f, PointView lo, PointView hi,
                                          std::size_t points) {
  const std::size_t d = lo.size();
  Point a(d), b(d);
  for (std::size_t i = 0; i < d; ++i) {
    a[i] = std::clamp(lo[i], 0.0, 1.0);
    b[i] = std::clamp(hi[i], 0.0, 1.0);
  }
  const std::size_t per_axis = per_axis_for(points, d);
  BruteForceMinimum best{kInf, Point(d), 0.0};
  for_each_grid_point(a, b, per_axis, [&](PointView z) {
    const double v = f(z);
    if (v < best.value) {
      best.value = v;
      best.argmin.assign(z.begin(), z.end());
    }
  });
  for (std::size_t i = 0; i < d; ++i) {
    best.spacing = std::max(best.spacing, (b[i] - a[i]) / static_cast<double>(per_axis - 1));
  }
  return best;
}

FunctionSpec with_brute_force_minimum(FunctionSpec f, RngStream& rng) {
  if (!f.analytic_min) {
    const auto bf = brute_force_minimum(f, rng);
    f.analytic_min = bf.value;
    f.minimizer = bf.argmin;
  }
  return f;
}

// ---------------------------------------------------------------------------

double smoothstep(int N, double Z, double x) {
  if (N < 0) throw Error(ErrorCode::kConfig, "smoothstep order must be nonnegative");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::kDomainViolation, "smoothstep needs x in [0,1]");
  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  double sum = 0.0;
  double power = 1.0;  // (-x)^n
  for (int n = 0; n <= N; ++n) {
    sum += binom(N + n, n) * binom(2 * N + 1, N - n) * power;
    power *= -x;
  }
  return std::pow(x, N + 1) * sum / Z;
}

double bump_profile(int N, double Z, PointView u) {
  double l1 = 0.0;
  for (double v : u) l1 += std::abs(v);
  return 1.0 / Z - smoothstep(N, Z, std::min(1.0, l1));
}

double bump_peak(double h, double M, double alpha, double Z) {
  return 0.5 * M * std::pow(h, alpha) / Z;
}

double bump(PointView x, double h, double M, double alpha, int N, PointView z, double Z) {
  if (linf_distance(x, z) > h) return 0.0;
  Point u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (z[i] - x[i]) / h;
  return 0.5 * M * std::pow(h, alpha) * bump_profile(N, Z, u);
}

FunctionSpec make_adversarial(const FunctionSpec& f0, PointView x, double h, int N, double Z) {
  if (x.size() != static_cast<std::size_t>(f0.dim) || !in_unit_cube(x)) {
    throw Error(ErrorCode::kDomainViolation, "bump center must lie in [0,1]^d");
  }
  const Point center(x.begin(), x.end());
  const double M = f0.holder_M;
  const double alpha = f0.alpha;

  FunctionSpec f;
  f.name = f0.name + "+bump";
  f.dim = f0.dim;
  f.alpha = f0.alpha;
  f.holder_M = 2.0 * f0.holder_M;
  f.kappa = f0.kappa;
  f.eval = [g = f0.eval, center, h, M, alpha, N, Z](PointView z) {
    return g(z) - bump(center, h, M, alpha, N, z, Z);
  };

  const std::size_t d = center.size();
  Point lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = center[i] - h;
    hi[i] = center[i] + h;
  }
  auto box = brute_force_minimum_box(f, lo, hi, d <= 2 ? 100000 : 200000);
  if (const double at_center = f(center); at_center <= box.value) {
    box.value = at_center;
    box.argmin = center;
  }
  if (f0.analytic_min) {
    if (*f0.analytic_min < box.value) {
      f.analytic_min = *f0.analytic_min;
      f.minimizer = f0.minimizer;
    } else {
      f.analytic_min = box.value;
      f.minimizer = box.argmin;
    }
  }
  return f;
}

PointSet pack_level_set(const FunctionSpec& f0, double eps, double h, std::size_t candidates) {
  if (!(eps > 0.0) || !(h > 0.0)) throw Error(ErrorCode::kConfig, "packing needs eps > 0 and h > 0");
  const double fstar = f0.min_value();
  const double level = fstar + eps;
  const auto d = static_cast<std::size_t>(f0.dim);
  constexpr double kTol = 1e-12;

  CellHash accepted(d, 2.0 * h);
  Point corner(d);
  const Point lo(d, 0.0), hi(d, 1.0);
  for_each_grid_point(lo, hi, per_axis_for(candidates, d), [&](PointView p) {
    for (double v : p) {
      if (v - h < -kTol || v + h > 1.0 + kTol) return;
    }
    if (f0(p) > level) return;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      for (std::size_t i = 0; i < d; ++i) {
        corner[i] = std::clamp(p[i] + (((mask >> i) & 1U) ? h : -h), 0.0, 1.0);
      }
      if (f0(corner) > level) return;
    }
    const bool overlaps = accepted.any_near(
        p, [&](PointView q) { return linf_distance(p, q) < 2.0 * h - kTol; });
    if (!overlaps) accepted.insert(p);
  });
  return accepted.points();
}

// ---------------------------------------------------------------------------

double estimate_volume(const FunctionSpec& f0, double eps, std::size_t samples, RngStream& rng) {
  if (samples == 0) throw Error(ErrorCode::kConfig, "estimate_volume needs samples >= 1");
  const double level = f0.min_value() + eps;
  Point z(static_cast<std::size_t>(f0.dim));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    for (auto& v : z) v = rng.uniform();
    if (f0(z) <= level) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

const char* to_string(VolumeMethod m) noexcept {
  return m == VolumeMethod::kAnalytic ? "analytic" : "monte-carlo";
}

double LevelSetProfile::volume_at(double eps) const {
  if (epsilons.empty()) throw Error(ErrorCode::kInsufficientData, "empty level-set profile");
  if (eps <= epsilons.front()) return volumes.front();
  if (eps >= epsilons.back()) return volumes.back();
  const auto it = std::upper_bound(epsilons.begin(), epsilons.end(), eps);
  const auto i = static_cast<std::size_t>(it - epsilons.begin());
  const double t = (eps - epsilons[i - 1]) / (epsilons[i] - epsilons[i - 1]);
  return volumes[i - 1] + t * (volumes[i] - volumes[i - 1]);
}

namespace {
void require_increasing(const std::vector<double>& eps) {
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] > eps[i - 1]))) {
      throw Error(ErrorCode::kConfig, "profile epsilons must be positive and increasing");
    }
  }
}
}  // namespace

LevelSetProfile analytic_profile(const FunctionSpec& f0, std::vector<double> epsilons) {
  require_increasing(epsilons);
  if (!f0.has_volume_law()) throw Error(ErrorCode::kConfig, "'" + f0.name + "' has no volume law");
  LevelSetProfile p;
  p.method = VolumeMethod::kAnalytic;
  for (double e : epsilons) p.volumes.push_back(std::clamp(f0.volume_law(e), 0.0, 1.0));
  p.epsilons = std::move(epsilons);
  return p;
}

LevelSetProfile monte_carlo_profile(const FunctionSpec& f0, std::vector<double> epsilons,
                                    std::size_t samples, RngStream& rng) {
  require_increasing(epsilons);
  if (samples == 0) throw Error(ErrorCode::kConfig, "monte_carlo_profile needs samples >= 1");
  const double fstar = f0.min_value();
  std::vector<double> gaps(samples);
  Point z(static_cast<std::size_t>(f0.dim));
  for (auto& g : gaps) {
    for (auto& v : z) v = rng.uniform();
    g = f0(z) - fstar;
  }
  std::sort(gaps.begin(), gaps.end());
  LevelSetProfile p;
  p.method = VolumeMethod::kMonteCarlo;
  p.mc_samples = samples;
  for (double e : epsilons) {
    const auto hits = std::upper_bound(gaps.begin(), gaps.end(), e) - gaps.begin();
    p.volumes.push_back(static_cast<double>(hits) / static_cast<double>(samples));
  }
  p.epsilons = std::move(epsilons);
  return p;
}

void write_profile_csv(const LevelSetProfile& profile, std::ostream& out) {
  out << "eps,volume,method,samples\n";
  char buf[96];
  for (std::size_t i = 0; i < profile.epsilons.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", profile.epsilons[i], profile.volumes[i]);
    out << buf << to_string(profile.method) << ',' << profile.mc_samples << '\n';
  }
}

void write_profile_csv(const LevelSetProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  write_profile_csv(profile, out);
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path);
}

A2Report check_A2(const LevelSetProfile& profile, const FunctionSpec& f0,
                  std::span<const double> deltas, std::size_t resolution) {
  const auto d = static_cast<std::size_t>(f0.dim);
  if (resolution == 0) {
    resolution = d == 1 ? 20001 : d == 2 ? 401 : d == 3 ? 81 : per_axis_for(2000000, d);
  }
  const double fstar = f0.min_value();
  const Point lo(d, 0.0), hi(d, 1.0);

  // Values on the discretisation grid, in lexicographic order.
  PointSet grid(d);
  std::vector<double> values;
  for_each_grid_point(lo, hi, resolution, [&](PointView z) {
    grid.push_back(z);
    values.push_back(f0(z) - fstar);
  });

  A2Report report;
  report.c0_hat = 0.0;
  report.c0_prime_hat = kInf;
  Point probe(d);
  for (std::size_t e = 0; e < profile.epsilons.size(); ++e) {
    const double eps = profile.epsilons[e];
    const double mu = profile.volumes[e];
    auto in_level = [&](PointView z) {
      if (!in_unit_cube(z)) return false;
      return f0(z) - fstar <= eps;
    };
    for (double delta : deltas) {
      A2Entry entry{eps, delta, mu, 0, 0, 0.0, 0.0};

      CellHash centers(d, delta);
      CellHash packed(d, 2.0 * delta);
      const double diag = delta / std::sqrt(static_cast<double>(d));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (values[i] > eps) continue;
        const PointView p = grid[i];
        const bool covered =
            centers.any_near(p, [&](PointView q) { return l2_distance(p, q) <= delta; });
        if (!covered) centers.insert(p);

        const bool clash =
            packed.any_near(p, [&](PointView q) { return l2_distance(p, q) < 2.0 * delta; });
        if (clash) continue;
        bool contained = true;
        for (std::size_t a = 0; a < d && contained; ++a) {
          for (double s : {-delta, delta}) {
            probe.assign(p.begin(), p.end());
            probe[a] += s;
            if (!in_level(probe)) {
              contained = false;
              break;
            }
          }
        }
        for (std::size_t mask = 0; contained && d > 1 && mask < (std::size_t{1} << d); ++mask) {
          for (std::size_t a = 0; a < d; ++a) probe[a] = p[a] + (((mask >> a) & 1U) ? diag : -diag);
          contained = in_level(probe);
        }
        if (contained) packed.insert(p);
      }
      entry.cover = centers.size();
      entry.packing = packed.size();
      const double scaled = mu * std::pow(delta, -static_cast<double>(d));
      entry.cover_ratio = static_cast<double>(entry.cover) / (1.0 + scaled);
      entry.packing_ratio = scaled > 0.0 ? static_cast<double>(entry.packing) / scaled : kInf;
      report.c0_hat = std::max(report.c0_hat, entry.cover_ratio);
      report.c0_prime_hat = std::min(report.c0_prime_hat, entry.packing_ratio);
      report.entries.push_back(entry);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

double theoretical_exponent(double alpha, int d, double beta) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kConfig, "alpha must be positive");
  if (!(beta >= 0.0) || !(beta < 2.0 + d / alpha)) {
    throw Error(ErrorCode::kInvalidBeta, "rate needs beta in [0, 2 + d/alpha)");
  }
  double slack = d - alpha * beta;
  // beta = d/alpha is the n^{-1/2} endpoint; absorb the rounding of alpha * (d/alpha).
  if (std::abs(slack) <= 8.0 * std::numeric_limits<double>::epsilon() * d) slack = 0.0;
  return -alpha / (2.0 * alpha + slack);
}

double theoretical_rate(double n, double alpha, int d, double beta) {
  return std::pow(n, theoretical_exponent(alpha, d, beta));
}

double default_omega(int d, double alpha) { return 6.0 + d / alpha; }

const std::vector<double>& eps_grid() {
  static const std::vector<double> grid = [] {
    constexpr int kPoints = 400;
    std::vector<double> g(kPoints);
    for (int i = 0; i < kPoints; ++i) g[i] = std::pow(10.0, -8.0 + 8.0 * i / (kPoints - 1));
    g.back() = 1.0;
    return g;
  }();
  return grid;
}

double solve_eps_n(const std::function<double(double)>& mu, int d, double alpha, double n,
                   double omega, EpsVariant variant) {
  if (!(n >= 2.0)) throw Error(ErrorCode::kConfig, "solve_eps_n needs n >= 2");
  double log_threshold = std::log(n);
  if (variant == EpsVariant::kUpper) {
    log_threshold -= omega * std::log(std::max(1.0, std::log(n)));
  }
  const double order = 2.0 + d / alpha;
  const auto& grid = eps_grid();
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double m = mu(*it);
    if (m > 0.0 && -order * std::log(*it) + std::log(m) >= log_threshold) return *it;
  }
  return grid.front();
}

double solve_eps_n(const FunctionSpec& f0, double n, double omega, EpsVariant variant) {
  if (!f0.has_volume_law()) throw Error(ErrorCode::kConfig, "'" + f0.name + "' has no volume law");
  return solve_eps_n(f0.volume_law, f0.dim, f0.alpha, n, omega, variant);
}

double solve_eps_n(const LevelSetProfile& profile, int d, double alpha, double n, double omega,
                   EpsVariant variant) {
  return solve_eps_n([&](double e) { return profile.volume_at(e); }, d, alpha, n, omega, variant);
}

}  // namespace noisyopt
