#include "noisyopt/bandit_ci.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

namespace noisyopt {

BandwidthRule BandwidthRule::for_budget(std::size_t n) {
  BandwidthRule rule;
  rule.grid_resolution = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n);
  return rule;
}

const char* to_string(SelectionStatus s) noexcept {
  switch (s) {
    case SelectionStatus::kBalanced: return "balanced";
    case SelectionStatus::kFallback: return "fallback";
    case SelectionStatus::kFailed: return "failed";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Criterion {
 public:
  Criterion(const FeatureBasis& basis, double M, double alpha, double delta, double noise_sd,
            double ridge_rel, std::int64_t R)
      : basis(basis), M(M), alpha(alpha), delta(delta), noise_sd(noise_sd), ridge_rel(ridge_rel), R(R) {
    D_ = static_cast<double>(basis.size());
    bias_scale_ = basis.b_bound() * M * std::pow(static_cast<double>(basis.dim()), basis.degree());
    cap_ = noise_sd * noise_sd * 5.0 * D_ * std::log(1.0 / delta);
    const double rounded = std::round(alpha);
    if (rounded == alpha && alpha >= 1.0 && alpha <= 16.0) int_alpha_ = static_cast<int>(rounded);
  }

  const FeatureBasis& basis;
  double M;
  double alpha;
  double delta;
  double noise_sd;
  double ridge_rel;
  std::int64_t R;

  double h(std::int64_t j) const { return static_cast<double>(j) / static_cast<double>(R); }

  // Necessary condition for balance given sigma <= sigma_cap. The
  // basis-wide cap holds for every window, so this test is monotone in j.
  bool may_balance(std::int64_t j, double m) const { return may_balance(j, m, basis.sigma_cap()); }
  bool may_balance(std::int64_t j, double m, double sigma_cap) const {
    const double K = bias_scale_ * h_alpha(h(j));
    return K * K * m <= cap_ * sigma_cap * (1.0 + 1e-9);
  }

  // bias <= deviation  <=>  sigma >= b^2 K^2 h^(2 alpha) m / (noise^2 5 D ln(1/delta)).
  bool balanced(const GramAccumulator& acc, std::int64_t j) const {
    const double hj = h(j);
    const double m = acc.count();
    if (!may_balance(j, m, acc.sigma_upper_bound(hj))) return false;
    const double K = bias_scale_ * h_alpha(hj);
    if (cap_ > 0.0 && K > 0.0) {
      const double sigma_star = K * K * m / cap_;
      // sigma >= sigma_star also implies the pseudo-inverse keeps every mode
      // once sigma_star clears the relative cutoff against trace >= lambda_max.
      if (sigma_star >= ridge_rel * D_) return acc.sigma_exceeds(hj, sigma_star);
    }
    const double sigma = acc.sigma_at(hj, ridge_rel);
    if (!(sigma > 0.0)) return false;
    const auto e = error_bound_terms(basis.b_bound(), sigma, m, basis.size(), basis.dim(),
                                     basis.degree(), hj, M, alpha, delta, noise_sd);
    return e.finite() && e.bias <= e.deviation;
  }

  bool usable(const GramAccumulator& acc, std::int64_t j) const {
    return acc.sigma_at(h(j), ridge_rel) > 0.0;
  }

  BandwidthChoice choose(const GramAccumulator& acc, PointView x, std::int64_t j,
                         SelectionStatus status) const {
    BandwidthChoice c;
    c.j = j;
    c.h = h(j);
    c.fit = acc.solve(x, c.h, ridge_rel);
    c.bound = error_bound(c.fit, M, alpha, delta, noise_sd);
    c.status = status;
    if (status == SelectionStatus::kFailed) {
      c.bound.bias = c.bound.deviation = c.bound.total = kInf;
    }
    return c;
  }

 private:
  double h_alpha(double hj) const {
    if (int_alpha_ == 0) return std::pow(hj, alpha);
    double v = hj;
    for (int i = 1; i < int_alpha_; ++i) v *= hj;
    return v;
  }

  double D_ = 1.0;
  double bias_scale_ = 0.0;
  double cap_ = 0.0;
  int int_alpha_ = 0;
};

// Smallest j in [1, R] with dist <= j / R, or R + 1 if none.
std::int64_t first_window(double dist, std::int64_t R) {
  const double Rd = static_cast<double>(R);
  auto h = [Rd](std::int64_t j) { return static_cast<double>(j) / Rd; };
  std::int64_t j = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(dist * Rd)));
  while (j > 1 && dist <= h(j - 1)) --j;
  while (j <= R && h(j) < dist) ++j;
  return std::min(j, R + 1);
}

BandwidthChoice failed_choice(const Criterion& c, const PooledSamples& s, PointView x) {
  GramAccumulator acc(c.basis);
  Point offset(x.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    for (std::size_t i = 0; i < x.size(); ++i) offset[i] = s.points[t][i] - x[i];
    acc.add(offset, s.sum[t], s.count[t]);
  }
  return c.choose(acc, x, c.R, SelectionStatus::kFailed);
}

BandwidthChoice select_exhaustive(const Criterion& c, const PooledSamples& s, PointView x) {
  std::int64_t best = 0, smallest_usable = 0;
  Point offset(x.size());
  auto window = [&](std::int64_t j) {
    GramAccumulator acc(c.basis);
    const double h = c.h(j);
    for (std::size_t t = 0; t < s.size(); ++t) {
      bool inside = true;
      for (std::size_t i = 0; i < x.size(); ++i) {
        offset[i] = s.points[t][i] - x[i];
        if (std::abs(offset[i]) > h) inside = false;
      }
      if (inside) acc.add(offset, s.sum[t], s.count[t]);
    }
    return acc;
  };
  for (std::int64_t j = 1; j <= c.R; ++j) {
    const auto acc = window(j);
    if (smallest_usable == 0 && c.usable(acc, j)) smallest_usable = j;
    if (c.balanced(acc, j)) best = j;
  }
  if (best > 0) return c.choose(window(best), x, best, SelectionStatus::kBalanced);
  if (smallest_usable > 0) {
    return c.choose(window(smallest_usable), x, smallest_usable, SelectionStatus::kFallback);
  }
  return failed_choice(c, s, x);
}

struct Item {
  std::int64_t j;
  std::size_t idx;
  double dist;
  bool operator<(const Item& o) const { return j != o.j ? j < o.j : idx < o.idx; }
};

// Visits pooled points in increasing distance from x along the first axis.
// Any point not yet visited is at l_inf distance >= frontier() from x.
class AxisScan {
 public:
  AxisScan(const SampleIndex& index, PointView x) : index_(index), x0_(x[0]) {
    const auto& key = index.key();
    up_ = static_cast<std::size_t>(std::lower_bound(key.begin(), key.end(), x0_) - key.begin());
    down_ = up_;
  }

  bool done() const { return down_ == 0 && up_ == index_.size(); }

  double frontier() const {
    const auto& key = index_.key();
    double t = kInf;
    if (down_ > 0) t = x0_ - key[down_ - 1];
    if (up_ < index_.size()) t = std::min(t, key[up_] - x0_);
    return t;
  }

  std::size_t next() {
    const auto& key = index_.key();
    const bool take_down =
        up_ == index_.size() || (down_ > 0 && x0_ - key[down_ - 1] <= key[up_] - x0_);
    return take_down ? index_.order()[--down_] : index_.order()[up_++];
  }

 private:
  const SampleIndex& index_;
  double x0_;
  std::size_t down_ = 0;
  std::size_t up_ = 0;
};

// Running window sums over pooled items, built from offsets to x.
class WindowSums {
 public:
  WindowSums(const FeatureBasis& basis, const PooledSamples& s, PointView x)
      : s_(s), x_(x), offset_(x.size()), acc(basis) {}

  void add(const std::vector<Item>& items, std::size_t k, GramAccumulator& into) {
    const std::size_t t = items[k].idx;
    const PointView z = s_.points[t];
    for (std::size_t i = 0; i < x_.size(); ++i) offset_[i] = z[i] - x_[i];
    into.add(offset_, s_.sum[t], s_.count[t]);
  }

 private:
  const PooledSamples& s_;
  PointView x_;
  Point offset_;

 public:
  GramAccumulator acc;
};

BandwidthChoice select_breakpoint(const Criterion& c, const PooledSamples& s,
                                  const SampleIndex& index, PointView x) {
  // Items start with j0 = ceil(dist R), within one of the exact first window;
  // the exact value is only computed for items that can matter.
  const double Rd = static_cast<double>(c.R);
  thread_local std::vector<Item> items;
  items.clear();
  AxisScan scan(index, x);
  auto visit = [&] {
    const std::size_t t = scan.next();
    const double dist = linf_distance(s.points[t], x);
    const auto j0 = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(dist * Rd)));
    items.push_back({std::min(j0, c.R), t, dist});
  };

  // Window counts at j = 2^s tell how far the balance condition can possibly
  // hold. Counts use the upper estimate j0 + 1, which can only undercount.
  // Shell s is complete once every unvisited point lies beyond 2^s / R.
  std::array<double, 66> shell{};
  std::size_t shelled = 0;
  std::int64_t limit = 0;
  double m = 0.0;
  for (int sh = 0; sh < 64; ++sh) {
    const std::int64_t j = std::min<std::int64_t>(std::int64_t{1} << sh, c.R);
    const double reach = static_cast<double>(j) / Rd;
    while (!scan.done() && (j == c.R || scan.frontier() < reach)) visit();
    for (; shelled < items.size(); ++shelled) {
      const auto j_hi = std::min<std::int64_t>(items[shelled].j + 1, c.R);
      shell[std::bit_width(static_cast<std::uint64_t>(j_hi - 1))] += s.count[items[shelled].idx];
    }
    m += shell[static_cast<std::size_t>(sh)];
    if (!c.may_balance(j, m)) {
      limit = sh == 0 ? 0 : std::min<std::int64_t>(c.R, (std::int64_t{1} << sh) - 1);
      break;
    }
    if (j == c.R) {
      limit = c.R;
      break;
    }
  }

  const auto near = std::partition(items.begin(), items.end(),
                                   [limit](const Item& it) { return it.j - 1 <= limit; });
  for (auto it = items.begin(); it != near; ++it) it->j = first_window(it->dist, c.R);
  const auto mid = std::partition(items.begin(), near,
                                  [limit](const Item& it) { return it.j <= limit; });
  // In one dimension the scan already yields items by distance.
  const auto by_j = [](const Item& a, const Item& b) { return a.j < b.j; };
  if (!std::is_sorted(items.begin(), mid, by_j)) std::sort(items.begin(), mid);
  const auto kept = static_cast<std::size_t>(mid - items.begin());

  // One forward pass records the running sums at every group end until the
  // count test fails; the top-down walk then reads them back.
  WindowSums sums(c.basis, s, x);
  const std::size_t G = c.basis.size() * c.basis.size(), D = c.basis.size();
  thread_local std::vector<double> snap;
  thread_local std::vector<double> snap_count;
  thread_local std::vector<std::size_t> snap_end;
  if (snap.size() < kept * (G + D)) snap.resize(kept * (G + D));
  if (snap_count.size() < kept) {
    snap_count.resize(kept);
    snap_end.resize(kept);
  }
  std::size_t groups = 0;
  for (std::size_t k = 0; k < kept; ++k) {
    sums.add(items, k, sums.acc);
    if (k + 1 < kept && items[k + 1].j == items[k].j) continue;
    // The count test is monotone along groups, so nothing later can pass.
    if (!c.may_balance(items[k].j, sums.acc.count())) break;
    double* out = snap.data() + groups * (G + D);
    std::copy_n(sums.acc.raw_gram().data(), G, out);
    std::copy_n(sums.acc.raw_rhs().data(), D, out + G);
    snap_count[groups] = sums.acc.count();
    snap_end[groups] = k + 1;
    ++groups;
  }
  GramAccumulator& acc = sums.acc;
  for (std::size_t g = groups; g-- > 0;) {
    const std::size_t end = snap_end[g];
    const std::int64_t lo_j = items[end - 1].j;
    const double* base = snap.data() + g * (G + D);
    acc.assign({base, G}, {base + G, D}, snap_count[g]);
    if (!c.balanced(acc, lo_j)) continue;
    // Within one window sigma is nonincreasing in h, so balance holds on a prefix of it.
    std::int64_t lo = lo_j;
    std::int64_t hi = end < kept ? items[end].j - 1 : limit;
    while (lo < hi) {
      const std::int64_t probe = lo + (hi - lo + 1) / 2;
      if (c.balanced(acc, probe)) {
        lo = probe;
      } else {
        hi = probe - 1;
      }
    }
    return c.choose(acc, x, lo, SelectionStatus::kBalanced);
  }

  // No balanced bandwidth: smallest window with a usable fit, which may
  // need every sample.
  while (!scan.done()) visit();
  for (std::size_t k = kept; k < items.size(); ++k) items[k].j = first_window(items[k].dist, c.R);
  std::sort(items.begin() + static_cast<std::ptrdiff_t>(kept), items.end());
  GramAccumulator up(c.basis);
  for (std::size_t k = 0; k < items.size(); ++k) {
    sums.add(items, k, up);
    const bool last_of_group = k + 1 == items.size() || items[k + 1].j != items[k].j;
    if (last_of_group && k + 1 >= c.basis.size() && c.usable(up, items[k].j)) {
      return c.choose(up, x, items[k].j, SelectionStatus::kFallback);
    }
  }
  return failed_choice(c, s, x);
}

}  // namespace

SampleIndex::SampleIndex(const PooledSamples& samples) : order_(samples.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return samples.points[a][0] < samples.points[b][0];
  });
  key_.reserve(order_.size());
  for (auto i : order_) key_.push_back(samples.points[i][0]);
}

BandwidthChoice select_bandwidth(const BandwidthRule& rule, const PooledSamples& samples,
                                 const SampleIndex& index, const FeatureBasis& basis, PointView x,
                                 double M, double alpha, double delta) {
  if (rule.grid_resolution < 1) throw Error(ErrorCode::kConfig, "grid_resolution must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::kConfig, "delta must lie in (0, 1)");
  if (index.size() != samples.size()) {
    throw Error(ErrorCode::kConfig, "sample index does not match the samples");
  }
  const Criterion c{basis, M, alpha, delta, rule.noise_sd, rule.ridge_rel, rule.grid_resolution};
  if (samples.size() == 0) {
    BandwidthChoice none;
    none.j = c.R;
    none.h = 1.0;
    none.bound.bias = none.bound.deviation = none.bound.total = kInf;
    none.bound.delta = delta;
    return none;
  }
  return rule.search == BandwidthSearch::kExhaustive ? select_exhaustive(c, samples, x)
                                                      : select_breakpoint(c, samples, index, x);
}

BandwidthChoice select_bandwidth(const BandwidthRule& rule, const PooledSamples& samples,
                                 const FeatureBasis& basis, PointView x, double M, double alpha,
                                 double delta) {
  return select_bandwidth(rule, samples, SampleIndex(samples), basis, x, M, alpha, delta);
}

BandwidthChoice select_bandwidth(const BandwidthRule& rule, const SampleLog& log,
                                 const FeatureBasis& basis, PointView x, double M, double alpha,
                                 double delta) {
  return select_bandwidth(rule, PooledSamples::from_log(log), basis, x, M, alpha, delta);
}

CIRecord update_ci(const CIRecord& record, double fit_value, const ErrorBound& bound,
                   double bandwidth) {
  if (!std::isfinite(bound.total) || !std::isfinite(fit_value)) return record;
  CIRecord next = record;
  next.lower = std::max(record.lower, fit_value - bound.total);
  next.upper = std::min(record.upper, fit_value + bound.total);
  if (next.lower > next.upper) {
    const double midpoint =
        std::min(std::max(0.5 * (next.lower + next.upper), record.lower), record.upper);
    next.lower = next.upper = midpoint;
    next.crossed = true;
  }
  next.last_bandwidth = bandwidth;
  next.last_bound = bound;
  ++next.updates;
  return next;
}

CIStatus crossing_check(const CIRecord& record) noexcept {
  return record.crossed || record.lower > record.upper ? CIStatus::kCrossed : CIStatus::kUncrossed;
}

}  // namespace noisyopt
