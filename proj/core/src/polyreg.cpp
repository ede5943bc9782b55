#include "noisyopt/polyreg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace noisyopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void enumerate(int pos, int remaining, std::vector<int>& a, std::vector<std::vector<int>>& out) {
  const auto d = static_cast<int>(a.size());
  if (pos == d - 1) {
    a[pos] = remaining;
    out.push_back(a);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    a[pos] = e;
    enumerate(pos + 1, remaining - e, a, out);
  }
}

}  // namespace

FeatureBasis::FeatureBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || degree < 0) throw Error(ErrorCode::kConfig, "basis needs dim >= 1 and degree >= 0");
  std::vector<int> a(static_cast<std::size_t>(dim), 0);
  for (int t = 0; t <= degree; ++t) enumerate(0, t, a, exponents_);

  std::map<std::vector<int>, std::size_t> index;
  for (std::size_t f = 0; f < exponents_.size(); ++f) index[exponents_[f]] = f;
  degrees_.resize(exponents_.size());
  parent_.assign(exponents_.size(), 0);
  var_.assign(exponents_.size(), 0);
  for (std::size_t f = 0; f < exponents_.size(); ++f) {
    const auto& e = exponents_[f];
    int deg = 0;
    for (int v : e) deg += v;
    degrees_[f] = deg;
    if (deg == 0) continue;
    const auto first = static_cast<std::size_t>(
        std::find_if(e.begin(), e.end(), [](int v) { return v > 0; }) - e.begin());
    auto p = e;
    --p[first];
    parent_[f] = index.at(p);
    var_[f] = static_cast<int>(first);
  }

  // T_{j+1} = 2u T_j - T_{j-1}; max |T_j| = 1 on [-1, 1].
  std::vector<double> prev{1.0}, cur{0.0, 1.0};
  for (int j = 1; j <= degree; ++j) {
    double norm2 = 0.0;
    for (double c : cur) norm2 += c * c;
    sigma_cap_ = std::min(sigma_cap_, 1.0 / norm2);
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0 * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
}

FeatureBasis FeatureBasis::for_smoothness(int dim, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kConfig, "alpha must be positive");
  return FeatureBasis(dim, static_cast<int>(std::floor(alpha)));
}

double FeatureBasis::b_bound() const noexcept {
  return std::sqrt(static_cast<double>(exponents_.size()));
}

void FeatureBasis::evaluate_raw(PointView offset, std::span<double> out) const {
  out[0] = 1.0;
  for (std::size_t f = 1; f < exponents_.size(); ++f) {
    out[f] = out[parent_[f]] * offset[static_cast<std::size_t>(var_[f])];
  }
}

void FeatureBasis::evaluate(PointView x, double h, PointView z, std::span<double> out) const {
  if (!(h > 0.0)) throw Error(ErrorCode::kConfig, "bandwidth must be positive");
  Point u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (z[i] - x[i]) / h;
  evaluate_raw(u, out);
}

std::vector<double> FeatureBasis::evaluate(PointView x, double h, PointView z) const {
  std::vector<double> out(size());
  evaluate(x, h, z, out);
  return out;
}

std::vector<double> feature_map(const FeatureBasis& basis, PointView x, double h, PointView z) {
  return basis.evaluate(x, h, z);
}

// ---------------------------------------------------------------------------

PooledSamples PooledSamples::from_log(const SampleLog& log) {
  PooledSamples s(log.dim());
  s.points.reserve(log.size());
  s.count.reserve(log.size());
  s.sum.reserve(log.size());
  // Repeated locations share one entry, first occurrence order.
  std::map<Point, std::size_t> slot;
  for (std::size_t t = 0; t < log.size(); ++t) {
    const PointView z = log.point(t);
    const auto [it, fresh] = slot.try_emplace(Point(z.begin(), z.end()), s.size());
    if (fresh) {
      s.add(z, log.response(t));
    } else {
      s.sum[it->second] += log.response(t);
      s.count[it->second] += 1.0;
    }
  }
  return s;
}

void PooledSamples::add(PointView x, double y_sum, double n) {
  points.push_back(x);
  sum.push_back(y_sum);
  count.push_back(n);
}

double LocalFit::value() const {
  if (!usable) throw Error(ErrorCode::kUnusableFit, "fit has no coefficients");
  return coeffs[0];
}

// ---------------------------------------------------------------------------

GramAccumulator::GramAccumulator(const FeatureBasis& basis)
    : basis_(&basis),
      gram_(basis.size() * basis.size(), 0.0),
      rhs_(basis.size(), 0.0),
      scratch_(basis.size(), 0.0) {}

void GramAccumulator::add(PointView offset, double y_sum, double count) {
  basis_->evaluate_raw(offset, scratch_);
  add_features(scratch_, y_sum, count);
}

namespace {

template <std::size_t D>
void rank_one_update(double* g, double* r, const double* phi, double y_sum, double count) {
  for (std::size_t a = 0; a < D; ++a) {
    const double wa = count * phi[a];
    for (std::size_t b = a; b < D; ++b) g[a * D + b] += wa * phi[b];
    r[a] += y_sum * phi[a];
  }
}

}  // namespace

void GramAccumulator::add_features(std::span<const double> phi, double y_sum, double count) {
  const std::size_t D = rhs_.size();
  double* g = gram_.data();
  double* r = rhs_.data();
  // Fixed sizes cover the common (d, k) pairs so the compiler can unroll.
  switch (D) {
    case 1: rank_one_update<1>(g, r, phi.data(), y_sum, count); break;
    case 2: rank_one_update<2>(g, r, phi.data(), y_sum, count); break;
    case 3: rank_one_update<3>(g, r, phi.data(), y_sum, count); break;
    case 4: rank_one_update<4>(g, r, phi.data(), y_sum, count); break;
    case 6: rank_one_update<6>(g, r, phi.data(), y_sum, count); break;
    case 10: rank_one_update<10>(g, r, phi.data(), y_sum, count); break;
    default:
      for (std::size_t a = 0; a < D; ++a) {
        const double wa = count * phi[a];
        for (std::size_t b = a; b < D; ++b) g[a * D + b] += wa * phi[b];
        r[a] += y_sum * phi[a];
      }
  }
  count_ += count;
}

GramAccumulator& GramAccumulator::operator+=(const GramAccumulator& other) {
  for (std::size_t i = 0; i < gram_.size(); ++i) gram_[i] += other.gram_[i];
  for (std::size_t i = 0; i < rhs_.size(); ++i) rhs_[i] += other.rhs_[i];
  count_ += other.count_;
  return *this;
}

void GramAccumulator::assign(std::span<const double> gram, std::span<const double> rhs,
                             double count) {
  std::copy(gram.begin(), gram.end(), gram_.begin());
  std::copy(rhs.begin(), rhs.end(), rhs_.begin());
  count_ = count;
}

void GramAccumulator::scaled_system(double h, std::vector<double>& gram,
                                    std::vector<double>& rhs) const {
  const std::size_t D = rhs_.size();
  double scale[64];
  double* sc = scale;
  std::vector<double> large;
  if (D > 64) {
    large.resize(D);
    sc = large.data();
  }
  const double inv_h = 1.0 / h;
  for (std::size_t a = 0; a < D; ++a) {
    double v = 1.0;
    for (int p = 0; p < basis_->feature_degree(a); ++p) v *= inv_h;
    sc[a] = v;
  }
  gram.resize(D * D);
  rhs.resize(D);
  for (std::size_t a = 0; a < D; ++a) {
    for (std::size_t b = a; b < D; ++b) {
      const double v = gram_[a * D + b] * sc[a] * sc[b];
      gram[a * D + b] = v;
      gram[b * D + a] = v;
    }
    rhs[a] = rhs_[a] * sc[a];
  }
}

LocalFit GramAccumulator::solve(PointView center, double h, double ridge_rel) const {
  if (!(h > 0.0)) throw Error(ErrorCode::kConfig, "bandwidth must be positive");
  const std::size_t D = rhs_.size();
  LocalFit fit;
  fit.center.assign(center.begin(), center.end());
  fit.bandwidth = h;
  fit.m = static_cast<std::size_t>(std::llround(count_));
  fit.b_bound = basis_->b_bound();
  fit.dim = basis_->dim();
  fit.degree = basis_->degree();
  if (fit.m == 0) return fit;

  std::vector<double> g, r;
  scaled_system(h, g, r);
  const Eigen::Map<const Eigen::MatrixXd> G(g.data(), static_cast<Eigen::Index>(D),
                                            static_cast<Eigen::Index>(D));
  const Eigen::Map<const Eigen::VectorXd> rhs(r.data(), static_cast<Eigen::Index>(D));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const auto& lambda = es.eigenvalues();
  const auto& V = es.eigenvectors();
  const double lmax = lambda(static_cast<Eigen::Index>(D) - 1);
  const double cutoff = ridge_rel * std::max(lmax, 0.0);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(D); ++i) {
    if (lambda(i) > 0.0 && lambda(i) >= cutoff) {
      theta += V.col(i) * (V.col(i).dot(rhs) / lambda(i));
    }
  }
  fit.coeffs.assign(theta.data(), theta.data() + D);
  fit.usable = true;
  fit.rank_deficient = !(lmax > 0.0) || lambda(0) < cutoff || !(lambda(0) > 0.0);
  fit.sigma_min = std::max(lambda(0), 0.0) / count_;
  return fit;
}

double GramAccumulator::sigma_at(double h, double ridge_rel) const {
  if (!(count_ > 0.0)) return 0.0;
  const auto D = static_cast<Eigen::Index>(rhs_.size());
  scaled_system(h, scaled_gram_, scaled_rhs_);
  thread_local Eigen::MatrixXd G;
  thread_local Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  G = Eigen::Map<const Eigen::MatrixXd>(scaled_gram_.data(), D, D);
  es.compute(G, Eigen::EigenvaluesOnly);
  const auto& lambda = es.eigenvalues();
  const double lmax = lambda(D - 1);
  if (!(lmax > 0.0) || !(lambda(0) > 0.0) || lambda(0) < ridge_rel * lmax) return 0.0;
  return lambda(0) / count_;
}

bool GramAccumulator::sigma_exceeds(double h, double sigma) const {
  if (!(count_ > 0.0)) return false;
  const std::size_t D = rhs_.size();
  scaled_system(h, scaled_gram_, scaled_rhs_);
  auto& a = scaled_gram_;
  const double inv_m = 1.0 / count_;
  for (std::size_t i = 0; i < D * D; ++i) a[i] *= inv_m;
  for (std::size_t i = 0; i < D; ++i) a[i * D + i] -= sigma;
  // In-place Cholesky on the lower triangle.
  for (std::size_t j = 0; j < D; ++j) {
    double djj = a[j * D + j];
    for (std::size_t k = 0; k < j; ++k) djj -= a[j * D + k] * a[j * D + k];
    if (!(djj > 0.0)) return false;
    const double ljj = std::sqrt(djj);
    a[j * D + j] = ljj;
    for (std::size_t i = j + 1; i < D; ++i) {
      double v = a[i * D + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * D + k] * a[j * D + k];
      a[i * D + j] = v / ljj;
    }
  }
  return true;
}

namespace {

// Least eigenvalue over all 2x2 principal submatrices of entry(a, b), a <= b.
template <typename Entry>
double least_minor_eigenvalue(std::size_t D, Entry&& entry) {
  double best = entry(0, 0);
  for (std::size_t a = 0; a < D; ++a) {
    const double gaa = entry(a, a);
    best = std::min(best, gaa);
    for (std::size_t b = a + 1; b < D; ++b) {
      const double gbb = entry(b, b);
      const double gab = entry(a, b);
      const double half_gap = 0.5 * (gaa - gbb);
      best = std::min(best, 0.5 * (gaa + gbb) - std::sqrt(half_gap * half_gap + gab * gab));
    }
  }
  return best;
}

}  // namespace

double GramAccumulator::sigma_upper_bound(double h) const {
  if (!(count_ > 0.0)) return 0.0;
  const std::size_t D = rhs_.size();
  double best = 0.0;
  if (D > 64) {
    scaled_system(h, scaled_gram_, scaled_rhs_);
    best = least_minor_eigenvalue(D, [&](std::size_t a, std::size_t b) { return scaled_gram_[a * D + b]; });
  } else {
    // Scale only the entries that are read.
    double sc[64] = {};
    const double inv_h = 1.0 / h;
    for (std::size_t a = 0; a < D; ++a) {
      double v = 1.0;
      for (int p = 0; p < basis_->feature_degree(a); ++p) v *= inv_h;
      sc[a] = v;
    }
    best = least_minor_eigenvalue(
        D, [&](std::size_t a, std::size_t b) { return gram_[a * D + b] * sc[a] * sc[b]; });
  }
  return std::max(best, 0.0) / count_;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Visit>
LocalFit fit_window(const FeatureBasis& basis, std::size_t n, PointView x, double h,
                    double ridge_rel, Visit&& visit) {
  if (!(h > 0.0)) throw Error(ErrorCode::kConfig, "bandwidth must be positive");
  GramAccumulator acc(basis);
  Point offset(x.size());
  for (std::size_t t = 0; t < n; ++t) {
    visit(t, [&](PointView z, double y_sum, double count) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        offset[i] = z[i] - x[i];
        if (std::abs(offset[i]) > h) return;
      }
      acc.add(offset, y_sum, count);
    });
  }
  return acc.solve(x, h, ridge_rel);
}

}  // namespace

LocalFit local_fit(const FeatureBasis& basis, const SampleLog& log, PointView x, double h,
                   double ridge_rel) {
  return fit_window(basis, log.size(), x, h, ridge_rel,
                    [&](std::size_t t, auto&& add) { add(log.point(t), log.response(t), 1.0); });
}

LocalFit local_fit(const FeatureBasis& basis, const PooledSamples& samples, PointView x, double h,
                   double ridge_rel) {
  return fit_window(basis, samples.size(), x, h, ridge_rel, [&](std::size_t t, auto&& add) {
    add(samples.points[t], samples.sum[t], samples.count[t]);
  });
}

double predict(const LocalFit& fit, const FeatureBasis& basis, PointView z) {
  if (!fit.usable) throw Error(ErrorCode::kUnusableFit, "prediction from an unusable fit");
  const auto phi = basis.evaluate(fit.center, fit.bandwidth, z);
  double v = 0.0;
  for (std::size_t a = 0; a < phi.size(); ++a) v += phi[a] * fit.coeffs[a];
  return v;
}

bool ErrorBound::finite() const noexcept { return std::isfinite(total); }

ErrorBound error_bound_terms(double b, double sigma, double m, std::size_t features, int dim,
                             int degree, double h, double M, double alpha, double delta,
                             double noise_sd) {
  ErrorBound e;
  e.delta = delta;
  if (!(m > 0.0) || !(sigma > 0.0)) {
    e.bias = e.deviation = e.total = kInf;
    return e;
  }
  e.bias = b * b / sigma * M * std::pow(static_cast<double>(dim), degree) * std::pow(h, alpha);
  e.deviation = noise_sd * b *
                std::sqrt(5.0 * static_cast<double>(features) * std::log(1.0 / delta) / (sigma * m));
  e.total = e.bias + e.deviation;
  return e;
}

ErrorBound error_bound(const LocalFit& fit, double M, double alpha, double delta, double noise_sd) {
  if (!fit.usable || fit.rank_deficient) {
    ErrorBound e;
    e.delta = delta;
    e.bias = e.deviation = e.total = kInf;
    return e;
  }
  return error_bound_terms(fit.b_bound, fit.sigma_min, static_cast<double>(fit.m),
                           fit.coeffs.size(), fit.dim, fit.degree, fit.bandwidth, M, alpha, delta,
                           noise_sd);
}

}  // namespace noisyopt
