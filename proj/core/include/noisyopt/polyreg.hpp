#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "noisyopt/oracle.hpp"
#include "noisyopt/types.hpp"

namespace noisyopt {

/// Distinct monomials of total degree <= k in d variables, ordered by degree
/// and then by descending exponent of the first coordinate, e.g. for d = 2,
/// k = 2: 1, u1, u2, u1^2, u1 u2, u2^2.
class FeatureBasis {
 public:
  FeatureBasis(int dim, int degree);

  /// Degree floor(alpha).
  static FeatureBasis for_smoothness(int dim, double alpha);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return exponents_.size(); }

  /// sqrt(size()): every scaled monomial is bounded by 1 on the window.
  double b_bound() const noexcept;

  /// Universal upper bound on the least eigenvalue of any normalized Gram
  /// matrix with features on [-1,1]^d: the Rayleigh quotient of the monomial
  /// coefficients of the Chebyshev polynomial T_j(u_1), j <= degree.
  double sigma_cap() const noexcept { return sigma_cap_; }

  const std::vector<int>& exponents(std::size_t feature) const { return exponents_[feature]; }
  int feature_degree(std::size_t feature) const { return degrees_[feature]; }

  /// Monomials of u = (z - x) / h, written to `out` (size() entries).
  void evaluate(PointView x, double h, PointView z, std::span<double> out) const;
  std::vector<double> evaluate(PointView x, double h, PointView z) const;

  /// Monomials of an already formed offset vector (no scaling).
  void evaluate_raw(PointView offset, std::span<double> out) const;

 private:
  int dim_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
  std::vector<int> degrees_;
  // feature f (f > 0) = feature parent_[f] * offset[var_[f]]
  std::vector<std::size_t> parent_;
  std::vector<int> var_;
  double sigma_cap_ = 1.0;
};

std::vector<double> feature_map(const FeatureBasis& basis, PointView x, double h, PointView z);

/// Responses pooled by location: count[i] observations at points[i] whose
/// responses sum to sum[i]. Least squares on pooled data equals least
/// squares on the raw observations.
struct PooledSamples {
  PointSet points;
  std::vector<double> count;
  std::vector<double> sum;

  explicit PooledSamples(std::size_t dim = 1) : points(dim) {}

  static PooledSamples from_log(const SampleLog& log);

  std::size_t size() const noexcept { return count.size(); }
  void add(PointView x, double y_sum, double n = 1.0);
};

struct LocalFit {
  Point center;
  double bandwidth = 0.0;
  std::size_t m = 0;
  std::vector<double> coeffs;
  double sigma_min = 0.0;
  double b_bound = 0.0;
  int dim = 0;
  int degree = 0;
  bool usable = false;         // m > 0 and coefficients were computed
  bool rank_deficient = true;  // some Gram mode fell under the pseudo-inverse cutoff

  double value() const;
};

/// Unscaled normal equations sum w psi psi^T, sum y psi over offsets z - x.
/// The bandwidth enters only at solve() time, through diag(h^-|a|).
class GramAccumulator {
 public:
  explicit GramAccumulator(const FeatureBasis& basis);

  void add(PointView offset, double y_sum, double count = 1.0);
  /// Same as add() with the features of the offset already evaluated.
  void add_features(std::span<const double> features, double y_sum, double count = 1.0);
  GramAccumulator& operator+=(const GramAccumulator& other);

  /// Replaces the sums (gram is D x D row-major, upper triangle read).
  void assign(std::span<const double> gram, std::span<const double> rhs, double count);

  double count() const noexcept { return count_; }
  const std::vector<double>& raw_gram() const noexcept { return gram_; }
  const std::vector<double>& raw_rhs() const noexcept { return rhs_; }

  LocalFit solve(PointView center, double h, double ridge_rel = 1e-10) const;

  /// Least eigenvalue of the scaled Gram / m, or 0 when rank deficient or empty.
  double sigma_at(double h, double ridge_rel = 1e-10) const;

  /// True when the scaled Gram / m minus sigma * I is positive definite,
  /// i.e. its least eigenvalue exceeds sigma (Cholesky test, no eigensolve).
  bool sigma_exceeds(double h, double sigma) const;

  /// Cheap upper bound on sigma_at(h): the least eigenvalue over all 2x2
  /// principal submatrices (Cauchy interlacing), divided by m.
  double sigma_upper_bound(double h) const;

 private:
  void scaled_system(double h, std::vector<double>& gram, std::vector<double>& rhs) const;

  const FeatureBasis* basis_;
  std::vector<double> gram_;
  std::vector<double> rhs_;
  std::vector<double> scratch_;
  mutable std::vector<double> scaled_gram_;
  mutable std::vector<double> scaled_rhs_;
  double count_ = 0.0;
};

LocalFit local_fit(const FeatureBasis& basis, const SampleLog& log, PointView x, double h,
                   double ridge_rel = 1e-10);
LocalFit local_fit(const FeatureBasis& basis, const PooledSamples& samples, PointView x, double h,
                   double ridge_rel = 1e-10);

/// Evaluates the fitted polynomial at z. Throws UnusableFit.
double predict(const LocalFit& fit, const FeatureBasis& basis, PointView z);

struct ErrorBound {
  double bias = 0.0;
  double deviation = 0.0;
  double total = 0.0;
  double delta = 0.0;

  bool finite() const noexcept;
};

/// bias = (b^2 / sigma) M d^k h^alpha and
/// deviation = noise_sd * b * sqrt(5 D ln(1/delta) / (sigma m)),
/// all infinite when m = 0, sigma <= 0 or the Gram matrix is rank deficient.
ErrorBound error_bound(const LocalFit& fit, double M, double alpha, double delta,
                       double noise_sd = 1.0);

ErrorBound error_bound_terms(double b, double sigma, double m, std::size_t features, int dim,
                             int degree, double h, double M, double alpha, double delta,
                             double noise_sd = 1.0);

}  // namespace noisyopt
