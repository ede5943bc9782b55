#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "noisyopt/oracle.hpp"
#include "noisyopt/polyreg.hpp"
#include "noisyopt/types.hpp"

namespace noisyopt {

struct CIRecord {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double last_bandwidth = 0.0;
  ErrorBound last_bound{};
  std::size_t updates = 0;
  bool crossed = false;
};

enum class BandwidthSearch {
  kBreakpoint,  // scan window breakpoints top-down, bisect inside the winning window
  kExhaustive,  // literal loop over every j; O(R) fits, for tests and small R
};

/// Candidate bandwidths are j / grid_resolution, j = 1..grid_resolution.
struct BandwidthRule {
  std::int64_t grid_resolution = 1;
  BandwidthSearch search = BandwidthSearch::kBreakpoint;
  double ridge_rel = 1e-10;
  double noise_sd = 1.0;

  /// grid_resolution = n^2.
  static BandwidthRule for_budget(std::size_t n);
};

enum class SelectionStatus {
  kBalanced,  // largest j with bias <= deviation
  kFallback,  // no balanced j; smallest j with a usable fit
  kFailed,    // no usable fit at any j; bound is infinite
};

const char* to_string(SelectionStatus s) noexcept;

struct BandwidthChoice {
  double h = 0.0;
  std::int64_t j = 0;
  LocalFit fit;
  ErrorBound bound;
  SelectionStatus status = SelectionStatus::kFailed;
};

/// Pooled locations sorted along the first axis, so window scans can stop as
/// soon as the balance condition is out of reach. Does not follow later
/// edits to the samples.
class SampleIndex {
 public:
  explicit SampleIndex(const PooledSamples& samples);

  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  const std::vector<double>& key() const noexcept { return key_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> key_;
};

BandwidthChoice select_bandwidth(const BandwidthRule& rule, const PooledSamples& samples,
                                 const FeatureBasis& basis, PointView x, double M, double alpha,
                                 double delta);
BandwidthChoice select_bandwidth(const BandwidthRule& rule, const PooledSamples& samples,
                                 const SampleIndex& index, const FeatureBasis& basis, PointView x,
                                 double M, double alpha, double delta);
BandwidthChoice select_bandwidth(const BandwidthRule& rule, const SampleLog& log,
                                 const FeatureBasis& basis, PointView x, double M, double alpha,
                                 double delta);

/// lower = max(lower, v - eta), upper = min(upper, v + eta). An infinite eta
/// leaves the record untouched. If the new interval is empty the record is
/// flagged as crossed and collapsed to the midpoint, clamped into the
/// previous interval so that the interval never grows.
CIRecord update_ci(const CIRecord& record, double fit_value, const ErrorBound& bound,
                   double bandwidth = 0.0);

enum class CIStatus { kUncrossed, kCrossed };

CIStatus crossing_check(const CIRecord& record) noexcept;

}  // namespace noisyopt
