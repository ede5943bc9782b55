#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisyopt {

enum class ErrorCode {
  kBudgetExhausted,
  kDomainViolation,
  kEmptySet,
  kInvalidBeta,
  kNoMinimum,
  kNoSamples,
  kUnusableFit,
  kPackingTooSmall,
  kInsufficientData,
  kIoFailure,
  kConfig,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Dense, row-major set of points sharing one dimension.
class PointSet {
 public:
  explicit PointSet(std::size_t dim = 1) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  PointView operator[](std::size_t i) const {
    return PointView(coords_.data() + i * dim_, dim_);
  }
  Point point(std::size_t i) const {
    auto p = (*this)[i];
    return Point(p.begin(), p.end());
  }

  void push_back(PointView p);
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }
  const std::vector<double>& coords() const noexcept { return coords_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

bool in_unit_cube(PointView x) noexcept;
inline double linf_distance(PointView a, PointView b) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    d = t > d ? t : d;
  }
  return d;
}
double l2_distance(PointView a, PointView b) noexcept;
bool lex_less(PointView a, PointView b) noexcept;

}  // namespace noisyopt
