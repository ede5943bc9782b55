#include "noisyopt/types.hpp"

#include <algorithm>
#include <cmath>

namespace noisyopt {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kDomainViolation: return "DomainViolation";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kInvalidBeta: return "InvalidBeta";
    case ErrorCode::kNoMinimum: return "NoMinimum";
    case ErrorCode::kNoSamples: return "NoSamples";
    case ErrorCode::kUnusableFit: return "UnusableFit";
    case ErrorCode::kPackingTooSmall: return "PackingTooSmall";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kIoFailure: return "IOFailure";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void PointSet::push_back(PointView p) {
  if (p.size() != dim_) {
    throw Error(ErrorCode::kDomainViolation, "point dimension mismatch");
  }
  coords_.insert(coords_.end(), p.begin(), p.end());
}

bool in_unit_cube(PointView x) noexcept {
  return std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

double l2_distance(PointView a, PointView b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

bool lex_less(PointView a, PointView b) noexcept {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace noisyopt
