#include "noisyopt/oracle.hpp"

#include <string>
#include <utility>

namespace noisyopt {

SampleLog::SampleLog(std::size_t dim, std::size_t capacity)
    : points_(dim), capacity_(capacity) {
  if (capacity_ > 0) {
    points_.reserve(capacity_);
    responses_.reserve(capacity_);
  }
}

void SampleLog::append(PointView x, double y) {
  if (!in_unit_cube(x)) throw Error(ErrorCode::kDomainViolation, "sample outside [0,1]^d");
  points_.push_back(x);
  responses_.push_back(y);
}

NoisyOracle::NoisyOracle(FunctionSpec objective, double noise_sd, std::size_t budget,
                         RngStream rng)
    : objective_(std::move(objective)),
      noise_sd_(noise_sd),
      budget_(budget),
      rng_(std::move(rng)),
      log_(static_cast<std::size_t>(objective_.dim), budget) {
  if (!(noise_sd_ >= 0.0)) throw Error(ErrorCode::kConfig, "noise_sd must be nonnegative");
}

void NoisyOracle::require_budget(std::size_t count) const {
  if (count > budget_ - used_) {
    throw Error(ErrorCode::kBudgetExhausted,
                "requested " + std::to_string(count) + " queries with " +
                    std::to_string(budget_ - used_) + " remaining");
  }
}

double NoisyOracle::query(PointView x) {
  require_budget(1);
  if (x.size() != static_cast<std::size_t>(objective_.dim) || !in_unit_cube(x)) {
    throw Error(ErrorCode::kDomainViolation, "query outside [0,1]^d");
  }
  const double w = rng_.normal();
  const double y = objective_(x) + noise_sd_ * w;
  ++used_;
  log_.append(x, y);
  return y;
}

SampleLog NoisyOracle::batch_uniform(const PointSet& points, std::size_t count) {
  if (points.empty()) throw Error(ErrorCode::kEmptySet, "batch_uniform over an empty set");
  require_budget(count);
  SampleLog out(points.dim(), count);
  for (std::size_t i = 0; i < count; ++i) {
    const PointView x = points[rng_.index(points.size())];
    out.append(x, query(x));
  }
  return out;
}

SampleLog NoisyOracle::batch_uniform_cube(std::size_t count) {
  require_budget(count);
  const auto d = static_cast<std::size_t>(objective_.dim);
  SampleLog out(d, count);
  Point x(d);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& v : x) v = rng_.uniform();
    out.append(x, query(x));
  }
  return out;
}

}  // namespace noisyopt
