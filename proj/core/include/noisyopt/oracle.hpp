#pragma once

#include <cstddef>
#include <cstdint>

#include "noisyopt/function_spec.hpp"
#include "noisyopt/rng.hpp"
#include "noisyopt/types.hpp"

namespace noisyopt {

/// Append-only record of (query point, response) pairs in query order.
class SampleLog {
 public:
  explicit SampleLog(std::size_t dim = 1, std::size_t capacity = 0);

  void append(PointView x, double y);

  std::size_t dim() const noexcept { return points_.dim(); }
  std::size_t size() const noexcept { return responses_.size(); }
  bool empty() const noexcept { return responses_.empty(); }
  std::size_t capacity() const noexcept { return capacity_; }

  PointView point(std::size_t t) const { return points_[t]; }
  double response(std::size_t t) const { return responses_[t]; }
  const PointSet& points() const noexcept { return points_; }
  const std::vector<double>& responses() const noexcept { return responses_; }

 private:
  PointSet points_;
  std::vector<double> responses_;
  std::size_t capacity_;
};

/// Simulated zeroth-order oracle y = f(x) + noise_sd * w, w ~ N(0, 1).
///
/// The oracle owns the query budget: every query is counted here and no
/// query is answered once `used() == budget()`. Instances are movable
/// between threads but must not be shared.
class NoisyOracle {
 public:
  NoisyOracle(FunctionSpec objective, double noise_sd, std::size_t budget, RngStream rng);

  double query(PointView x);

  /// Draws `count` points i.i.d. uniformly from `points` and queries each.
  /// Returns the new pairs in draw order.
  SampleLog batch_uniform(const PointSet& points, std::size_t count);

  /// Draws `count` points i.i.d. uniformly on [0,1]^d and queries each.
  SampleLog batch_uniform_cube(std::size_t count);

  const FunctionSpec& objective() const noexcept { return objective_; }
  double noise_sd() const noexcept { return noise_sd_; }
  std::size_t budget() const noexcept { return budget_; }
  std::size_t used() const noexcept { return used_; }
  std::size_t remaining() const noexcept { return budget_ - used_; }
  const SampleLog& log() const noexcept { return log_; }

 private:
  void require_budget(std::size_t count) const;

  FunctionSpec objective_;
  double noise_sd_;
  std::size_t budget_;
  std::size_t used_ = 0;
  RngStream rng_;
  SampleLog log_;
};

}  // namespace noisyopt
