#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisyopt/bandit_ci.hpp"
#include "noisyopt/function_spec.hpp"
#include "noisyopt/oracle.hpp"
#include "noisyopt/rng.hpp"
#include "noisyopt/types.hpp"

namespace noisyopt {

enum class OutputRule {
  kMinUpper,   // argmin of the final upper confidence edge over the active set
  kLastQuery,  // the last point queried
};

struct OptimizerConfig {
  std::size_t n = 1024;
  std::size_t grid_size = 4096;
  double alpha = 2.0;
  double M = 1.0;
  double kappa = std::numeric_limits<double>::infinity();
  std::optional<double> delta;  // default 1 / (n^4 |G|)
  bool prescreen = false;       // only honoured when kappa is finite
  std::uint64_t seed = 0;
  std::optional<int> epochs_override;
  std::optional<std::int64_t> grid_resolution;  // default n^2
  BandwidthSearch search = BandwidthSearch::kBreakpoint;
  double ridge_rel = 1e-10;
  std::optional<double> noise_sd;  // level used in the bound; default: the oracle's
  double c_h = 1.0;                // passive bandwidth constant
  double grid_tilt = 0.0;          // grid density prod_i (1 + tilt (2 z_i - 1)), tilt in [0, 1)
  OutputRule output = OutputRule::kMinUpper;
};

/// Epoch layout implied by a config: T epochs of n0 queries after an optional
/// pre-screening pass of n_pre queries. T * n0 + n_pre <= n.
struct EpochPlan {
  int epochs = 0;
  std::size_t per_epoch = 0;
  std::size_t prescreen_queries = 0;

  std::size_t total() const noexcept {
    return static_cast<std::size_t>(epochs) * per_epoch + prescreen_queries;
  }
};

bool prescreen_enabled(const OptimizerConfig& cfg) noexcept;
EpochPlan epoch_plan(const OptimizerConfig& cfg);

/// delta = 1 / (n^4 |G|) unless overridden.
double default_delta(std::size_t n, std::size_t grid_size);

struct GridState {
  PointSet points;
  std::vector<std::size_t> active;  // ascending grid indices
  std::vector<double> radii;        // per grid point, +inf initially
  std::vector<CIRecord> ci;         // per grid point
  int epoch = 0;
};

struct EpochRecord {
  int epoch = 0;
  std::size_t active = 0;     // |S_tau|
  std::size_t extension = 0;  // |S_{tau-1} extended|
  double max_eta = 0.0;
  double min_upper = 0.0;
  std::size_t queries = 0;  // cumulative oracle queries after the epoch
  std::size_t unusable = 0;
  std::size_t crossed = 0;
};

struct ActiveResult {
  Point x_hat;
  std::size_t x_hat_index = 0;
  GridState state;
  std::vector<EpochRecord> trace;
  std::vector<std::vector<std::size_t>> active_history;  // S_0 .. S_T
  std::vector<std::vector<double>> radii_history;        // rho_0 .. rho_T
  EpochPlan plan;
  std::size_t queries = 0;
  double delta = 0.0;
};

struct PassiveResult {
  Point x_hat;
  std::size_t x_hat_index = 0;
  double bandwidth = 0.0;
  std::vector<double> estimates;  // per grid point, +inf where the fit is unusable
  std::size_t unusable = 0;
  std::size_t queries = 0;
};

struct PrescreenResult {
  std::vector<std::size_t> retained;  // ascending grid indices
  std::vector<double> averages;       // per grid point, NaN when the window is empty
  double h0 = 0.0;
  double threshold = 0.0;  // min average + 1 / ln n
  std::size_t queries = 0;
};

/// grid_size i.i.d. draws from the configured product density on [0,1]^d.
PointSet build_grid(const OptimizerConfig& cfg, int d, RngStream& rng);

/// Grid indices within l_inf distance radii[x] of some active x, ascending.
/// `radii` is indexed by grid point.
std::vector<std::size_t> extension_indices(std::span<const std::size_t> active,
                                           std::span<const double> radii, const PointSet& grid);

/// Point-set form: radii[i] belongs to S[i]; the result keeps grid order.
PointSet extension_set(const PointSet& S, std::span<const double> radii, const PointSet& grid);

PrescreenResult prescreen(NoisyOracle& oracle, const PointSet& grid, std::size_t n);

ActiveResult run_active(NoisyOracle& oracle, const OptimizerConfig& cfg, const PointSet& grid);
ActiveResult run_active(NoisyOracle& oracle, const OptimizerConfig& cfg);

PassiveResult run_passive(NoisyOracle& oracle, const OptimizerConfig& cfg, const PointSet& grid);
PassiveResult run_passive(NoisyOracle& oracle, const OptimizerConfig& cfg);

/// f(x) - f*. Throws NoMinimum when f* is unknown.
double regret(const FunctionSpec& f, PointView x);

/// min over the grid of f, minus f*.
double grid_gap(const FunctionSpec& f, const PointSet& grid);

/// Index of the grid minimizer (ties lexicographic).
std::size_t grid_argmin(const FunctionSpec& f, const PointSet& grid);

void write_trace_csv(std::span<const EpochRecord> trace, std::ostream& out);

}  // namespace noisyopt
