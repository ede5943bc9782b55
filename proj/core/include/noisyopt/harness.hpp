#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisyopt/function_spec.hpp"
#include "noisyopt/kv_config.hpp"
#include "noisyopt/optimizer.hpp"
#include "noisyopt/types.hpp"

namespace noisyopt {

/// Named benchmark family plus its parameters. Fields that do not apply to
/// the chosen family are ignored.
struct FamilyConfig {
  std::string name = "convex";  // power | convex | constant | two-valley
  int d = 2;
  double beta = 1.0;   // power: growth exponent
  double a0 = 1.0;     // power: scale
  double alpha = 1.0;  // power: declared smoothness
  double sigma = 2.0;  // convex: curvature
  double center = 0.3; // convex: every coordinate of the minimizer
  double value = 0.0;  // constant
  double raise = 0.5;  // two-valley: lift of the right valley
};

FunctionSpec make_family(const FamilyConfig& family);

/// Growth exponent used for theoretical slopes: the family's hint, else 0.
double family_beta(const FunctionSpec& f);

enum class Method { kActive, kPassive };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& s);

struct SweepPlan {
  FamilyConfig family;
  std::vector<std::size_t> n_values;
  int seeds = 1;
  std::vector<Method> methods{Method::kActive, Method::kPassive};
  double noise_sd = 1.0;
  std::string output_path;  // empty: no file
  std::uint64_t master_seed = 0;
  bool timing = false;  // wall_ms stays 0 otherwise, keeping output reproducible
  int threads = 1;

  // Per-cell optimizer settings. n and seed are overwritten per cell; alpha,
  // M and kappa come from the family unless overridden here.
  OptimizerConfig optimizer;
  std::optional<double> alpha;
  std::optional<double> M;
  std::optional<double> kappa;

  /// Throws a config error on an invalid plan.
  void validate() const;
};

struct ExperimentRow {
  Method method = Method::kActive;
  std::size_t n = 0;
  int seed = 0;
  double regret = 0.0;
  std::size_t queries = 0;
  int epochs = 0;
  std::size_t grid_size = 0;
  std::int64_t wall_ms = 0;
  double grid_gap = 0.0;  // min over the grid minus f*; the floor regret can reach
};

void write_rows_header(std::ostream& out);
void write_row(std::ostream& out, const ExperimentRow& row);
std::vector<ExperimentRow> read_rows_csv(const std::string& path);

/// Optimizer settings of one sweep cell.
OptimizerConfig cell_config(const SweepPlan& plan, const FunctionSpec& f, std::size_t n,
                            int seed);

/// One (method, n, seed) cell. Cells get independent substreams of the
/// master seed; both methods of a (n, seed) pair share the design grid.
ExperimentRow run_cell(const SweepPlan& plan, const FunctionSpec& f, Method method, std::size_t n,
                       int seed);

/// Rows in (method, n, seed) order. Writes and flushes each row to
/// plan.output_path as it completes.
std::vector<ExperimentRow> run_sweep(const SweepPlan& plan);

struct MedianPoint {
  std::size_t n = 0;
  double median = 0.0;
  std::size_t runs = 0;
};

/// Per-n median regret of one method, ascending in n.
std::vector<MedianPoint> median_regret(std::span<const ExperimentRow> rows, Method method);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
  std::size_t points = 0;
  std::vector<std::size_t> excluded_n;  // medians of zero, left out of the log fit
};

/// OLS of log(median regret) on log n. Needs three nonzero medians.
SlopeFit fit_slope(std::span<const ExperimentRow> rows, Method method);

struct ComparisonRow {
  std::size_t n = 0;
  std::size_t pairs = 0;
  double win_rate = 0.0;  // active < passive; ties count one half
  double active_median = 0.0;
  double passive_median = 0.0;
  double median_ratio = 0.0;  // active / passive
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // ascending n, only n with paired seeds
  std::optional<SlopeFit> active_slope;
  std::optional<SlopeFit> passive_slope;

  const ComparisonRow& largest() const { return rows.back(); }
};

ComparisonReport compare_methods(std::span<const ExperimentRow> rows);

struct StressOptions {
  std::size_t n = 1024;
  std::size_t bumps = 1;
  int seeds = 10;
  double amplitude_scale = 1.0;  // multiplies the bump height; 0 gives plain f0
  int smoothness_N = 2;
  double noise_sd = 1.0;
  std::uint64_t master_seed = 0;
  std::size_t packing_candidates = 20000;
  OptimizerConfig optimizer;  // n and seed are overwritten per run
};

struct StressRun {
  int seed = 0;
  std::size_t location = 0;  // index into the packing
  double regret = 0.0;
  bool minimizer_verified = false;
};

struct StressReport {
  double eps_lower = 0.0;
  double h = 0.0;
  double amplitude = 0.0;  // sup |f_x - f0|
  PointSet packing;
  std::vector<StressRun> runs;
  double success_fraction = 0.0;  // regret < eps_lower
};

/// Plants a bump of height 2 eps_n^L at a random packing location of the
/// eps_n^L level set and runs the active optimizer on the result.
StressReport adversarial_stress(const FunctionSpec& f0, const StressOptions& opt);

/// Bump width giving height 2 eps on f0: (4 eps / M)^(1/alpha).
double stress_bandwidth(const FunctionSpec& f0, double eps);

struct PlotMeta {
  double alpha = 2.0;
  int d = 2;
  double beta = 1.0;
};

/// Writes <prefix>_points.csv (method, log n, log median regret) and
/// <prefix>_summary.csv (method, slope, stderr, theoretical slope). Passive
/// runs are compared against beta = 0.
void emit_plotdata(std::span<const ExperimentRow> rows, const std::string& prefix,
                   const PlotMeta& meta);

// Config readers. Keys left unset keep the values passed in.
FamilyConfig family_from_config(const KvConfig& cfg, FamilyConfig defaults = {});
void optimizer_from_config(const KvConfig& cfg, OptimizerConfig& opt);

struct SmoothnessOverrides {
  std::optional<double> alpha;
  std::optional<double> M;
  std::optional<double> kappa;
};

SmoothnessOverrides smoothness_from_config(const KvConfig& cfg);

/// Reads family, plan and optimizer keys; throws a config error on unknown keys.
SweepPlan sweep_plan_from_config(const KvConfig& cfg);

}  // namespace noisyopt
