#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "noisyopt/function_spec.hpp"
#include "noisyopt/rng.hpp"
#include "noisyopt/types.hpp"

namespace noisyopt {

// ---------------------------------------------------------------------------
// Function families
// ---------------------------------------------------------------------------

/// f(z) = a0 * sum_j z_j^p with p = d / beta. Minimum 0 at the origin and
/// mu(eps) = Gamma(1+1/p)^d / Gamma(1+d/p) * (eps/a0)^beta for eps <= a0.
/// Requires beta in (0, d/alpha].
FunctionSpec make_power_family(int d, double beta, double a0, double alpha = 1.0);

/// f == value everywhere. Every point is a minimizer and mu(eps) = 1 for eps > 0.
FunctionSpec make_constant(int d, double value = 0.0);

/// f(z) = (sigma/2) * ||z - center||_2^2 with alpha = 2 and beta_hint = d/2.
FunctionSpec make_strongly_convex(int d, double sigma, const Point& center);

/// Two quadratic valleys split at z_0 = 1/2: the left one (centered at
/// z_0 = 1/4) holds the global minimum 0, the right one (z_0 = 3/4) is
/// lifted by `raise`. The jump at the split makes kappa finite.
FunctionSpec make_two_valley(int d, double raise);

// ---------------------------------------------------------------------------
// Brute-force minima
// ---------------------------------------------------------------------------

struct BruteForceMinimum {
  double value = 0.0;
  Point argmin;
  double spacing = 0.0;  // grid step (or typical random spacing for d >= 3)
};

/// Uniform grid of about 1e5 points for d <= 2, 1e6 random points for d >= 3.
BruteForceMinimum brute_force_minimum(const FunctionSpec& f, RngStream& rng);

/// Regular grid with about `points` nodes on the box [lo, hi] (clipped to the cube).
BruteForceMinimum brute_force_minimum_box(const FunctionSpec& f, PointView lo, PointView hi,
                                          std::size_t points);

/// Returns f with analytic_min/minimizer filled from a brute-force search when absent.
FunctionSpec with_brute_force_minimum(FunctionSpec f, RngStream& rng);

// ---------------------------------------------------------------------------
// Smooth bumps and adversarial perturbations
// ---------------------------------------------------------------------------

/// S_N(x) = (1/Z) x^{N+1} sum_{n=0}^{N} C(N+n, n) C(2N+1, N-n) (-x)^n on [0,1].
double smoothstep(int N, double Z, double x);

/// phi0(u) = 1/Z - S_N(min(1, ||u||_1)); vanishes outside the l1 unit ball.
double bump_profile(int N, double Z, PointView u);

/// 1[||z-x||_inf <= h] * (M h^alpha / 2) * phi0((z - x) / h).
double bump(PointView x, double h, double M, double alpha, int N, PointView z, double Z = 1.0);

/// Peak value of bump(), attained at z = x.
double bump_peak(double h, double M, double alpha, double Z = 1.0);

/// f_x = f0 - bump(x, h, f0.holder_M, f0.alpha, N). The minimum is located by a
/// fine grid over the bump support and compared with f0*.
FunctionSpec make_adversarial(const FunctionSpec& f0, PointView x, double h, int N,
                              double Z = 1.0);

/// Greedy packing of closed h-boxes inside the eps-level set of f0.
///
/// Scans a regular grid of about `candidates` points in lexicographic order
/// and accepts a point when its box lies in [0,1]^d, its corners and center
/// are in the level set, and it does not overlap an accepted box (pairwise
/// l_inf distance >= 2h, so boxes may touch but interiors are disjoint).
PointSet pack_level_set(const FunctionSpec& f0, double eps, double h, std::size_t candidates);

// ---------------------------------------------------------------------------
// Level-set volumes and regularity diagnostics
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of mu(eps); standard error <= 1 / (2 sqrt(samples)).
double estimate_volume(const FunctionSpec& f0, double eps, std::size_t samples, RngStream& rng);

enum class VolumeMethod { kAnalytic, kMonteCarlo };

const char* to_string(VolumeMethod m) noexcept;

struct LevelSetProfile {
  std::vector<double> epsilons;
  std::vector<double> volumes;
  VolumeMethod method = VolumeMethod::kAnalytic;
  std::size_t mc_samples = 0;

  /// Linear interpolation in eps, clamped at both ends.
  double volume_at(double eps) const;
};

LevelSetProfile analytic_profile(const FunctionSpec& f0, std::vector<double> epsilons);

/// Uses one set of draws for every eps, so volumes are non-decreasing.
LevelSetProfile monte_carlo_profile(const FunctionSpec& f0, std::vector<double> epsilons,
                                    std::size_t samples, RngStream& rng);

/// CSV with header `eps,volume,method,samples`.
void write_profile_csv(const LevelSetProfile& profile, std::ostream& out);
void write_profile_csv(const LevelSetProfile& profile, const std::string& path);

struct A2Entry {
  double eps = 0.0;
  double delta = 0.0;
  double volume = 0.0;
  std::size_t cover = 0;    // greedy l2 delta-net size (upper bound on N)
  std::size_t packing = 0;  // greedy disjoint l2 delta-balls (lower bound on M)
  double cover_ratio = 0.0;    // cover / (1 + mu delta^-d)
  double packing_ratio = 0.0;  // packing / (mu delta^-d)
};

struct A2Report {
  std::vector<A2Entry> entries;
  double c0_hat = 0.0;        // max cover_ratio
  double c0_prime_hat = 0.0;  // min packing_ratio
};

/// Covering/packing counts of each profiled level set at each delta, computed
/// on a regular grid with `resolution` nodes per axis (0 picks a default).
A2Report check_A2(const LevelSetProfile& profile, const FunctionSpec& f0,
                  std::span<const double> deltas, std::size_t resolution = 0);

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

/// -alpha / (2 alpha + d - alpha beta).
double theoretical_exponent(double alpha, int d, double beta);

/// n^{-alpha / (2 alpha + d - alpha beta)}, log factors omitted. beta in [0, 2 + d/alpha).
double theoretical_rate(double n, double alpha, int d, double beta);

enum class EpsVariant { kUpper, kLower };

/// Smallest admissible omega for the upper variant is 5 + d/alpha; this returns 6 + d/alpha.
double default_omega(int d, double alpha);

/// The 400-point log-spaced grid on [1e-8, 1] scanned by solve_eps_n.
const std::vector<double>& eps_grid();

/// Largest grid eps with eps^{-(2 + d/alpha)} mu(eps) >= threshold, where the
/// threshold is n (lower) or n / max(1, ln n)^omega (upper). Returns the
/// grid floor when nothing is feasible.
double solve_eps_n(const std::function<double(double)>& mu, int d, double alpha, double n,
                   double omega, EpsVariant variant);
double solve_eps_n(const FunctionSpec& f0, double n, double omega, EpsVariant variant);
double solve_eps_n(const LevelSetProfile& profile, int d, double alpha, double n, double omega,
                   EpsVariant variant);

}  // namespace noisyopt
