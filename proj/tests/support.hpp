#pragma once

// Reference routines for the tests, written independently of the library
// (no Eigen): cyclic Jacobi for symmetric eigenproblems and a pseudo-inverse
// least-squares solve built on it.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "noisyopt/types.hpp"

namespace testsupport {

using Matrix = std::vector<std::vector<double>>;

struct Eigen {
  std::vector<double> values;
  Matrix vectors;  // columns
};

inline Eigen jacobi_eigen(Matrix a) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  Eigen e;
  for (std::size_t i = 0; i < n; ++i) e.values.push_back(a[i][i]);
  e.vectors = v;
  return e;
}

inline double min_eigenvalue(const Matrix& a) {
  const auto e = jacobi_eigen(a);
  double m = e.values[0];
  for (double x : e.values) m = std::min(m, x);
  return m;
}

/// Least squares via the normal equations and an eigen pseudo-inverse with
/// relative cutoff `tol`.
inline std::vector<double> pinv_lstsq(const Matrix& X, const std::vector<double>& y,
                                      double tol = 1e-10) {
  const std::size_t D = X.empty() ? 0 : X[0].size();
  Matrix G(D, std::vector<double>(D, 0.0));
  std::vector<double> r(D, 0.0);
  for (std::size_t t = 0; t < X.size(); ++t) {
    for (std::size_t a = 0; a < D; ++a) {
      r[a] += X[t][a] * y[t];
      for (std::size_t b = 0; b < D; ++b) G[a][b] += X[t][a] * X[t][b];
    }
  }
  const auto e = jacobi_eigen(G);
  double lmax = 0.0;
  for (double v : e.values) lmax = std::max(lmax, v);
  std::vector<double> theta(D, 0.0);
  for (std::size_t k = 0; k < D; ++k) {
    const double lam = e.values[k];
    if (!(lam > tol * lmax)) continue;
    double proj = 0.0;
    for (std::size_t a = 0; a < D; ++a) proj += e.vectors[a][k] * r[a];
    for (std::size_t a = 0; a < D; ++a) theta[a] += e.vectors[a][k] * proj / lam;
  }
  return theta;
}

/// Monomials of u in the library's documented order: degree first, then
/// descending exponent of the first coordinate (recursively).
inline void exponents_of_degree(int dim, int deg, std::vector<int>& cur,
                                std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == dim - 1) {
    cur.push_back(deg);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = deg; e >= 0; --e) {
    cur.push_back(e);
    exponents_of_degree(dim, deg - e, cur, out);
    cur.pop_back();
  }
}

inline std::vector<std::vector<int>> monomial_exponents(int dim, int degree) {
  std::vector<std::vector<int>> out;
  for (int k = 0; k <= degree; ++k) {
    std::vector<int> cur;
    exponents_of_degree(dim, k, cur, out);
  }
  return out;
}

inline std::vector<double> monomials(const std::vector<std::vector<int>>& exps,
                                     noisyopt::PointView u) {
  std::vector<double> v;
  for (const auto& e : exps) {
    double p = 1.0;
    for (std::size_t i = 0; i < e.size(); ++i) p *= std::pow(u[i], e[i]);
    v.push_back(p);
  }
  return v;
}

template <typename F>
noisyopt::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const noisyopt::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a noisyopt::Error");
}

}  // namespace testsupport
