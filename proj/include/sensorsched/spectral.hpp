#pragma once

#include <cstdint>
#include <optional>

#include "sensorsched/netmodel.hpp"

namespace sensorsched {

/// Average performance of a uniformly random k-subset of an alpha-tight
/// m x n frame. expWceLower is a lower bound on E[WCE], not an estimate.
struct ExpectedPerf {
  int k = 0;
  double expMse = 0.0;
  double expWceLower = 0.0;
  double expVce = 0.0;
};

/// Constant and linear coefficients of the expected characteristic
/// polynomial after k random rank-one updates, normalised so that a0 > 0.
/// The log fields carry the same values for ranges where a0 overflows.
struct CharPolyCoeffs {
  int k = 0;
  double a0 = 0.0;
  double a1 = 0.0;
  double logA0 = 0.0;
  double logNegA1 = 0.0;

  /// -a1 / a0 evaluated in log space.
  double meanInverseRoot() const;
};

double log_binomial(int n, int k);

ExpectedPerf expected_perf(int m, int n, double alpha, int k);
CharPolyCoeffs charpoly_coeffs(int m, int n, double alpha, int k);

/// n m^2 / (sqrt(k) + sqrt(c1 n))^4, the per-partition MSE floor for a tight
/// (alpha = 1) frame split into blocks of k rows.
double ks_mse_lower_bound(int m, int n, int k, double c1 = 1.0);
/// Large-k asymptote n (m / k)^2 of the bound above.
double ks_mse_asymptote(int m, int n, int k);

struct MseBracket {
  double lo = 0.0;
  double hi = 0.0;
};

/// Extreme-eigenvalue bracket for a k x n standard Gaussian matrix.
MseBracket gaussian_mse_bounds(int k, int n);

/// mu_1 >= lambda_1 >= mu_2 >= ... >= mu_n >= lambda_n within 1e-9 lambda_1.
/// Inputs may come in any order; both are sorted descending first.
bool interlace_check(Vector eigsBefore, Vector eigsAfter);

/// lambda_n (1 + a^T M^{-1} a) for M whose spectrum `eigs` is an arithmetic
/// progression lambda_1 + (i - 1) r with r <= 0 and lambda_n > 0.
double result2_bound(const Vector& eigs, const Matrix& M, const Vector& a);

/// Bounds on the smallest singular value after appending the row a to A.
struct MinSvBounds {
  /// sigma_min(A); never exceeds sigma_min of the extended matrix.
  double lower = 0.0;
  /// Square invertible A only: sqrt(1 + ||a^T A^{-1}||^2) sigma_min(A).
  std::optional<double> upperSquareCase;
  /// Square invertible A only: min{sqrt(sigma_min^2 + ||a||^2), sigma_{n-1}}.
  std::optional<double> cap;
  /// Upper bound on lambda_n of the extended Gram matrix,
  /// (1 / lambda_n(A^T A) - ||G^{-1} a||^2 / (1 - a^T G^{-1} a))^{-1} with
  /// G the extended Gram matrix; +inf when the bracket is nonpositive.
  double lambdaMinBound = 0.0;
};

MinSvBounds min_sv_bounds(const Matrix& A, const Vector& a);

struct MonteCarloMse {
  int k = 0;
  double mean = 0.0;
  double stddev = 0.0;
  long samples = 0;
  /// Draws rejected as singular; excluded from mean and stddev.
  long singular = 0;

  double stderror() const;
};

/// MSE statistics over uniform k-subsets of the rows of A.
///
/// Samples are drawn in fixed-size chunks, each with its own generator seeded
/// from (seed, chunk), so the result does not depend on the worker count.
MonteCarloMse monte_carlo_mse(const Matrix& A, int k, long samples,
                              std::uint64_t seed, int jobs = 1);

}  // namespace sensorsched
