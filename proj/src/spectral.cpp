#include "sensorsched/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sensorsched/parallel.hpp"
#include "sensorsched/sampling.hpp"

namespace sensorsched {

namespace {

void check_domain(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::DomainError, message);
}

Vector sorted_descending(Vector v) {
  std::sort(v.data(), v.data() + v.size(), std::greater<>());
  return v;
}

constexpr long kChunk = 256;

struct Moments {
  long count = 0;
  long singular = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  // Chan et al. pairwise combination.
  void merge(const Moments& other) {
    singular += other.singular;
    if (other.count == 0) return;
    if (count == 0) {
      const long s = singular;
      *this = other;
      singular = s;
      return;
    }
    const double total = static_cast<double>(count + other.count);
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(count) *
                         static_cast<double>(other.count) / total;
    count += other.count;
  }
};

}  // namespace

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double CharPolyCoeffs::meanInverseRoot() const {
  return std::exp(logNegA1 - logA0);
}

ExpectedPerf expected_perf(int m, int n, double alpha, int k) {
  check_domain(n >= 1 && m >= n, "expected_perf needs m >= n >= 1");
  check_domain(k >= n && k <= m, "expected_perf needs n <= k <= m");
  check_domain(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  ExpectedPerf perf;
  perf.k = k;
  const double dof = static_cast<double>(k - n + 1) * alpha;
  perf.expMse = static_cast<double>(m) * n / dof;
  perf.expWceLower = static_cast<double>(m) / dof;
  perf.expVce = std::lgamma(n + 1.0) + n * std::log(alpha / m) +
                log_binomial(k, k - n);
  return perf;
}

CharPolyCoeffs charpoly_coeffs(int m, int n, double alpha, int k) {
  check_domain(n >= 1 && m >= 1, "charpoly_coeffs needs m, n >= 1");
  check_domain(k >= n, "charpoly_coeffs needs k >= n");
  check_domain(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  CharPolyCoeffs c;
  c.k = k;
  const double logRatio = std::log(alpha / m);
  const double logFact = std::lgamma(n + 1.0);
  c.logA0 = logFact + n * logRatio + log_binomial(k, k - n);
  c.logNegA1 = logFact + (n - 1) * logRatio + log_binomial(k, k - n + 1);
  c.a0 = std::exp(c.logA0);
  c.a1 = -std::exp(c.logNegA1);
  return c;
}

double ks_mse_lower_bound(int m, int n, int k, double c1) {
  check_domain(n >= 1 && k >= n, "ks bound needs k >= n >= 1");
  check_domain(c1 >= 1.0, "ks bound needs c1 >= 1");
  const double root = std::sqrt(static_cast<double>(k)) + std::sqrt(c1 * n);
  const double mm = static_cast<double>(m);
  return n * mm * mm / std::pow(root, 4);
}

double ks_mse_asymptote(int m, int n, int k) {
  check_domain(k >= 1, "ks asymptote needs k >= 1");
  const double ratio = static_cast<double>(m) / k;
  return n * ratio * ratio;
}

MseBracket gaussian_mse_bounds(int k, int n) {
  check_domain(n >= 0 && k > n, "gaussian bounds need k > n >= 0");
  const double rk = std::sqrt(static_cast<double>(k));
  const double rn = std::sqrt(static_cast<double>(n));
  return {n / ((rk + rn) * (rk + rn)), n / ((rk - rn) * (rk - rn))};
}

bool interlace_check(Vector eigsBefore, Vector eigsAfter) {
  if (eigsBefore.size() != eigsAfter.size() || eigsBefore.size() == 0) {
    throw Error(ErrorKind::Validation, "interlacing needs equal nonempty spectra");
  }
  const Vector lambda = sorted_descending(std::move(eigsBefore));
  const Vector mu = sorted_descending(std::move(eigsAfter));
  const double scale = std::max(std::abs(lambda(0)), std::abs(mu(0)));
  const double tol = 1e-9 * scale;
  const Eigen::Index n = lambda.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mu(i) < lambda(i) - tol) return false;
    if (i + 1 < n && lambda(i) < mu(i + 1) - tol) return false;
  }
  return true;
}

double result2_bound(const Vector& eigs, const Matrix& M, const Vector& a) {
  const Eigen::Index n = eigs.size();
  if (n == 0 || M.rows() != n || M.cols() != n || a.size() != n) {
    throw Error(ErrorKind::Validation, "result2_bound dimension mismatch");
  }
  const Vector lambda = sorted_descending(eigs);
  const double top = lambda(0);
  const double bottom = lambda(n - 1);
  check_domain(bottom > 0.0, "spectrum must be positive");
  const double tol = 1e-9 * top;
  const double r = n > 1 ? (bottom - top) / static_cast<double>(n - 1) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    check_domain(std::abs(lambda(i) - (top + static_cast<double>(i) * r)) <= tol,
                 "spectrum is not an arithmetic progression");
  }
  const Vector actual = sorted_descending(spectrum_of(M));
  check_domain(((actual - lambda).cwiseAbs().array() <= 1e-8 * top).all(),
               "matrix spectrum does not match the given eigenvalues");
  const double leverage = a.dot(M.ldlt().solve(a));
  return bottom * (1.0 + leverage);
}

MinSvBounds min_sv_bounds(const Matrix& A, const Vector& a) {
  if (A.cols() != a.size() || A.rows() < A.cols()) {
    throw Error(ErrorKind::Validation, "min_sv_bounds needs A k x n, k >= n, a in R^n");
  }
  const Eigen::Index n = A.cols();
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& sigma = svd.singularValues();
  const double smin = sigma(n - 1);
  if (!(sigma(0) > 0.0) || smin * smin <= kRankFloor * sigma(0) * sigma(0)) {
    throw Error(ErrorKind::RankDeficient, "A must have full column rank");
  }
  MinSvBounds out;
  out.lower = smin;
  if (A.rows() == n) {
    const Vector w = A.transpose().partialPivLu().solve(a);  // A^{-T} a
    out.upperSquareCase = std::sqrt(1.0 + w.squaredNorm()) * smin;
    double cap = std::sqrt(smin * smin + a.squaredNorm());
    if (n >= 2) cap = std::min(cap, sigma(n - 2));
    out.cap = cap;
  }
  const Matrix G = A.transpose() * A + a * a.transpose();
  const Vector y = G.ldlt().solve(a);
  const double correction = y.squaredNorm() / (1.0 - a.dot(y));
  const double bracket = 1.0 / (smin * smin) - correction;
  out.lambdaMinBound =
      bracket > 0.0 ? 1.0 / bracket : std::numeric_limits<double>::infinity();
  return out;
}

double MonteCarloMse::stderror() const {
  return samples > 0 ? stddev / std::sqrt(static_cast<double>(samples)) : 0.0;
}

MonteCarloMse monte_carlo_mse(const Matrix& A, int k, long samples,
                              std::uint64_t seed, int jobs) {
  const int m = static_cast<int>(A.rows());
  check_domain(k >= static_cast<int>(A.cols()) && k <= m,
               "Monte Carlo subsets need n <= k <= m");
  check_domain(samples > 0, "Monte Carlo needs at least one sample");
  const long chunks = (samples + kChunk - 1) / kChunk;
  std::vector<Moments> partial(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<std::size_t>(chunks), jobs, [&](std::size_t c) {
    auto rng = stream_rng(seed, c);
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(samples, begin + kChunk);
    Moments& acc = partial[c];
    for (long s = begin; s < end; ++s) {
      const Matrix rows = select_rows(A, sample_subset(m, k, rng));
      try {
        acc.add(mse_of_gram(rows.transpose() * rows));
      } catch (const Error&) {
        ++acc.singular;
      }
    }
  });
  Moments total;
  for (const auto& p : partial) total.merge(p);
  MonteCarloMse out;
  out.k = k;
  out.samples = total.count;
  out.singular = total.singular;
  out.mean = total.mean;
  out.stddev =
      total.count > 1 ? std::sqrt(total.m2 / static_cast<double>(total.count - 1)) : 0.0;
  return out;
}

}  // namespace sensorsched
