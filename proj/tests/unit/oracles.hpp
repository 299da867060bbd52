#pragma once

// Reference computations shared by the unit tests and the acceptance binary.
// They deliberately avoid the library's own shortcuts.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// tr((A^T A)^{-1}) through an explicit inverse; +inf when singular.
inline double mse_by_inverse(const Matrix& A) {
  const Matrix G = A.transpose() * A;
  Eigen::FullPivLU<Matrix> lu(G);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  return lu.inverse().trace();
}

inline double mse_weighted(const Matrix& A, const Vector& z) {
  const Matrix G = A.transpose() * z.asDiagonal() * A;
  Eigen::FullPivLU<Matrix> lu(G);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  return lu.inverse().trace();
}

inline Matrix rows_of(const Matrix& A, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = A.row(rows[r]);
  }
  return out;
}

/// Visits every k-subset of {0..m-1} in lexicographic order.
inline void for_each_subset(int m, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<bool> mask(static_cast<std::size_t>(m), false);
  std::fill(mask.begin(), mask.begin() + k, true);
  std::vector<int> subset;
  do {
    subset.clear();
    for (int i = 0; i < m; ++i) {
      if (mask[static_cast<std::size_t>(i)]) subset.push_back(i);
    }
    f(subset);
  } while (std::prev_permutation(mask.begin(), mask.end()));
}

/// Smallest subset size whose MSE meets the threshold, by full enumeration.
inline int min_sensors_mse(const Matrix& A, double threshold) {
  const int m = static_cast<int>(A.rows());
  for (int k = static_cast<int>(A.cols()); k <= m; ++k) {
    bool found = false;
    for_each_subset(m, k, [&](const std::vector<int>& s) {
      if (!found && mse_by_inverse(rows_of(A, s)) <= threshold * (1 + 1e-12)) found = true;
    });
    if (found) return k;
  }
  return -1;
}

/// Coefficients (ascending powers) of p <- p - c p' applied k times to x^n.
inline std::vector<double> derivative_recursion(int n, double c, int k) {
  std::vector<double> p(static_cast<std::size_t>(n + 1), 0.0);
  p[static_cast<std::size_t>(n)] = 1.0;
  for (int step = 0; step < k; ++step) {
    std::vector<double> next = p;
    for (int i = 1; i <= n; ++i) {
      next[static_cast<std::size_t>(i - 1)] -= c * i * p[static_cast<std::size_t>(i)];
    }
    p = std::move(next);
  }
  return p;
}

/// Smallest-objective point of  min w^T z  s.t.  tr((A^T diag(z) A)^{-1}) <= thr,
/// 0 <= z <= 1, by bisection on the multiplier of the accuracy constraint and
/// projected gradient descent on the Lagrangian from several random starts.
inline double relaxed_selection_objective(const Matrix& A, const Vector& w, double thr,
                                          int starts, unsigned seed) {
  const Eigen::Index m = A.rows();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 1.0);

  auto lagrangian_min = [&](double mu, Vector z) {
    auto value = [&](const Vector& x) { return w.dot(x) + mu * mse_weighted(A, x); };
    double f = value(z);
    double step = 1.0;
    for (int it = 0; it < 20000; ++it) {
      const Matrix P = (A.transpose() * z.asDiagonal() * A).inverse();
      const Matrix PA = A * P;  // row i: (P a_i)^T
      Vector g(m);
      for (Eigen::Index i = 0; i < m; ++i) g(i) = w(i) - mu * PA.row(i).squaredNorm();
      bool moved = false;
      step = std::min(1.0, step * 2.0);
      while (step > 1e-16) {
        const Vector trial = (z - step * g).cwiseMax(0.0).cwiseMin(1.0);
        const double ft = value(trial);
        if (std::isfinite(ft) && ft <= f - 1e-4 * g.dot(z - trial)) {
          moved = (trial - z).norm() > 1e-14;
          z = trial;
          f = ft;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    return z;
  };

  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    Vector start(m);
    for (Eigen::Index i = 0; i < m; ++i) start(i) = unif(rng);
    // Accuracy decreases as mu grows; bisection on log mu.
    double lo = -12.0, hi = 8.0;
    Vector zHi = lagrangian_min(std::pow(10.0, hi), start);
    if (mse_weighted(A, zHi) > thr) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Vector z = lagrangian_min(std::pow(10.0, mid), zHi);
      if (mse_weighted(A, z) <= thr) {
        hi = mid;
        zHi = z;
      } else {
        lo = mid;
      }
    }
    best = std::min(best, w.dot(zHi));
  }
  return best;
}

}  // namespace oracle
