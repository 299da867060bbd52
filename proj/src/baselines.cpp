#include "sensorsched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sensorsched/sampling.hpp"

namespace sensorsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_k(const SensorNetwork& network, int k) {
  if (k < network.n() || k > network.m()) {
    throw Error(ErrorKind::DomainError,
                "selection size must satisfy n <= k <= m, got k = " + std::to_string(k));
  }
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

struct PseudoScore {
  int rank = 0;
  double trace = kInf;  // trace of the pseudo-inverse
};

PseudoScore pseudo_score(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const Vector& lam = eig.eigenvalues();
  const double top = lam(lam.size() - 1);
  PseudoScore score{0, 0.0};
  if (!(top > 0.0)) return score;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > kRankFloor * top) {
      ++score.rank;
      score.trace += 1.0 / lam(i);
    }
  }
  return score;
}

}  // namespace

std::string_view to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::GreedyAddMse:
      return "greedy";
    case SelectionMethod::FramePotentialRemove:
      return "fp";
    case SelectionMethod::Random:
      return "random";
    case SelectionMethod::Exhaustive:
      return "exhaustive";
  }
  return "unknown";
}

SelectionResult greedy_add_mse(const SensorNetwork& network, int k) {
  check_k(network, k);
  const Matrix& A = network.A();
  const int m = network.m();
  const int n = network.n();
  SelectionResult out;
  out.method = SelectionMethod::GreedyAddMse;
  std::vector<bool> taken(static_cast<std::size_t>(m), false);
  Matrix gram = Matrix::Zero(n, n);
  int rank = 0;

  // Until the set spans R^n the MSE is undefined; rank first.
  while (rank < n && static_cast<int>(out.indices.size()) < k) {
    int best = -1;
    PseudoScore bestScore;
    double bestNorm = -1.0;
    for (int j = 0; j < m; ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      const Vector a = A.row(j).transpose();
      const PseudoScore score = pseudo_score(gram + a * a.transpose());
      const double norm = a.squaredNorm();
      bool better = best < 0 || score.rank > bestScore.rank;
      if (!better && score.rank == bestScore.rank) {
        if (nearly_equal(score.trace, bestScore.trace)) {
          better = norm > bestNorm && !nearly_equal(norm, bestNorm);
        } else {
          better = score.trace < bestScore.trace;
        }
      }
      if (better) {
        best = j;
        bestScore = score;
        bestNorm = norm;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    out.indices.push_back(best);
    gram += A.row(best).transpose() * A.row(best);
    rank = bestScore.rank;
    out.trajectory.push_back(rank == n ? mse_of_gram(gram) : kInf);
  }
  if (rank < n) {
    throw Error(ErrorKind::RankDeficient, "greedy selection could not reach full rank");
  }

  // Rank-one trace updates on P = (A_1^T A_1)^{-1}.
  Matrix P = gram.ldlt().solve(Matrix::Identity(n, n));
  double current = out.trajectory.back();
  while (static_cast<int>(out.indices.size()) < k) {
    int best = -1;
    double bestDrop = -1.0;
    for (int j = 0; j < m; ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      const Vector a = A.row(j).transpose();
      const Vector Pa = P * a;
      const double drop = Pa.squaredNorm() / (1.0 + a.dot(Pa));
      if (drop > bestDrop) {
        bestDrop = drop;
        best = j;
      }
    }
    const Vector a = A.row(best).transpose();
    const Vector Pa = P * a;
    P -= Pa * Pa.transpose() / (1.0 + a.dot(Pa));
    current -= bestDrop;
    taken[static_cast<std::size_t>(best)] = true;
    out.indices.push_back(best);
    out.trajectory.push_back(current);
  }
  return out;
}

SelectionResult fp_remove(const SensorNetwork& network, int k) {
  check_k(network, k);
  const Matrix& A = network.A();
  const int m = network.m();
  const int n = network.n();
  SelectionResult out;
  out.method = SelectionMethod::FramePotentialRemove;
  std::vector<int> remaining(static_cast<std::size_t>(m));
  std::iota(remaining.begin(), remaining.end(), 0);
  Matrix gram = A.transpose() * A;
  double potential = gram.squaredNorm();

  while (static_cast<int>(remaining.size()) > k) {
    const Eigen::LDLT<Matrix> ldlt(gram);
    std::size_t bestSlot = remaining.size();
    double bestPotential = kInf;
    for (std::size_t slot = 0; slot < remaining.size(); ++slot) {
      const Vector a = A.row(remaining[slot]).transpose();
      // Removing a keeps rank n iff its leverage a^T G^{-1} a is below one.
      if (a.dot(ldlt.solve(a)) >= 1.0 - 1e-9) continue;
      const double after =
          potential - 2.0 * a.dot(gram * a) + a.squaredNorm() * a.squaredNorm();
      if (bestSlot == remaining.size() ||
          (after < bestPotential && !nearly_equal(after, bestPotential))) {
        bestPotential = after;
        bestSlot = slot;
      }
    }
    if (bestSlot == remaining.size()) {
      throw Error(ErrorKind::RankDeficient, "no removal keeps the frame full rank");
    }
    const Vector a = A.row(remaining[bestSlot]).transpose();
    gram -= a * a.transpose();
    potential = bestPotential;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(bestSlot));
    out.trajectory.push_back(potential);
  }
  out.indices = std::move(remaining);
  (void)n;
  return out;
}

SelectionResult random_select(const SensorNetwork& network, int k,
                              std::uint64_t seed) {
  if (k < 1 || k > network.m()) {
    throw Error(ErrorKind::DomainError, "random selection needs 1 <= k <= m");
  }
  std::mt19937_64 rng(seed);
  SelectionResult out;
  out.method = SelectionMethod::Random;
  out.indices = sample_subset(network.m(), k, rng);
  double value = kInf;
  try {
    value = mse(select_rows(network.A(), out.indices));
  } catch (const Error&) {
  }
  out.trajectory.push_back(value);
  return out;
}

SelectionResult exhaustive_min_sensors(const SensorNetwork& network,
                                       const AccuracySpec& accuracy) {
  const int m = network.m();
  const int n = network.n();
  if (m > kExhaustiveLimit) {
    throw Error(ErrorKind::TooLarge, "exhaustive search is limited to m <= " +
                                         std::to_string(kExhaustiveLimit));
  }
  const Matrix& A = network.A();
  const bool mseMode = accuracy.criterion == Criterion::Mse;
  const double full = criterion_of_gram(A.transpose() * A, accuracy.criterion);
  if (!accuracy.satisfiedBy(full)) {
    throw Error(ErrorKind::Infeasible, "even the full network misses the target");
  }
  std::vector<Matrix> outer(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    outer[static_cast<std::size_t>(i)] = A.row(i).transpose() * A.row(i);
  }
  auto better = [&](double a, double b) { return mseMode ? a < b : a > b; };

  SelectionResult out;
  out.method = SelectionMethod::Exhaustive;
  for (int size = n; size <= m; ++size) {
    std::vector<int> combo(static_cast<std::size_t>(size));
    std::iota(combo.begin(), combo.end(), 0);
    std::vector<int> bestFeasible;
    double bestFeasibleValue = mseMode ? kInf : -kInf;
    double bestValue = mseMode ? kInf : -kInf;
    for (;;) {
      Matrix gram = Matrix::Zero(n, n);
      for (int i : combo) gram += outer[static_cast<std::size_t>(i)];
      try {
        const double value = criterion_of_gram(gram, accuracy.criterion);
        if (better(value, bestValue)) bestValue = value;
        if (accuracy.satisfiedBy(value) &&
            (bestFeasible.empty() || better(value, bestFeasibleValue))) {
          bestFeasible = combo;
          bestFeasibleValue = value;
        }
      } catch (const Error&) {
      }
      // next combination in lexicographic order
      int pos = size - 1;
      while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == m - size + pos) --pos;
      if (pos < 0) break;
      ++combo[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < size; ++j) {
        combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
    out.trajectory.push_back(bestValue);
    if (!bestFeasible.empty()) {
      out.indices = std::move(bestFeasible);
      return out;
    }
  }
  throw Error(ErrorKind::Infeasible, "no subset meets the target");
}

}  // namespace sensorsched
