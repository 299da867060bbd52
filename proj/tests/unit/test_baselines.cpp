#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "sensorsched/baselines.hpp"

using namespace sensorsched;

namespace {

void check_valid(const SelectionResult& r, int m, std::size_t k) {
  CHECK(r.indices.size() == k);
  std::set<int> unique(r.indices.begin(), r.indices.end());
  CHECK(unique.size() == r.indices.size());
  for (int i : r.indices) {
    CHECK(i >= 0);
    CHECK(i < m);
  }
}

}  // namespace

TEST_CASE("greedy picks the scaled rows") {
  Matrix A = Matrix::Zero(6, 3);
  for (int i = 0; i < 3; ++i) {
    A(i, i) = 1.0;
    A(i + 3, i) = 2.0;
  }
  const SensorNetwork net(A);
  SelectionResult r = greedy_add_mse(net, 3);
  std::vector<int> picked = r.indices;
  std::sort(picked.begin(), picked.end());
  CHECK(picked == std::vector<int>{3, 4, 5});

  double best = std::numeric_limits<double>::infinity();
  oracle::for_each_subset(6, 3, [&](const std::vector<int>& s) {
    best = std::min(best, oracle::mse_by_inverse(oracle::rows_of(A, s)));
  });
  CHECK(r.trajectory.back() == doctest::Approx(best));
  CHECK(std::isinf(r.trajectory.front()));
}

TEST_CASE("greedy matches a brute-force greedy once invertible") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix A = gen_gaussian(15, 3, 1.0, seed);
    const SensorNetwork net(A);
    const SelectionResult r = greedy_add_mse(net, 10);
    check_valid(r, 15, 10);
    // From the first invertible prefix on, each pick minimises the MSE.
    for (std::size_t step = 3; step < r.indices.size(); ++step) {
      std::vector<int> prefix(r.indices.begin(), r.indices.begin() + step);
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < 15; ++j) {
        if (std::find(prefix.begin(), prefix.end(), j) != prefix.end()) continue;
        auto trial = prefix;
        trial.push_back(j);
        best = std::min(best, oracle::mse_by_inverse(oracle::rows_of(A, trial)));
      }
      auto chosen = prefix;
      chosen.push_back(r.indices[step]);
      CHECK(oracle::mse_by_inverse(oracle::rows_of(A, chosen)) ==
            doctest::Approx(best).epsilon(1e-9));
      CHECK(r.trajectory[step] ==
            doctest::Approx(oracle::mse_by_inverse(oracle::rows_of(A, chosen))).epsilon(1e-9));
      CHECK(r.trajectory[step] < r.trajectory[step - 1]);
    }
  }
}

TEST_CASE("greedy at k = m selects everything") {
  const Matrix A = gen_tight(20, 4, 10.0, 3);
  const SelectionResult r = greedy_add_mse(SensorNetwork(A), 20);
  check_valid(r, 20, 20);
  CHECK(r.trajectory.back() == doctest::Approx(0.4).epsilon(1e-9));
  CHECK_THROWS_AS(greedy_add_mse(SensorNetwork(A), 3), Error);
}

TEST_CASE("greedy ratio against the exhaustive optimum") {
  const Matrix A = gen_gaussian(10, 3, 1.0, 4);
  const SelectionResult r = greedy_add_mse(SensorNetwork(A), 4);
  double best = std::numeric_limits<double>::infinity();
  oracle::for_each_subset(10, 4, [&](const std::vector<int>& s) {
    best = std::min(best, oracle::mse_by_inverse(oracle::rows_of(A, s)));
  });
  const double ratio = r.trajectory.back() / best;
  MESSAGE("greedy / optimum MSE ratio at k = 4: " << ratio);
  CHECK(ratio >= 1.0 - 1e-12);
}

TEST_CASE("frame potential removal follows the per-step optimum") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix A = gen_gaussian(10, 3, 1.0, seed);
    const SelectionResult r = fp_remove(SensorNetwork(A), 5);
    check_valid(r, 10, 5);
    CHECK(std::is_sorted(r.indices.begin(), r.indices.end()));
    // Replay: at each step the chosen remainder has the smallest FP.
    std::vector<int> remaining(10);
    std::iota(remaining.begin(), remaining.end(), 0);
    for (std::size_t step = 0; step < r.trajectory.size(); ++step) {
      double best = std::numeric_limits<double>::infinity();
      std::vector<int> bestSet;
      for (std::size_t drop = 0; drop < remaining.size(); ++drop) {
        auto trial = remaining;
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(drop));
        const Matrix B = oracle::rows_of(A, trial);
        if (Eigen::FullPivLU<Matrix>(B).rank() < 3) continue;
        const double fp = (B.transpose() * B).squaredNorm();
        if (fp < best) {
          best = fp;
          bestSet = trial;
        }
      }
      CHECK(r.trajectory[step] == doctest::Approx(best).epsilon(1e-9));
      remaining = bestSet;
    }
    CHECK(remaining == r.indices);
  }
}

TEST_CASE("frame potential removal drops a duplicate first") {
  // A heavy repeated row dominates the potential, so one copy goes first.
  Matrix A = 0.1 * gen_gaussian(6, 2, 1.0, 9);
  A.row(2) << 10.0, 0.0;
  A.row(5) = A.row(2);
  const SelectionResult r = fp_remove(SensorNetwork(A), 5);
  CHECK((std::find(r.indices.begin(), r.indices.end(), 2) == r.indices.end() ||
         std::find(r.indices.begin(), r.indices.end(), 5) == r.indices.end()));
  const SelectionResult all = fp_remove(SensorNetwork(A), 6);
  CHECK(all.indices.size() == 6);
  CHECK(all.trajectory.empty());
}

TEST_CASE("random selection is seeded") {
  const SensorNetwork net(gen_tight(30, 4, 30.0, 2));
  const SelectionResult a = random_select(net, 10, 5);
  check_valid(a, 30, 10);
  CHECK(a.indices == random_select(net, 10, 5).indices);
  CHECK(random_select(net, 30, 1).indices.size() == 30);
}

TEST_CASE("exhaustive minimum sensor sets") {
  const AccuracySpec three{Criterion::Mse, 1.0, 3.0};
  SelectionResult r = exhaustive_min_sensors(SensorNetwork(Matrix::Identity(3, 3)), three);
  CHECK(r.indices == std::vector<int>{0, 1, 2});

  Matrix stacked(6, 3);
  stacked << Matrix::Identity(3, 3), Matrix::Identity(3, 3);
  const SensorNetwork dup(stacked);
  const AccuracySpec dupSpec{Criterion::Mse, 2.0, 1.5};
  r = exhaustive_min_sensors(dup, dupSpec);
  CHECK(r.indices.size() == 3);
  std::set<int> coords;
  for (int i : r.indices) coords.insert(i % 3);
  CHECK(coords.size() == 3);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SensorNetwork net(gen_tight(8, 3, 8.0, seed));
    const AccuracySpec acc = AccuracySpec::make(net, Criterion::Mse, 2.0);
    const SelectionResult ex = exhaustive_min_sensors(net, acc);
    CHECK(static_cast<int>(ex.indices.size()) ==
          oracle::min_sensors_mse(net.A(), acc.threshold()));
    // No other method meets the target with fewer sensors.
    const SelectionResult g = greedy_add_mse(net, 8);
    std::size_t k = 0;
    while (k < g.trajectory.size() && !acc.satisfiedBy(g.trajectory[k])) ++k;
    CHECK(ex.indices.size() <= k + 1);
  }

  CHECK_THROWS_AS(exhaustive_min_sensors(SensorNetwork(gen_gaussian(23, 2, 1.0, 1)), three),
                  Error);
}
