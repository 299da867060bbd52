#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "sensorsched/solver.hpp"

using namespace sensorsched;

namespace {

std::shared_ptr<const SensorNetwork> tight_network(int m, int n, std::uint64_t seed) {
  return std::make_shared<const SensorNetwork>(gen_tight(m, n, static_cast<double>(m), seed));
}

SolverProblem base_problem(std::shared_ptr<const SensorNetwork> net, int T, double rho) {
  SolverProblem p;
  p.network = net;
  p.T = T;
  p.weights = Matrix::Ones(net->m(), T);
  p.accuracy = AccuracySpec::make(*net, Criterion::Mse, rho);
  return p;
}

double column_mse(const SensorNetwork& net, const Matrix& Z, int t) {
  return oracle::mse_weighted(net.A(), Z.col(t));
}

}  // namespace

TEST_CASE("accuracy gradient at the identity") {
  const auto [v, g] = accuracy_value_and_gradient(Matrix::Identity(3, 3), Vector::Ones(3),
                                                  Criterion::Mse);
  CHECK(v == doctest::Approx(3.0));
  CHECK((g + Vector::Ones(3)).norm() < 1e-12);
  const auto [w, h] = accuracy_value_and_gradient(Matrix::Identity(3, 3), Vector::Ones(3),
                                                  Criterion::Vce);
  CHECK(w == doctest::Approx(0.0).epsilon(1e-15));
  CHECK((h - Vector::Ones(3)).norm() < 1e-12);
}

TEST_CASE("accuracy gradient matches central differences") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix A = gen_gaussian(8, 3, 1.0, static_cast<std::uint64_t>(trial));
    Vector z(8);
    for (int i = 0; i < 8; ++i) z(i) = unif(rng);
    for (Criterion c : {Criterion::Mse, Criterion::Vce}) {
      const Vector g = accuracy_value_and_gradient(A, z, c).second;
      for (int i = 0; i < 8; ++i) {
        Vector zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        const double fd = (accuracy_value_and_gradient(A, zp, c).first -
                           accuracy_value_and_gradient(A, zm, c).first) /
                          (2 * h);
        CHECK(std::abs(fd - g(i)) <= 1e-5 * std::max(1.0, std::abs(g(i))));
      }
    }
  }
}

TEST_CASE("relaxed single-instant solve matches an independent optimiser") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto net = tight_network(6, 2, seed);
    SolverProblem p = base_problem(net, 1, 2.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    for (int i = 0; i < 6; ++i) p.weights(i, 0) = unif(rng);
    const SolverSolution s = solve(p);
    CHECK(s.converged);
    CHECK(column_mse(*net, s.Z.Z(), 0) <= p.accuracy.threshold() * (1 + 1e-6));
    const double reference = oracle::relaxed_selection_objective(
        net->A(), p.weights.col(0), p.accuracy.threshold(), 20, static_cast<unsigned>(seed));
    CHECK(s.objective == doctest::Approx(reference).epsilon(1e-4));
    CHECK(s.constraintResiduals.max() <= 1e-6);
  }
}

TEST_CASE("rho near one forces the full network") {
  const auto net = tight_network(8, 3, 4);
  const SolverSolution s = solve(base_problem(net, 1, 1.0 + 1e-6));
  CHECK(s.Z.Z().minCoeff() > 0.99);
  SolverProblem exact = base_problem(net, 1, 1.0);
  CHECK_THROWS_AS(solve(exact), Error);
}

TEST_CASE("instants separate when lambda is zero") {
  const auto net = tight_network(8, 3, 5);
  const SolverSolution one = solve(base_problem(net, 1, 2.0));
  SolverProblem two = base_problem(net, 2, 2.0);
  // Exempt every sensor from coverage so the two columns are independent.
  for (int i = 0; i < 8; ++i) two.coverageExclusions.push_back(i);
  const SolverSolution both = solve(two);
  CHECK(both.objective == doctest::Approx(2.0 * one.objective).epsilon(1e-5));
}

TEST_CASE("fixed entries are honoured") {
  const auto net = tight_network(8, 3, 6);
  SolverProblem p = base_problem(net, 2, 3.0);
  p.fixedOne.insert({0, 2});
  p.fixedZero.insert({1, 2});
  p.fixedZero.insert({0, 5});
  const SolverSolution s = solve(p);
  CHECK(s.Z.Z()(2, 0) == 1.0);
  CHECK(s.Z.Z()(2, 1) == 0.0);
  CHECK(s.Z.Z()(5, 0) == 0.0);
  // Coverage: every sensor at least once across the two instants.
  for (int i = 0; i < 8; ++i) CHECK(s.Z.Z().row(i).sum() >= 1.0 - 1e-6);
  for (int t = 0; t < 2; ++t) {
    CHECK(column_mse(*net, s.Z.Z(), t) <= p.accuracy.threshold() * (1 + 1e-6));
  }
}

TEST_CASE("infeasible pins are reported") {
  const auto net = tight_network(6, 3, 7);
  SolverProblem p = base_problem(net, 1, 1.5);
  for (int i = 0; i < 3; ++i) p.fixedZero.insert({0, i});
  try {
    solve(p);
    FAIL("expected an infeasibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("implicit energy term spreads activations") {
  const auto net = tight_network(20, 4, 8);
  SolverProblem p = base_problem(net, 4, 3.0);
  const double flat = solve(p).Z.Z().rowwise().sum().maxCoeff();
  p.energy.lambda = 50.0;
  const SolverSolution s = solve(p);
  REQUIRE(s.epigraph.has_value());
  const double spread = s.Z.Z().rowwise().sum().maxCoeff();
  CHECK(spread <= flat + 1e-6);
  CHECK(*s.epigraph == doctest::Approx(spread).epsilon(1e-4));
}

TEST_CASE("explicit mode with a slack budget equals implicit mode without energy") {
  const auto base = tight_network(10, 3, 9);
  const SensorNetwork& b = *base;
  const auto net = std::make_shared<const SensorNetwork>(
      b.A(), b.s(), Vector::Constant(10, 1e6), Matrix::Zero(10, 10));
  SolverProblem implicit = base_problem(net, 2, 2.0);
  SolverProblem expl = implicit;
  expl.energy.mode = EnergyMode::Explicit;
  expl.energy.lambda = 10.0;
  expl.energy.penalty = Penalty::L2;
  const SolverSolution a = solve(implicit);
  const SolverSolution c = solve(expl);
  CHECK((a.Z.Z() - c.Z.Z()).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(c.e.maxCoeff() < 1e-4);
}

TEST_CASE("min-max excess approaches its bisection oracle") {
  // Diagonal energy costs: the excess level L is achievable iff the largest
  // admissible z_i = min(1, (e0_i + L) / s_i) still meets the accuracy target.
  const Matrix A = gen_tight(8, 2, 8.0, 10);
  Vector e0 = Vector::Zero(8);
  for (int i = 0; i < 8; ++i) e0(i) = 0.1 * (i % 3);
  const Vector s = A.rowwise().squaredNorm();
  const auto net = std::make_shared<const SensorNetwork>(A, s, e0, Matrix::Zero(8, 8));
  const double thr = 2.0 * mse(A);
  auto feasible = [&](double L) {
    Vector z(8);
    for (int i = 0; i < 8; ++i) z(i) = std::clamp((e0(i) + L) / s(i), 0.0, 1.0);
    return oracle::mse_weighted(A, z) <= thr;
  };
  double lo = 0.0, hi = s.maxCoeff();
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }

  SolverProblem p;
  p.network = net;
  p.T = 1;
  p.weights = Matrix::Ones(8, 1);
  p.accuracy = AccuracySpec::make(*net, Criterion::Mse, 2.0);
  p.energy.mode = EnergyMode::Explicit;
  p.energy.penalty = Penalty::Linf;
  p.energy.lambda = 1e5;
  const SolverSolution sol = solve(p);
  CHECK(sol.e.maxCoeff() == doctest::Approx(hi).epsilon(1e-3));
}

TEST_CASE("solver trace is JSON lines per barrier stage") {
  const auto net = tight_network(8, 3, 11);
  std::stringstream trace;
  const SolverSolution s = solve(base_problem(net, 1, 2.0), &trace);
  std::string line;
  int lines = 0;
  while (std::getline(trace, line)) {
    CHECK(nlohmann::json::parse(line).is_object());
    ++lines;
  }
  CHECK(lines == static_cast<int>(s.stages.size()));
  CHECK(s.dualityGap <= 1e-6 * std::max(1.0, std::abs(s.objective)));
}

TEST_CASE("problem validation") {
  const auto net = tight_network(6, 2, 12);
  SolverProblem p = base_problem(net, 1, 2.0);
  p.weights = Matrix::Ones(5, 1);
  CHECK_THROWS_AS(solve(p), Error);
  p = base_problem(net, 1, 2.0);
  p.weights(0, 0) = -1.0;
  CHECK_THROWS_AS(solve(p), Error);
  p = base_problem(net, 1, 2.0);
  p.fixedOne.insert({0, 1});
  p.fixedZero.insert({0, 1});
  CHECK_THROWS_AS(solve(p), Error);
}

TEST_CASE("energy use accounting") {
  const Matrix A = Matrix::Identity(3, 3);
  const CostModel star = default_costs(A, star_topology(3), 0.5);
  const SensorNetwork net(A, star.s, Vector::Zero(3), star.C, star_topology(3));
  Matrix Z(3, 2);
  Z << 1, 1, 0, 1, 1, 0;
  const Vector sensing = energy_use(net, Z, false);
  const Vector total = energy_use(net, Z, true);
  CHECK(sensing(0) == 2.0);
  CHECK(sensing(1) == 1.0);
  CHECK(total(0) == 3.0);
  CHECK(total(2) == 1.5);
}
