#include <doctest.h>

#include <memory>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "sensorsched/baselines.hpp"
#include "sensorsched/scheduler.hpp"

using namespace sensorsched;

namespace {

/// Relaxed solver stand-in returning a fixed table and recording its inputs.
struct MockSolver {
  Matrix table;
  std::shared_ptr<std::vector<Matrix>> seenWeights = std::make_shared<std::vector<Matrix>>();

  Matrix operator()(const Matrix& w, const EntrySet&, const EntrySet&) const {
    seenWeights->push_back(w);
    return table;
  }
};

}  // namespace

TEST_CASE("fresh state has uniform weights") {
  MockSolver mock{Matrix::Constant(3, 2, 0.5)};
  const Irl1State s = schedule_step(Irl1State::initial(3, 2), mock);
  REQUIRE(mock.seenWeights->size() == 1);
  const Matrix& w = mock.seenWeights->front();
  CHECK(w.minCoeff() == doctest::Approx(1000.0));
  CHECK(w.maxCoeff() == doctest::Approx(1000.0));
  CHECK(s.outerIter == 1);
}

TEST_CASE("complete state is returned unchanged and terminal") {
  Irl1State s = Irl1State::initial(2, 1);
  s.K.insert({0, 0});
  s.N.insert({0, 1});
  s.Z(0, 0) = 1.0;
  MockSolver mock{Matrix::Constant(2, 1, 0.3)};
  const Irl1State out = schedule_step(s, mock);
  CHECK(out.terminal);
  CHECK(out.Z == s.Z);
  CHECK(out.outerIter == s.outerIter);
  CHECK(mock.seenWeights->empty());
}

TEST_CASE("entries near zero and one are pinned") {
  Matrix table(3, 1);
  table << 0.9995, 0.0004, 0.5;
  MockSolver mock{table};
  const Irl1State s = schedule_step(Irl1State::initial(3, 1), mock);
  CHECK(s.K.count({0, 0}) == 1);
  CHECK(s.N.count({0, 1}) == 1);
  CHECK(s.Z(0, 0) == 1.0);
  CHECK(s.Z(1, 0) == 0.0);
}

TEST_CASE("a converged non-binary step rounds exactly one entry") {
  Matrix table(3, 2);
  table << 0.5, 0.7, 0.7, 0.2, 0.4, 0.3;
  Irl1State s = Irl1State::initial(3, 2);
  s.Z = table;  // Z equals Zprev after the solve: converged
  MockSolver mock{table};
  const Irl1State out = schedule_step(s, mock);
  CHECK(out.lastConverged);
  CHECK(out.K.size() == 1);
  REQUIRE(out.lastRounded.has_value());
  // 0.7 appears at (t=0, i=1) and (t=1, i=0); lowest (t, i) wins.
  CHECK(out.lastRounded->t == 0);
  CHECK(out.lastRounded->i == 1);
  CHECK(out.Z(1, 0) == 1.0);
  CHECK(out.sinceConverge == 0);
  CHECK(out.roundingEvents == 1);
}

TEST_CASE("window forces a rounding without convergence") {
  // Alternate between two tables so the iteration never settles.
  Matrix a = Matrix::Constant(2, 1, 0.3);
  Matrix b = Matrix::Constant(2, 1, 0.6);
  b(1, 0) = 0.65;
  auto flip = std::make_shared<int>(0);
  RelaxedSolver solver = [&, flip](const Matrix&, const EntrySet&, const EntrySet&) {
    return (*flip)++ % 2 == 0 ? a : b;
  };
  Irl1State s = Irl1State::initial(2, 1);
  int steps = 0;
  while (s.roundingEvents == 0) {
    s = schedule_step(s, solver);
    ++steps;
    REQUIRE(steps <= kConvergenceWindow);
  }
  CHECK(steps == kConvergenceWindow);
  CHECK(s.sinceConverge == 0);
}

TEST_CASE("mock-driven loop terminates within the outer cap") {
  const SensorNetwork net(gen_tight(6, 2, 6.0, 1));
  const AccuracySpec acc = AccuracySpec::make(net, Criterion::Mse, 2.0);
  Matrix table(6, 1);
  table << 0.9, 0.8, 0.7, 0.2, 0.1, 0.05;
  MockSolver mock{table};
  ScheduleOptions opts;
  std::stringstream trace;
  opts.trace = &trace;
  const ScheduleResult r = schedule_with(net, 1, acc, mock, opts);
  CHECK(r.Z.binary());
  CHECK(r.feasible);
  CHECK(r.outerIterations <= 50 * 6);
  std::string line;
  int lines = 0;
  while (std::getline(trace, line)) {
    CHECK(nlohmann::json::parse(line).contains("window_reset"));
    ++lines;
  }
  CHECK(lines == r.outerIterations);

  ScheduleOptions capped;
  capped.maxOuterIter = 1;
  Matrix half = Matrix::Constant(6, 1, 0.5);
  CHECK_THROWS_AS(schedule_with(net, 1, acc, MockSolver{half}, capped), Error);
}

TEST_CASE("verify_schedule reports per-instant metrics") {
  const SensorNetwork net(gen_tight(10, 3, 5.0, 2));
  const AccuracySpec acc = AccuracySpec::make(net, Criterion::Mse, 2.0);
  const PerformanceReport full = verify_schedule(net, Matrix::Ones(10, 3), acc);
  for (const auto& r : full.instants) CHECK(r.mse == doctest::Approx(3.0 / 5.0));
  CHECK(full.feasible);
  CHECK(full.totalActivations == 30.0);
  CHECK(full.activations.sum() == full.totalActivations);

  Matrix Z = Matrix::Ones(10, 2);
  Z.col(1).setZero();
  Z(0, 1) = 1.0;
  const PerformanceReport broken = verify_schedule(net, Z, acc);
  CHECK_FALSE(broken.feasible);
  CHECK(std::isinf(broken.instants[1].mse));
  CHECK_FALSE(broken.violations.empty());
}

TEST_CASE("rho near one selects everything") {
  const auto net = std::make_shared<const SensorNetwork>(gen_tight(8, 3, 8.0, 3));
  const AccuracySpec acc = AccuracySpec::make(*net, Criterion::Mse, 1.0 + 1e-6);
  const ScheduleResult r = schedule(net, 1, acc, EnergyModel{});
  CHECK(r.Z.Z().sum() == 8.0);
}

TEST_CASE("scheduler stays close to the exhaustive optimum") {
  int withinOne = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto net = std::make_shared<const SensorNetwork>(gen_tight(8, 3, 8.0, seed));
    const AccuracySpec acc = AccuracySpec::make(*net, Criterion::Mse, 2.0);
    const ScheduleResult r = schedule(net, 1, acc, EnergyModel{});
    const Matrix& Z = r.Z.Z();
    CHECK(oracle::mse_weighted(net->A(), Z.col(0)) <= acc.threshold() * (1 + 1e-12));
    const int oracleSize = oracle::min_sensors_mse(net->A(), acc.threshold());
    CHECK(static_cast<int>(exhaustive_min_sensors(*net, acc).indices.size()) == oracleSize);
    if (Z.sum() <= oracleSize + 1) ++withinOne;
  }
  CHECK(withinOne >= 4);
}

TEST_CASE("multi-instant schedule covers every sensor") {
  const auto net = std::make_shared<const SensorNetwork>(gen_tight(12, 3, 12.0, 4));
  const AccuracySpec acc = AccuracySpec::make(*net, Criterion::Mse, 3.0);
  EnergyModel energy;
  energy.lambda = 1.0;
  const ScheduleResult r = schedule(net, 3, acc, energy);
  CHECK(r.feasible);
  CHECK(r.Z.binary());
  for (int i = 0; i < 12; ++i) CHECK(r.Z.Z().row(i).sum() >= 1.0);
  CHECK(r.perInstant.activations.sum() == r.perInstant.totalActivations);
}
