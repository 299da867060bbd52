#include "sensorsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace sensorsched {

namespace {

void pin(Matrix& Z, const EntrySet& K, const EntrySet& N) {
  for (const Entry& e : K) Z(e.i, e.t) = 1.0;
  for (const Entry& e : N) Z(e.i, e.t) = 0.0;
}

bool pinned(const Irl1State& s, const Entry& e) {
  return s.K.count(e) > 0 || s.N.count(e) > 0;
}

void write_trace(std::ostream& out, const Irl1State& s) {
  nlohmann::json line{{"outer_iter", s.outerIter},
                      {"free", s.freeCount()},
                      {"K", s.K.size()},
                      {"N", s.N.size()},
                      {"change", s.lastChange},
                      {"converged", s.lastConverged},
                      {"since_converge", s.sinceConverge},
                      {"rounding_events", s.roundingEvents},
                      {"window_reset", "convergence_or_rounding"}};
  if (s.lastRounded) {
    line["rounded"] = {{"sensor", s.lastRounded->i}, {"instant", s.lastRounded->t}};
  } else {
    line["rounded"] = nullptr;
  }
  out << line.dump() << '\n';
}

}  // namespace

Irl1State Irl1State::initial(int m, int T, double epsilon) {
  if (m < 1 || T < 1 || !(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorKind::Validation, "IRL1 state needs m, T >= 1 and 0 < eps < 1/2");
  }
  Irl1State s;
  s.Z = Matrix::Zero(m, T);
  s.Zprev = s.Z;
  s.Zrelaxed = s.Z;
  s.weights = Matrix::Constant(m, T, 1.0);
  s.epsilon = epsilon;
  return s;
}

bool Irl1State::complete() const {
  return static_cast<long>(K.size() + N.size()) == static_cast<long>(Z.size());
}

int Irl1State::freeCount() const {
  return static_cast<int>(Z.size()) - static_cast<int>(K.size() + N.size());
}

Irl1State schedule_step(Irl1State state, const RelaxedSolver& solveRelaxed) {
  state.lastRounded.reset();
  state.lastConverged = false;
  if (state.complete()) {
    state.terminal = true;
    return state;
  }
  const double eps = state.epsilon;
  state.Zprev = state.Z;
  state.weights = (state.Zprev.array() + eps).inverse().matrix();

  Matrix Z = solveRelaxed(state.weights, state.K, state.N);
  if (Z.rows() != state.Z.rows() || Z.cols() != state.Z.cols()) {
    throw Error(ErrorKind::Validation, "relaxed solver returned a wrongly sized table");
  }
  state.Zrelaxed = Z;
  pin(Z, state.K, state.N);

  for (int t = 0; t < Z.cols(); ++t) {
    for (int i = 0; i < Z.rows(); ++i) {
      const Entry e{t, i};
      if (pinned(state, e)) continue;
      if (Z(i, t) <= eps) {
        state.N.insert(e);
      } else if (Z(i, t) >= 1.0 - eps) {
        state.K.insert(e);
      }
    }
  }
  pin(Z, state.K, state.N);

  state.lastChange = (Z - state.Zprev).squaredNorm();
  state.lastConverged = state.lastChange <= eps;
  ++state.sinceConverge;
  if (!state.complete() &&
      (state.lastConverged || state.sinceConverge >= kConvergenceWindow)) {
    // Largest unpinned entry, lowest (t, i) on ties.
    std::optional<Entry> best;
    double bestValue = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < Z.cols(); ++t) {
      for (int i = 0; i < Z.rows(); ++i) {
        const Entry e{t, i};
        if (pinned(state, e)) continue;
        if (Z(i, t) > bestValue) {
          bestValue = Z(i, t);
          best = e;
        }
      }
    }
    state.K.insert(*best);
    Z(best->i, best->t) = 1.0;
    state.lastRounded = best;
    ++state.roundingEvents;
    state.sinceConverge = 0;
  } else if (state.lastConverged) {
    state.sinceConverge = 0;
  }
  state.Z = std::move(Z);
  ++state.outerIter;
  state.terminal = state.complete();
  return state;
}

RelaxedSolver make_relaxed_solver(std::shared_ptr<const SensorNetwork> network,
                                  int T, AccuracySpec accuracy,
                                  EnergyModel energy, SolverTolerances tolerances,
                                  std::vector<int> coverageExclusions) {
  return [=](const Matrix& weights, const EntrySet& K, const EntrySet& N) {
    SolverProblem problem;
    problem.network = network;
    problem.T = T;
    problem.weights = weights;
    problem.accuracy = accuracy;
    problem.energy = energy;
    problem.fixedOne = K;
    problem.fixedZero = N;
    problem.coverageExclusions = coverageExclusions;
    problem.tolerances = tolerances;
    return Matrix(solve(problem).Z.Z());
  };
}

double PerformanceReport::worstMse() const {
  double worst = 0.0;
  for (const auto& r : instants) worst = std::max(worst, r.mse);
  return worst;
}

PerformanceReport verify_schedule(const SensorNetwork& network, const Matrix& Z,
                                  const AccuracySpec& accuracy,
                                  const std::vector<int>& coverageExclusions) {
  if (Z.rows() != network.m() || Z.cols() < 1) {
    throw Error(ErrorKind::Validation, "schedule must have m rows and T >= 1 columns");
  }
  const double inf = std::numeric_limits<double>::infinity();
  PerformanceReport report;
  report.criterion = accuracy.criterion;
  report.gamma0 = accuracy.gamma0;
  report.threshold = accuracy.threshold();
  const int n = network.n();
  const int T = static_cast<int>(Z.cols());

  for (Eigen::Index k = 0; k < Z.size(); ++k) {
    const double v = Z.data()[k];
    if (v != 0.0 && v != 1.0) {
      report.violations.push_back("schedule entries are not binary");
      break;
    }
  }

  bool accuracyOk = true;
  for (int t = 0; t < T; ++t) {
    InstantReport r;
    r.active = static_cast<int>((Z.col(t).array() > 0.0).count());
    const Matrix M = restrict(network, Z.col(t));
    const double energy = M.trace();
    r.mseLowerBound = energy > 0.0 ? static_cast<double>(n) * n / energy : inf;
    try {
      const Vector lam = spectrum_of(M);
      r.mse = lam.cwiseInverse().sum();
      r.wce = 1.0 / lam(0);
      r.vce = lam.array().log().sum();
      r.meetsAccuracy = accuracy.satisfiedBy(
          accuracy.criterion == Criterion::Mse ? r.mse : r.vce);
    } catch (const Error&) {
      r.mse = inf;
      r.wce = inf;
      r.vce = -inf;
      r.meetsAccuracy = false;
      report.violations.push_back("instant " + std::to_string(t) +
                                  ": selection is rank deficient");
    }
    if (!r.meetsAccuracy) {
      accuracyOk = false;
      if (std::isfinite(r.mse)) {
        report.violations.push_back("instant " + std::to_string(t) +
                                    ": accuracy threshold missed");
      }
    }
    report.instants.push_back(r);
  }

  report.activations = Z.rowwise().sum();
  report.totalActivations = report.activations.sum();
  report.maxActivations = report.activations.maxCoeff();
  report.sensingEnergy = energy_use(network, Z, false);
  report.totalEnergy = energy_use(network, Z, true);
  report.excess = (report.totalEnergy - network.e0()).cwiseMax(0.0);

  bool coverageOk = true;
  if (T > 1) {
    std::vector<bool> excluded(static_cast<std::size_t>(network.m()), false);
    for (int i : coverageExclusions) {
      if (i >= 0 && i < network.m()) excluded[static_cast<std::size_t>(i)] = true;
    }
    for (int i = 0; i < network.m(); ++i) {
      if (!excluded[static_cast<std::size_t>(i)] && report.activations(i) < 1.0) {
        coverageOk = false;
        report.violations.push_back("sensor " + std::to_string(i) +
                                    " is never activated");
      }
    }
  }
  report.feasible = accuracyOk && coverageOk;
  return report;
}

ScheduleResult schedule_with(const SensorNetwork& network, int T,
                             const AccuracySpec& accuracy,
                             const RelaxedSolver& solveRelaxed,
                             const ScheduleOptions& options) {
  const int m = network.m();
  const int cap = options.maxOuterIter.value_or(50 * m * T);
  Irl1State state = Irl1State::initial(m, T, options.epsilon);
  while (!state.terminal) {
    if (state.outerIter >= cap) {
      throw Error(ErrorKind::MaxOuterIterExceeded,
                  "reweighted l1 loop did not finish within " +
                      std::to_string(cap) + " outer iterations");
    }
    state = schedule_step(std::move(state), solveRelaxed);
    if (options.trace) write_trace(*options.trace, state);
  }

  // Pinning small entries to zero can break a column; promote the largest
  // relaxed entry of each failing column until every column passes.
  Matrix Z = state.Z;
  int repairs = 0;
  PerformanceReport report =
      verify_schedule(network, Z, accuracy, options.coverageExclusions);
  while (!report.feasible) {
    bool promoted = false;
    for (int t = 0; t < T; ++t) {
      if (report.instants[static_cast<std::size_t>(t)].meetsAccuracy) continue;
      int best = -1;
      for (int i = 0; i < m; ++i) {
        if (Z(i, t) != 0.0) continue;
        if (best < 0 || state.Zrelaxed(i, t) > state.Zrelaxed(best, t)) best = i;
      }
      if (best >= 0) {
        Z(best, t) = 1.0;
        ++repairs;
        promoted = true;
      }
    }
    if (!promoted) break;
    report = verify_schedule(network, Z, accuracy, options.coverageExclusions);
  }
  if (!report.feasible) {
    throw Error(ErrorKind::Infeasible, "binary schedule misses the accuracy target");
  }

  ScheduleResult result;
  result.Z = ScheduleTable(Z);
  result.perInstant = std::move(report);
  result.outerIterations = state.outerIter;
  result.roundingEvents = state.roundingEvents;
  result.repairEvents = repairs;
  result.feasible = result.perInstant.feasible;
  return result;
}

ScheduleResult schedule(std::shared_ptr<const SensorNetwork> network, int T,
                        const AccuracySpec& accuracy, const EnergyModel& energy,
                        const ScheduleOptions& options) {
  if (!network) throw Error(ErrorKind::Validation, "network is missing");
  energy.validate(network->m());
  const RelaxedSolver solver =
      make_relaxed_solver(network, T, accuracy, energy, options.tolerances,
                          options.coverageExclusions);
  return schedule_with(*network, T, accuracy, solver, options);
}

}  // namespace sensorsched
