#pragma once

#include <compare>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "sensorsched/netmodel.hpp"

namespace sensorsched {

/// Position (sensor i, instant t) in a schedule table. Ordered by (t, i).
struct Entry {
  int t = 0;
  int i = 0;
  auto operator<=>(const Entry&) const = default;
};

using EntrySet = std::set<Entry>;

struct SolverTolerances {
  double constraintViol = 1e-6;
  double kktGap = 1e-6;
  int maxIter = 3000;
};

/// One relaxed scheduling program: weighted l1 objective plus the energy
/// regulariser, per-instant accuracy constraints, coverage and the box,
/// with the entries in fixedOne / fixedZero pinned.
struct SolverProblem {
  std::shared_ptr<const SensorNetwork> network;
  int T = 1;
  Matrix weights;
  AccuracySpec accuracy;
  EnergyModel energy;
  EntrySet fixedOne;
  EntrySet fixedZero;
  /// Sensors left out of the "selected at least once" constraint.
  std::vector<int> coverageExclusions;
  SolverTolerances tolerances;

  /// Coverage applies across instants, so only when T > 1.
  bool coverageActive() const { return T > 1; }
  void validate() const;
};

struct ConstraintResiduals {
  double accuracy = 0.0;
  double coverage = 0.0;
  double box = 0.0;
  double energy = 0.0;
  double fixed = 0.0;

  double max() const;
};

struct StageRecord {
  double barrierParameter = 0.0;
  double objective = 0.0;
  double gap = 0.0;
  int newtonSteps = 0;
};

struct SolverSolution {
  ScheduleTable Z;
  /// Energy excess (explicit mode); zero length in implicit mode.
  Vector e;
  double objective = 0.0;
  /// Epigraph variable for max / l-inf / l2 terms when one was used.
  std::optional<double> epigraph;
  ConstraintResiduals constraintResiduals;
  int iterations = 0;
  bool converged = false;
  double dualityGap = 0.0;
  std::vector<StageRecord> stages;
};

/// Dispatches on problem.energy.mode. Throws Infeasible when no strictly
/// feasible start exists, RankDeficient for singular networks and
/// DomainError for VCE with gamma0 <= 0. Running out of Newton iterations
/// returns the last iterate with converged = false.
SolverSolution solve(const SolverProblem& problem, std::ostream* trace = nullptr);
SolverSolution solve_implicit(const SolverProblem& problem,
                              std::ostream* trace = nullptr);
SolverSolution solve_explicit(const SolverProblem& problem,
                              std::ostream* trace = nullptr);

/// Accuracy constraint value at fractional z and its gradient in z.
/// MSE: tr(M^{-1}) and -||M^{-1} a_i||^2. VCE: log det M and a_i^T M^{-1} a_i.
std::pair<double, Vector> accuracy_value_and_gradient(const Matrix& A,
                                                      const Vector& z,
                                                      Criterion criterion);
std::pair<double, Vector> accuracy_value_and_gradient(
    const SensorNetwork& network, const Vector& z, Criterion criterion);

/// Per-sensor energy Q N with N = Z 1 and Q = diag(s) (+ C).
Vector energy_use(const SensorNetwork& network, const Matrix& Z,
                  bool includeComms);

}  // namespace sensorsched
