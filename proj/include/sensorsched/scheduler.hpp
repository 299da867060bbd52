#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sensorsched/netmodel.hpp"
#include "sensorsched/solver.hpp"

namespace sensorsched {

/// State of the reweighted-l1 outer loop between two relaxed solves.
struct Irl1State {
  Matrix Z;
  Matrix Zprev;
  /// Raw output of the last relaxed solve, before snapping to K / N.
  Matrix Zrelaxed;
  Matrix weights;
  EntrySet K;  // pinned to one
  EntrySet N;  // pinned to zero
  double epsilon = 1e-3;
  int sinceConverge = 0;
  int outerIter = 0;
  int roundingEvents = 0;
  bool terminal = false;

  // Summary of the most recent step, for traces and tests.
  double lastChange = 0.0;
  bool lastConverged = false;
  std::optional<Entry> lastRounded;

  static Irl1State initial(int m, int T, double epsilon = 1e-3);

  int sensors() const { return static_cast<int>(Z.rows()); }
  int instants() const { return static_cast<int>(Z.cols()); }
  bool complete() const;
  int freeCount() const;
};

/// Relaxed solve used by one outer step: (weights, K, N) -> fractional Z.
using RelaxedSolver =
    std::function<Matrix(const Matrix& weights, const EntrySet& K, const EntrySet& N)>;

/// Steps per convergence window before a forced rounding.
inline constexpr int kConvergenceWindow = 20;

/// One outer iteration: snapshot, reweight, solve, grow K / N, round one
/// entry when the iteration has settled (or the window ran out), and flag
/// termination once every entry is pinned.
Irl1State schedule_step(Irl1State state, const RelaxedSolver& solveRelaxed);

RelaxedSolver make_relaxed_solver(std::shared_ptr<const SensorNetwork> network,
                                  int T, AccuracySpec accuracy,
                                  EnergyModel energy, SolverTolerances tolerances,
                                  std::vector<int> coverageExclusions = {});

struct InstantReport {
  int active = 0;
  double mse = 0.0;  // +inf when the selection is rank deficient
  double wce = 0.0;  // +inf likewise
  double vce = 0.0;  // -inf likewise
  /// n^2 / ||A_t||_F^2, valid for every selection.
  double mseLowerBound = 0.0;
  bool meetsAccuracy = false;
};

struct PerformanceReport {
  Criterion criterion = Criterion::Mse;
  double gamma0 = 0.0;
  double threshold = 0.0;
  std::vector<InstantReport> instants;
  Vector activations;  // per sensor, sum over t
  double totalActivations = 0.0;
  double maxActivations = 0.0;
  Vector sensingEnergy;  // diag(s) Z 1
  Vector totalEnergy;    // (diag(s) + C) Z 1
  Vector excess;         // max(totalEnergy - e0, 0)
  std::vector<std::string> violations;
  bool feasible = false;

  double worstMse() const;
};

/// Post-hoc audit of a schedule against the accuracy target and coverage
/// (coverage only when T > 1). Non-binary entries are reported as violations.
PerformanceReport verify_schedule(const SensorNetwork& network, const Matrix& Z,
                                  const AccuracySpec& accuracy,
                                  const std::vector<int>& coverageExclusions = {});

struct ScheduleOptions {
  double epsilon = 1e-3;
  SolverTolerances tolerances;
  std::vector<int> coverageExclusions;
  /// Defaults to 50 m T.
  std::optional<int> maxOuterIter;
  /// JSON-lines record per outer iteration when set.
  std::ostream* trace = nullptr;
};

struct ScheduleResult {
  ScheduleTable Z;
  PerformanceReport perInstant;
  int outerIterations = 0;
  int roundingEvents = 0;
  /// Entries promoted after termination to restore binary feasibility.
  int repairEvents = 0;
  bool feasible = false;
};

ScheduleResult schedule(std::shared_ptr<const SensorNetwork> network, int T,
                        const AccuracySpec& accuracy, const EnergyModel& energy,
                        const ScheduleOptions& options = {});

/// Same loop with an injected relaxed solver (tests, alternative backends).
ScheduleResult schedule_with(const SensorNetwork& network, int T,
                             const AccuracySpec& accuracy,
                             const RelaxedSolver& solveRelaxed,
                             const ScheduleOptions& options = {});

}  // namespace sensorsched
