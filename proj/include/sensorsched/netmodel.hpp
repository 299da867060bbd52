#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sensorsched/errors.hpp"

namespace sensorsched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative eigenvalue floor below which a Gram matrix counts as singular.
inline constexpr double kRankFloor = 1e-12;

/// Single-path routing tree towards the master node.
///
/// parent[i] is the next hop of sensor i, or -1 when sensor i talks to the
/// master directly. hopCost[i], when present, is the cost of one transmission
/// from sensor i to its parent.
struct Topology {
  std::vector<int> parent;
  std::vector<double> hopCost;

  /// Sensor itself followed by every relay on its way to the master.
  std::vector<int> route(int sensor) const;
  int depth(int sensor) const;
  /// Throws Validation on out-of-range parents, cycles or bad hop costs.
  void validate(int m) const;
};

Topology star_topology(int m);

/// Random tree in the spirit of a multi-hop field deployment: nodes attach to
/// an earlier node with spare fan-out whose depth is below maxDepth, or to the
/// master when none is left.
Topology random_tree_topology(int m, int fanout, int maxDepth,
                              std::uint64_t seed);

/// Measurement matrix plus the per-sensor cost data.
///
/// Row i of A is the measurement vector of sensor i. C(i, j) is the
/// communication cost charged on row i of the energy constraint for sensor j
/// activations; for routed networks row i lists the route of sensor i.
class SensorNetwork {
 public:
  /// Sensing costs default to squared row norms, budgets and comms to zero.
  explicit SensorNetwork(Matrix A);
  SensorNetwork(Matrix A, Vector s, Vector e0, Matrix C,
                std::optional<Topology> topology = std::nullopt);

  const Matrix& A() const { return A_; }
  const Vector& s() const { return s_; }
  const Vector& e0() const { return e0_; }
  const Matrix& C() const { return C_; }
  const std::optional<Topology>& topology() const { return topology_; }

  int m() const { return static_cast<int>(A_.rows()); }
  int n() const { return static_cast<int>(A_.cols()); }

  /// Rows whose topology says "direct link" must carry only C(i, i).
  bool directLinksConsistent() const;

 private:
  Matrix A_;
  Vector s_;
  Vector e0_;
  Matrix C_;
  std::optional<Topology> topology_;
};

/// m x T activation table, entries in [0, 1].
class ScheduleTable {
 public:
  ScheduleTable() = default;
  explicit ScheduleTable(Matrix Z);

  const Matrix& Z() const { return Z_; }
  bool binary() const { return binary_; }
  int sensors() const { return static_cast<int>(Z_.rows()); }
  int instants() const { return static_cast<int>(Z_.cols()); }

 private:
  Matrix Z_;
  bool binary_ = true;
};

enum class Criterion { Mse, Vce };

struct AccuracySpec {
  Criterion criterion = Criterion::Mse;
  double rho = 2.0;
  double gamma0 = 0.0;

  /// Computes gamma0 from the full network and checks rho for the criterion.
  static AccuracySpec make(const SensorNetwork& network, Criterion criterion,
                           double rho);

  double threshold() const { return rho * gamma0; }
  /// True when a criterion value meets rho * gamma0 (1e-12 relative slack).
  bool satisfiedBy(double value) const;
};

enum class EnergyMode { Implicit, Explicit };
enum class Penalty { L2, L2Squared, Linf };

struct EnergyModel {
  EnergyMode mode = EnergyMode::Implicit;
  /// Diagonal of the relative cost matrix; empty means identity.
  Vector W;
  Penalty penalty = Penalty::L2Squared;
  double lambda = 0.0;
  bool includeComms = false;

  void validate(int m) const;
  double weight(int sensor) const {
    return W.size() == 0 ? 1.0 : W(sensor);
  }
};

struct CostModel {
  Vector s;
  Matrix C;
};

// Performance metrics. All go through the symmetric eigendecomposition of
// the Gram matrix and throw RankDeficient when lambda_min <= 1e-12 lambda_max.

/// Eigenvalues of A^T A in ascending order, checked against the rank floor.
Vector gram_spectrum(const Matrix& A);
Vector spectrum_of(const Matrix& gram);

double mse(const Matrix& A);
double wce(const Matrix& A);
double vce(const Matrix& A);
double mse_of_gram(const Matrix& gram);
double wce_of_gram(const Matrix& gram);
double vce_of_gram(const Matrix& gram);
double criterion_of_gram(const Matrix& gram, Criterion criterion);

double frame_potential(const Matrix& A);

double gamma0(const SensorNetwork& network, Criterion criterion);

/// A^T diag(z) A; z may be fractional.
Matrix restrict(const SensorNetwork& network, const Vector& z);
Matrix restrict(const Matrix& A, const Vector& z);

/// Rows of A picked by index.
Matrix select_rows(const Matrix& A, const std::vector<int>& rows);

/// Polar factor sqrt(alpha) U V^T of A.
Matrix make_tight(const Matrix& A, double alpha);

/// i.i.d. N(0, scale^2) entries; scale defaults to sqrt(m).
Matrix gen_gaussian(int m, int n, std::optional<double> scale,
                    std::uint64_t seed);

/// Random alpha-tight m x n frame (Gaussian draw followed by make_tight).
Matrix gen_tight(int m, int n, double alpha, std::uint64_t seed);

/// Communication matrix from a routing tree: row i is nonzero exactly on the
/// route of sensor i, each entry charged costOfOrigin(i) or hop costs when
/// the topology carries them.
Matrix comm_matrix(const Topology& topology, const Vector& costOfOrigin);

/// s_i = ||a_i||^2 and route entries commFraction * s_i.
CostModel default_costs(const Matrix& A, const std::optional<Topology>& topology,
                        double commFraction = 0.5);

}  // namespace sensorsched
