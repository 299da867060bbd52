#include "sensorsched/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sensorsched {

namespace {

void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

bool all_nonneg_finite(const Matrix& X) {
  return X.allFinite() && (X.size() == 0 || X.minCoeff() >= 0.0);
}

}  // namespace

std::vector<int> Topology::route(int sensor) const {
  std::vector<int> path;
  int node = sensor;
  while (node >= 0) {
    path.push_back(node);
    if (path.size() > parent.size()) {
      throw Error(ErrorKind::Validation, "topology contains a cycle");
    }
    node = parent[static_cast<std::size_t>(node)];
  }
  return path;
}

int Topology::depth(int sensor) const {
  return static_cast<int>(route(sensor).size());
}

void Topology::validate(int m) const {
  require(static_cast<int>(parent.size()) == m, ErrorKind::Validation,
          "topology parent array must have length m");
  for (int i = 0; i < m; ++i) {
    const int p = parent[static_cast<std::size_t>(i)];
    require(p >= -1 && p < m && p != i, ErrorKind::Validation,
            "topology parent out of range at sensor " + std::to_string(i));
  }
  for (int i = 0; i < m; ++i) route(i);
  if (!hopCost.empty()) {
    require(static_cast<int>(hopCost.size()) == m, ErrorKind::Validation,
            "topology hop_cost must have length m");
    for (double c : hopCost) {
      require(std::isfinite(c) && c >= 0.0, ErrorKind::Validation,
              "hop costs must be finite and nonnegative");
    }
  }
}

Topology star_topology(int m) {
  return Topology{std::vector<int>(static_cast<std::size_t>(m), -1), {}};
}

Topology random_tree_topology(int m, int fanout, int maxDepth,
                              std::uint64_t seed) {
  require(m > 0 && fanout > 0 && maxDepth > 0, ErrorKind::Validation,
          "tree topology needs m, fanout and depth > 0");
  std::mt19937_64 rng(seed);
  Topology topo;
  topo.parent.assign(static_cast<std::size_t>(m), -1);
  std::vector<int> depth(static_cast<std::size_t>(m), 1);
  std::vector<int> children(static_cast<std::size_t>(m), 0);
  // Roughly a tenth of the field reaches the master directly.
  const int direct = std::max(1, m / 10);
  std::vector<int> open;
  for (int i = 0; i < m; ++i) {
    if (i >= direct && !open.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
      const std::size_t slot = pick(rng);
      const int p = open[slot];
      topo.parent[static_cast<std::size_t>(i)] = p;
      depth[static_cast<std::size_t>(i)] = depth[static_cast<std::size_t>(p)] + 1;
      if (++children[static_cast<std::size_t>(p)] >= fanout) {
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(slot));
      }
    }
    if (depth[static_cast<std::size_t>(i)] < maxDepth) open.push_back(i);
  }
  return topo;
}

SensorNetwork::SensorNetwork(Matrix A)
    : SensorNetwork(A, A.rowwise().squaredNorm(), Vector::Zero(A.rows()),
                    Matrix::Zero(A.rows(), A.rows())) {}

SensorNetwork::SensorNetwork(Matrix A, Vector s, Vector e0, Matrix C,
                             std::optional<Topology> topology)
    : A_(std::move(A)),
      s_(std::move(s)),
      e0_(std::move(e0)),
      C_(std::move(C)),
      topology_(std::move(topology)) {
  const auto m = A_.rows();
  const auto n = A_.cols();
  require(n > 0 && m >= n, ErrorKind::Validation,
          "measurement matrix must be m x n with m >= n > 0");
  require(A_.allFinite(), ErrorKind::Validation,
          "measurement matrix has non-finite entries");
  require(s_.size() == m && e0_.size() == m, ErrorKind::Validation,
          "s and e0 must have length m");
  require(C_.rows() == m && C_.cols() == m, ErrorKind::Validation,
          "C must be m x m");
  require(all_nonneg_finite(s_) && all_nonneg_finite(e0_) &&
              all_nonneg_finite(C_),
          ErrorKind::Validation, "s, e0 and C must be nonnegative");
  if (topology_) topology_->validate(static_cast<int>(m));
  gram_spectrum(A_);  // full column rank
}

bool SensorNetwork::directLinksConsistent() const {
  if (!topology_) return true;
  for (int i = 0; i < m(); ++i) {
    if (topology_->parent[static_cast<std::size_t>(i)] != -1) continue;
    for (int j = 0; j < m(); ++j) {
      if (j != i && C_(i, j) != 0.0) return false;
    }
  }
  return true;
}

ScheduleTable::ScheduleTable(Matrix Z) : Z_(std::move(Z)) {
  require(Z_.allFinite(), ErrorKind::Validation,
          "schedule table has non-finite entries");
  for (Eigen::Index k = 0; k < Z_.size(); ++k) {
    const double v = Z_.data()[k];
    require(v >= 0.0 && v <= 1.0, ErrorKind::Validation,
            "schedule entries must lie in [0, 1]");
    if (v != 0.0 && v != 1.0) binary_ = false;
  }
}

AccuracySpec AccuracySpec::make(const SensorNetwork& network,
                                Criterion criterion, double rho) {
  AccuracySpec spec{criterion, rho, sensorsched::gamma0(network, criterion)};
  if (criterion == Criterion::Mse) {
    require(std::isfinite(rho) && rho >= 1.0, ErrorKind::DomainError,
            "MSE accuracy needs rho >= 1");
  } else {
    require(rho > 0.0 && rho <= 1.0, ErrorKind::DomainError,
            "VCE accuracy needs 0 < rho <= 1");
  }
  return spec;
}

bool AccuracySpec::satisfiedBy(double value) const {
  const double bound = threshold();
  const double slack = 1e-12 * std::max(1.0, std::abs(bound));
  if (criterion == Criterion::Mse) return value <= bound + slack;
  return value >= bound - slack;
}

void EnergyModel::validate(int m) const {
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::Validation,
          "lambda must be nonnegative");
  require(W.size() == 0 || W.size() == m, ErrorKind::Validation,
          "W diagonal must have length m");
  require(W.size() == 0 || all_nonneg_finite(W), ErrorKind::Validation,
          "W must be nonnegative");
}

Vector spectrum_of(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::RankDeficient, "eigendecomposition failed");
  }
  const Vector& lambda = eig.eigenvalues();
  const double top = lambda(lambda.size() - 1);
  if (!(top > 0.0) || lambda(0) <= kRankFloor * top) {
    throw Error(ErrorKind::RankDeficient,
                "Gram matrix is singular to working precision");
  }
  return lambda;
}

Vector gram_spectrum(const Matrix& A) {
  return spectrum_of(A.transpose() * A);
}

double mse_of_gram(const Matrix& gram) {
  return spectrum_of(gram).cwiseInverse().sum();
}

double wce_of_gram(const Matrix& gram) { return 1.0 / spectrum_of(gram)(0); }

double vce_of_gram(const Matrix& gram) {
  return spectrum_of(gram).array().log().sum();
}

double criterion_of_gram(const Matrix& gram, Criterion criterion) {
  return criterion == Criterion::Mse ? mse_of_gram(gram) : vce_of_gram(gram);
}

double mse(const Matrix& A) { return mse_of_gram(A.transpose() * A); }
double wce(const Matrix& A) { return wce_of_gram(A.transpose() * A); }
double vce(const Matrix& A) { return vce_of_gram(A.transpose() * A); }

double frame_potential(const Matrix& A) {
  return (A.transpose() * A).squaredNorm();
}

double gamma0(const SensorNetwork& network, Criterion criterion) {
  return criterion_of_gram(network.A().transpose() * network.A(), criterion);
}

Matrix restrict(const Matrix& A, const Vector& z) {
  require(z.size() == A.rows(), ErrorKind::Validation,
          "selection vector must have length m");
  return A.transpose() * z.asDiagonal() * A;
}

Matrix restrict(const SensorNetwork& network, const Vector& z) {
  return restrict(network.A(), z);
}

Matrix select_rows(const Matrix& A, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = A.row(rows[r]);
  }
  return out;
}

Matrix make_tight(const Matrix& A, double alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), ErrorKind::DomainError,
          "alpha must be positive");
  require(A.rows() >= A.cols(), ErrorKind::Validation,
          "tight frames need m >= n");
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double top = sigma(0);
  const double bottom = sigma(sigma.size() - 1);
  if (!(top > 0.0) || bottom * bottom <= kRankFloor * top * top) {
    throw Error(ErrorKind::RankDeficient, "cannot make a rank-deficient frame tight");
  }
  return std::sqrt(alpha) * svd.matrixU() * svd.matrixV().transpose();
}

Matrix gen_gaussian(int m, int n, std::optional<double> scale,
                    std::uint64_t seed) {
  require(m > 0 && n > 0, ErrorKind::Validation, "dimensions must be positive");
  const double sd = scale.value_or(std::sqrt(static_cast<double>(m)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix A(m, n);
  // Row-major fill so that a given seed reads naturally row by row.
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = sd * normal(rng);
  }
  return A;
}

Matrix gen_tight(int m, int n, double alpha, std::uint64_t seed) {
  return make_tight(gen_gaussian(m, n, 1.0, seed), alpha);
}

Matrix comm_matrix(const Topology& topology, const Vector& costOfOrigin) {
  const int m = static_cast<int>(topology.parent.size());
  topology.validate(m);
  Matrix C = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int hop : topology.route(i)) {
      C(i, hop) = topology.hopCost.empty()
                      ? costOfOrigin(i)
                      : topology.hopCost[static_cast<std::size_t>(hop)];
    }
  }
  return C;
}

CostModel default_costs(const Matrix& A, const std::optional<Topology>& topology,
                        double commFraction) {
  require(commFraction >= 0.0 && std::isfinite(commFraction),
          ErrorKind::Validation, "commFraction must be nonnegative");
  CostModel costs{A.rowwise().squaredNorm(), Matrix::Zero(A.rows(), A.rows())};
  if (topology && commFraction > 0.0) {
    Topology routed{topology->parent, {}};
    costs.C = comm_matrix(routed, commFraction * costs.s);
  }
  return costs;
}

}  // namespace sensorsched
