#include "sensorsched/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace sensorsched {

namespace {

/// Relative floor on lambda_min(M) for accepting a trial point.
constexpr double kLineSearchFloor = 1e-10;
/// Newton decrement^2 / 2 that ends a centering step.
constexpr double kCenteringTol = 1e-9;
constexpr int kMaxStageSteps = 200;
constexpr double kArmijo = 0.01;
// Accepted steps shorter than this end the centering stage.
constexpr double kMinStep = 1e-10;

enum class Slot : std::int8_t { Free, One, Zero };

/// s(x) = constant + sum coef * x[var] > 0.
struct LinearIneq {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;
};

struct Column {
  int t = 0;
  int offset = 0;  // first variable of this column's free block
  std::vector<int> rows;
  Matrix Afree;   // free rows of A
  Matrix Mfixed;  // sum of a_i a_i^T over fixed-one rows
};

/// Barrier Hessian in pieces: one dense block per column over its free
/// entries, a dense block over the remaining variables, and the linear rows
/// that couple columns, kept as rank-one terms.
struct Evaluation {
  Vector slack;
  Vector grad;
  std::vector<Matrix> blocks;
  Matrix other;
  std::vector<std::pair<int, double>> coupled;  // (row of linear_, 1 / s^2)
};

class BarrierProgram {
 public:
  explicit BarrierProgram(const SolverProblem& problem);

  SolverSolution run(std::ostream* trace);

 private:
  void classify();
  void layout();
  Vector start_point(double level) const;
  bool evaluate(const Vector& x, Evaluation& ev, bool derivatives) const;
  Matrix dense_hessian(const Evaluation& ev) const;
  bool structured_direction(const Evaluation& ev, const Vector& g, Vector& d) const;
  Vector dense_direction(const Evaluation& ev, const Vector& g) const;
  double model_objective(const Vector& x) const;
  double objective_change(const Vector& x, const Vector& d, double alpha) const;
  SolverSolution assemble(const Vector& x) const;

  const SolverProblem& p_;
  const SensorNetwork& net_;
  int m_ = 0;
  int n_ = 0;
  int T_ = 0;
  double threshold_ = 0.0;
  bool mse_ = true;
  Eigen::Matrix<Slot, Eigen::Dynamic, Eigen::Dynamic> slots_;

  std::vector<Entry> free_;  // ordered by (t, i)
  std::vector<Column> columns_;
  std::vector<LinearIneq> linear_;
  int nz_ = 0;
  int nv_ = 0;
  int u_ = -1;  // implicit epigraph
  int e_ = -1;  // first explicit excess variable
  int v_ = -1;  // explicit l-inf / l2 epigraph
  bool soc_ = false;
  bool quadratic_ = false;
  double lambda_ = 0.0;
  Vector cost_;  // linear objective
  double constant_ = 0.0;
  int slackCount_ = 0;
  double theta_ = 0.0;  // barrier parameter count
  Matrix Q_;            // energy coefficient matrix, explicit mode
};

BarrierProgram::BarrierProgram(const SolverProblem& problem)
    : p_(problem), net_(*problem.network) {
  m_ = net_.m();
  n_ = net_.n();
  T_ = problem.T;
  mse_ = problem.accuracy.criterion == Criterion::Mse;
  threshold_ = problem.accuracy.threshold();
  lambda_ = problem.energy.lambda;
  classify();
  layout();
}

void BarrierProgram::classify() {
  slots_.setConstant(m_, T_, Slot::Free);
  for (const auto& e : p_.fixedOne) slots_(e.i, e.t) = Slot::One;
  for (const auto& e : p_.fixedZero) slots_(e.i, e.t) = Slot::Zero;
  if (!p_.coverageActive()) return;
  std::vector<bool> excluded(static_cast<std::size_t>(m_), false);
  for (int i : p_.coverageExclusions) excluded[static_cast<std::size_t>(i)] = true;
  for (int i = 0; i < m_; ++i) {
    if (excluded[static_cast<std::size_t>(i)]) continue;
    int ones = 0;
    int lastFree = -1;
    int freeCount = 0;
    for (int t = 0; t < T_; ++t) {
      if (slots_(i, t) == Slot::One) ++ones;
      if (slots_(i, t) == Slot::Free) {
        ++freeCount;
        lastFree = t;
      }
    }
    if (ones > 0) continue;
    if (freeCount == 0) {
      throw Error(ErrorKind::Infeasible,
                  "sensor " + std::to_string(i) + " can no longer be covered");
    }
    // A single free entry must carry the whole coverage requirement.
    if (freeCount == 1) slots_(i, lastFree) = Slot::One;
  }
}

void BarrierProgram::layout() {
  const Matrix& A = net_.A();
  for (int t = 0; t < T_; ++t) {
    Column col;
    col.t = t;
    col.offset = static_cast<int>(free_.size());
    col.Mfixed = Matrix::Zero(n_, n_);
    for (int i = 0; i < m_; ++i) {
      if (slots_(i, t) == Slot::Free) {
        free_.push_back({t, i});
        col.rows.push_back(i);
      } else if (slots_(i, t) == Slot::One) {
        col.Mfixed.noalias() += A.row(i).transpose() * A.row(i);
        constant_ += p_.weights(i, t);
      }
    }
    col.Afree = select_rows(A, col.rows);
    columns_.push_back(std::move(col));
  }
  nz_ = static_cast<int>(free_.size());
  nv_ = nz_;

  // Per-sensor count of fixed-one entries and free variable indices.
  std::vector<double> ones(static_cast<std::size_t>(m_), 0.0);
  std::vector<std::vector<int>> freeVars(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    for (int t = 0; t < T_; ++t) {
      if (slots_(i, t) == Slot::One) ones[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  for (int k = 0; k < nz_; ++k) {
    freeVars[static_cast<std::size_t>(free_[static_cast<std::size_t>(k)].i)].push_back(k);
  }

  if (p_.coverageActive()) {
    std::vector<bool> excluded(static_cast<std::size_t>(m_), false);
    for (int i : p_.coverageExclusions) excluded[static_cast<std::size_t>(i)] = true;
    for (int i = 0; i < m_; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (excluded[si] || ones[si] > 0.0) continue;
      LinearIneq cover{-1.0, {}};
      for (int k : freeVars[si]) cover.terms.emplace_back(k, 1.0);
      linear_.push_back(std::move(cover));
    }
  }

  const EnergyModel& energy = p_.energy;
  if (energy.mode == EnergyMode::Implicit && lambda_ > 0.0) {
    bool any = false;
    for (int i = 0; i < m_; ++i) any = any || energy.weight(i) > 0.0;
    if (any) {
      u_ = nv_++;
      for (int i = 0; i < m_; ++i) {
        const double w = energy.weight(i);
        if (w <= 0.0) continue;
        const auto si = static_cast<std::size_t>(i);
        LinearIneq epi{-w * ones[si], {{u_, 1.0}}};
        for (int k : freeVars[si]) epi.terms.emplace_back(k, -w);
        linear_.push_back(std::move(epi));
      }
    }
  }

  if (energy.mode == EnergyMode::Explicit && lambda_ > 0.0) {
    Q_ = Matrix(net_.s().asDiagonal());
    if (energy.includeComms) Q_ += net_.C();
    e_ = nv_;
    nv_ += m_;
    if (energy.penalty != Penalty::L2Squared) v_ = nv_++;
    soc_ = energy.penalty == Penalty::L2;
    quadratic_ = energy.penalty == Penalty::L2Squared;
    for (int i = 0; i < m_; ++i) {
      linear_.push_back(LinearIneq{0.0, {{e_ + i, 1.0}}});
      LinearIneq budget{net_.e0()(i), {{e_ + i, 1.0}}};
      for (int j = 0; j < m_; ++j) {
        const double q = Q_(i, j);
        if (q == 0.0) continue;
        const auto sj = static_cast<std::size_t>(j);
        budget.constant -= q * ones[sj];
        for (int k : freeVars[sj]) budget.terms.emplace_back(k, -q);
      }
      linear_.push_back(std::move(budget));
      if (energy.penalty == Penalty::Linf) {
        linear_.push_back(LinearIneq{0.0, {{v_, 1.0}, {e_ + i, -1.0}}});
      }
    }
  }

  cost_ = Vector::Zero(nv_);
  for (int k = 0; k < nz_; ++k) {
    const Entry& en = free_[static_cast<std::size_t>(k)];
    cost_(k) = p_.weights(en.i, en.t);
  }
  if (u_ >= 0) cost_(u_) = lambda_;
  if (v_ >= 0) cost_(v_) = lambda_;

  slackCount_ = T_ + 2 * nz_ + static_cast<int>(linear_.size()) + (soc_ ? 1 : 0);
  theta_ = T_ + 2.0 * nz_ + static_cast<double>(linear_.size()) + (soc_ ? 2.0 : 0.0);
}

Vector BarrierProgram::start_point(double level) const {
  Vector x = Vector::Zero(nv_);
  x.head(nz_).setConstant(level);
  auto linear_value = [&](const LinearIneq& li) {
    double s = li.constant;
    for (const auto& [var, coef] : li.terms) s += coef * x(var);
    return s;
  };
  if (u_ >= 0) {
    // u enters each epigraph row with coefficient one; lift it clear of all.
    double need = 0.0;
    for (const auto& li : linear_) {
      if (!li.terms.empty() && li.terms.front().first == u_) {
        need = std::max(need, -(linear_value(li) - x(u_)));
      }
    }
    x(u_) = need + 1.0;
  }
  if (e_ >= 0) {
    const Matrix Z = [&] {
      Matrix z = Matrix::Zero(m_, T_);
      for (int i = 0; i < m_; ++i) {
        for (int t = 0; t < T_; ++t) {
          if (slots_(i, t) == Slot::One) z(i, t) = 1.0;
        }
      }
      for (int k = 0; k < nz_; ++k) {
        const Entry& en = free_[static_cast<std::size_t>(k)];
        z(en.i, en.t) = x(k);
      }
      return z;
    }();
    const Vector use = Q_ * Z.rowwise().sum();
    for (int i = 0; i < m_; ++i) {
      const double excess = std::max(use(i) - net_.e0()(i), 0.0);
      x(e_ + i) = excess + 1.0 + 0.1 * std::abs(use(i));
    }
    if (v_ >= 0) {
      const auto e = x.segment(e_, m_);
      x(v_) = (soc_ ? e.norm() : e.maxCoeff()) + 1.0;
    }
  }
  return x;
}

bool BarrierProgram::evaluate(const Vector& x, Evaluation& ev,
                              bool derivatives) const {
  ev.slack.resize(slackCount_);
  const int no = nv_ - nz_;
  if (derivatives) {
    ev.grad = Vector::Zero(nv_);
    ev.blocks.resize(columns_.size());
    ev.other = Matrix::Zero(no, no);
    ev.coupled.clear();
  }
  int k = 0;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    const int f = static_cast<int>(col.rows.size());
    const auto z = x.segment(col.offset, f);
    Matrix M = col.Mfixed;
    M.noalias() += col.Afree.transpose() * z.asDiagonal() * col.Afree;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
    if (eig.info() != Eigen::Success) return false;
    const Vector& lam = eig.eigenvalues();
    if (!(lam(n_ - 1) > 0.0) || lam(0) < kLineSearchFloor * lam(n_ - 1)) {
      return false;
    }
    double s = 0.0;
    if (mse_) {
      s = threshold_ - lam.cwiseInverse().sum();
    } else {
      s = lam.array().log().sum() - threshold_;
    }
    if (!(s > 0.0)) return false;
    ev.slack(k++) = s;
    if (!derivatives) continue;
    ev.blocks[c] = Matrix::Zero(f, f);
    if (f == 0) continue;
    const Matrix& V = eig.eigenvectors();
    const Matrix Minv = V * lam.cwiseInverse().asDiagonal() * V.transpose();
    const Matrix Y = col.Afree * Minv;
    const Matrix B = Y * col.Afree.transpose();
    Matrix& Hblock = ev.blocks[c];
    if (mse_) {
      const Vector gf = -Y.rowwise().squaredNorm();
      const Matrix Cm = Y * Y.transpose();
      ev.grad.segment(col.offset, f) += gf / s;
      Hblock += (2.0 / s) * B.cwiseProduct(Cm);
      Hblock.noalias() += (gf / s) * (gf / s).transpose();
    } else {
      const Vector gv = B.diagonal();
      ev.grad.segment(col.offset, f) -= gv / s;
      Hblock += B.cwiseProduct(B) / s;
      Hblock.noalias() += (gv / s) * (gv / s).transpose();
    }
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& col = columns_[c];
    const int f = static_cast<int>(col.rows.size());
    for (int l = 0; l < f; ++l) {
      const int j = col.offset + l;
      const double z = x(j);
      if (!(z > 0.0 && z < 1.0)) return false;
      ev.slack(k++) = z;
      ev.slack(k++) = 1.0 - z;
      if (derivatives) {
        ev.grad(j) += -1.0 / z + 1.0 / (1.0 - z);
        ev.blocks[c](l, l) += 1.0 / (z * z) + 1.0 / ((1.0 - z) * (1.0 - z));
      }
    }
  }
  for (std::size_t r = 0; r < linear_.size(); ++r) {
    const LinearIneq& li = linear_[r];
    double s = li.constant;
    bool touchesZ = false;
    for (const auto& [var, coef] : li.terms) {
      s += coef * x(var);
      touchesZ = touchesZ || var < nz_;
    }
    if (!(s > 0.0)) return false;
    ev.slack(k++) = s;
    if (!derivatives) continue;
    const double inv = 1.0 / s;
    for (const auto& [va, ca] : li.terms) ev.grad(va) -= ca * inv;
    if (touchesZ) {
      ev.coupled.emplace_back(static_cast<int>(r), inv * inv);
      continue;
    }
    for (const auto& [va, ca] : li.terms) {
      for (const auto& [vb, cb] : li.terms) {
        ev.other(va - nz_, vb - nz_) += ca * cb * inv * inv;
      }
    }
  }
  if (soc_) {
    const double u = x(v_);
    const auto e = x.segment(e_, m_);
    const double s = u * u - e.squaredNorm();
    if (!(u > 0.0) || !(s > 0.0)) return false;
    ev.slack(k++) = s;
    if (derivatives) {
      // -log(u^2 - |e|^2)
      Vector ds = Vector::Zero(nv_);
      ds.segment(e_, m_) = -2.0 * e;
      ds(v_) = 2.0 * u;
      ev.grad -= ds / s;
      ev.other.diagonal().segment(e_ - nz_, m_).array() += 2.0 / s;
      ev.other(v_ - nz_, v_ - nz_) -= 2.0 / s;
      const Vector dso = ds.tail(no) / s;
      ev.other.noalias() += dso * dso.transpose();
    }
  }
  return true;
}

Matrix BarrierProgram::dense_hessian(const Evaluation& ev) const {
  Matrix H = Matrix::Zero(nv_, nv_);
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto f = ev.blocks[c].rows();
    H.block(columns_[c].offset, columns_[c].offset, f, f) = ev.blocks[c];
  }
  H.bottomRightCorner(nv_ - nz_, nv_ - nz_) = ev.other;
  for (const auto& [row, w] : ev.coupled) {
    const auto& terms = linear_[static_cast<std::size_t>(row)].terms;
    for (const auto& [va, ca] : terms) {
      for (const auto& [vb, cb] : terms) H(va, vb) += ca * cb * w;
    }
  }
  return H;
}

// Newton direction for H d = -g with H = blkdiag(B_1..B_T, H_oo) + C^T C,
// where C holds the coupling rows. Woodbury on the column blocks gives
// K = I + C_z B^{-1} C_z^T, and the Schur complement on the remaining
// variables reduces to S = H_oo + C_o^T K^{-1} C_o. Returns false when a
// factorisation fails so the caller can fall back to the dense solve.
bool BarrierProgram::structured_direction(const Evaluation& ev, const Vector& g,
                                          Vector& d) const {
  const int no = nv_ - nz_;
  const int r = static_cast<int>(ev.coupled.size());
  Matrix C = Matrix::Zero(r, nv_);
  for (int k = 0; k < r; ++k) {
    const auto& [row, w] = ev.coupled[static_cast<std::size_t>(k)];
    const double sw = std::sqrt(w);
    for (const auto& [var, coef] : linear_[static_cast<std::size_t>(row)].terms) {
      C(k, var) += sw * coef;
    }
  }
  // Symmetric diagonal scaling keeps the factorisations accurate when the
  // energy terms dwarf the selection terms.
  Vector diag = C.colwise().squaredNorm().transpose();
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    diag.segment(columns_[c].offset, ev.blocks[c].rows()) += ev.blocks[c].diagonal();
  }
  diag.tail(no) += ev.other.diagonal();
  const Vector D = diag.cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  C = C * D.asDiagonal();
  const Vector gs = D.cwiseProduct(g);

  std::vector<Eigen::LLT<Matrix>> blocks(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto off = columns_[c].offset;
    const auto f = ev.blocks[c].rows();
    if (f == 0) continue;
    const auto Dc = D.segment(off, f);
    blocks[c].compute(Dc.asDiagonal() * ev.blocks[c] * Dc.asDiagonal());
    if (blocks[c].info() != Eigen::Success) return false;
  }
  auto solve_blocks = [&](const Matrix& rhs) {
    Matrix out(rhs.rows(), rhs.cols());
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto off = columns_[c].offset;
      const auto f = ev.blocks[c].rows();
      if (f > 0) out.middleRows(off, f) = blocks[c].solve(rhs.middleRows(off, f));
    }
    return out;
  };

  const auto Cz = C.leftCols(nz_);
  const auto Co = C.rightCols(no);
  const Matrix E = solve_blocks(Cz.transpose());  // B^{-1} C_z^T
  Matrix K = Matrix::Identity(r, r);
  K.noalias() += Cz * E;
  Eigen::LLT<Matrix> kllt(K);
  if (r > 0 && kllt.info() != Eigen::Success) return false;
  auto solve_k = [&](const Matrix& rhs) { return r > 0 ? Matrix(kllt.solve(rhs)) : rhs; };

  const Matrix gz = gs.head(nz_);
  const Vector w = solve_k(Cz * solve_blocks(gz)).col(0);
  Vector dOther = Vector::Zero(no);
  if (no > 0) {
    Matrix S = D.tail(no).asDiagonal() * ev.other * D.tail(no).asDiagonal();
    S.noalias() += Co.transpose() * solve_k(Co);
    Eigen::LLT<Matrix> sllt(S);
    if (sllt.info() != Eigen::Success) return false;
    const Vector rhs = -gs.tail(no) + Co.transpose() * w;
    dOther = sllt.solve(rhs);
  }
  const Matrix b = -gz - Cz.transpose() * (Co * dOther);
  const Matrix y = solve_blocks(b);
  const Vector dz = (y - E * solve_k(Cz * y)).col(0);
  d.resize(nv_);
  d.head(nz_) = dz;
  d.tail(no) = dOther;
  d = D.cwiseProduct(d);
  return d.allFinite();
}

Vector BarrierProgram::dense_direction(const Evaluation& ev, const Vector& g) const {
  const Matrix H = dense_hessian(ev);
  const Vector D = H.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix Hs = D.asDiagonal() * H * D.asDiagonal();
  Eigen::LLT<Matrix> llt(Hs);
  double ridge = 0.0;
  while (llt.info() != Eigen::Success) {
    ridge = ridge == 0.0 ? 1e-12 : ridge * 10.0;
    Matrix Hr = Hs;
    Hr.diagonal().array() += ridge;
    llt.compute(Hr);
  }
  return -(D.asDiagonal() * llt.solve(D.asDiagonal() * g)).eval();
}

double BarrierProgram::model_objective(const Vector& x) const {
  double f = constant_ + cost_.dot(x);
  if (quadratic_) f += lambda_ * x.segment(e_, m_).squaredNorm();
  return f;
}

double BarrierProgram::objective_change(const Vector& x, const Vector& d,
                                        double alpha) const {
  double delta = alpha * cost_.dot(d);
  if (quadratic_) {
    const auto e = x.segment(e_, m_);
    const auto de = d.segment(e_, m_);
    delta += lambda_ * (2.0 * alpha * e.dot(de) + alpha * alpha * de.squaredNorm());
  }
  return delta;
}

SolverSolution BarrierProgram::run(std::ostream* trace) {
  const double kktGap = p_.tolerances.kktGap;
  const int maxIter = p_.tolerances.maxIter;

  // Every constraint is monotone in a uniform level of the free entries, so
  // a short ladder towards one decides strict feasibility, and bisection
  // then centres the start between the feasibility edge and the box.
  Vector x;
  Evaluation ev;
  double top = -1.0;
  for (double margin : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
    if (evaluate(start_point(1.0 - margin), ev, false)) {
      top = 1.0 - margin;
      break;
    }
  }
  if (top < 0.0) {
    throw Error(ErrorKind::Infeasible,
                "no strictly feasible point: accuracy threshold unreachable "
                "with the fixed entries");
  }
  double lo = 0.0, hi = top;
  for (int it = 0; it < 50 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (evaluate(start_point(mid), ev, false) ? hi : lo) = mid;
  }
  x = start_point(0.5 * (hi + top));
  if (!evaluate(x, ev, false)) x = start_point(top);

  std::vector<StageRecord> stages;
  int iterations = 0;
  bool converged = false;
  // Initial barrier weight: the first gap bound theta / t matches the size
  // of the objective at the start point.
  const double tParam0 =
      std::clamp(theta_ / std::max(1.0, std::abs(model_objective(x))), 1e-8, 1.0);
  double tParam = tParam0;
  if (nz_ == 0) converged = true;  // nothing left to optimise over z

  Evaluation trial;
  while (!converged) {
    StageRecord stage;
    stage.barrierParameter = tParam;
    bool budgetExhausted = false;
    bool centered = false;
    for (int step = 0; step < kMaxStageSteps; ++step) {
      if (iterations >= maxIter) {
        budgetExhausted = true;
        break;
      }
      evaluate(x, ev, true);
      Vector g = ev.grad + tParam * cost_;
      if (quadratic_) {
        g.segment(e_, m_) += tParam * 2.0 * lambda_ * x.segment(e_, m_);
        ev.other.diagonal().segment(e_ - nz_, m_).array() += tParam * 2.0 * lambda_;
      }
      Vector d;
      if (!structured_direction(ev, g, d)) d = dense_direction(ev, g);
      const double slope = g.dot(d);
      ++iterations;
      ++stage.newtonSteps;
      if (-slope / 2.0 <= kCenteringTol) {
        centered = true;
        break;
      }

      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-14) {
        const Vector xn = x + alpha * d;
        if (evaluate(xn, trial, false)) {
          double change = tParam * objective_change(x, d, alpha);
          for (int s = 0; s < slackCount_; ++s) {
            change -= std::log(trial.slack(s) / ev.slack(s));
          }
          if (change <= kArmijo * alpha * slope) {
            x = xn;
            accepted = alpha >= kMinStep;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // Stalled at working precision: as centred as this point gets.
        centered = true;
        break;
      }
    }
    stage.objective = model_objective(x);
    stage.gap = theta_ / tParam;
    stages.push_back(stage);
    if (trace) {
      nlohmann::json line{{"stage", stages.size()},
                          {"barrier", tParam},
                          {"objective", stage.objective},
                          {"gap", stage.gap},
                          {"newton_steps", stage.newtonSteps},
                          {"iterations", iterations}};
      *trace << line.dump() << '\n';
    }
    if (budgetExhausted) break;
    if (centered && stage.gap < kktGap * std::max(1.0, std::abs(stage.objective))) {
      converged = true;
      break;
    }
    tParam *= 10.0;
  }

  SolverSolution sol = assemble(x);
  sol.iterations = iterations;
  sol.converged = converged && sol.constraintResiduals.max() <=
                                   p_.tolerances.constraintViol;
  sol.dualityGap = nz_ == 0 ? 0.0 : theta_ / tParam;
  sol.stages = std::move(stages);
  return sol;
}

SolverSolution BarrierProgram::assemble(const Vector& x) const {
  Matrix Z = Matrix::Zero(m_, T_);
  for (int i = 0; i < m_; ++i) {
    for (int t = 0; t < T_; ++t) {
      if (slots_(i, t) == Slot::One) Z(i, t) = 1.0;
    }
  }
  for (int k = 0; k < nz_; ++k) {
    const Entry& en = free_[static_cast<std::size_t>(k)];
    Z(en.i, en.t) = x(k);
  }

  SolverSolution sol;
  sol.Z = ScheduleTable(Z);
  const EnergyModel& energy = p_.energy;
  const Vector counts = Z.rowwise().sum();
  double objective = p_.weights.cwiseProduct(Z).sum();

  if (energy.mode == EnergyMode::Implicit) {
    if (lambda_ > 0.0) {
      double worst = 0.0;
      for (int i = 0; i < m_; ++i) worst = std::max(worst, energy.weight(i) * counts(i));
      objective += lambda_ * worst;
    }
    if (u_ >= 0) sol.epigraph = x(u_);
  } else {
    const Vector use = energy_use(net_, Z, energy.includeComms);
    const Vector minimal = (use - net_.e0()).cwiseMax(0.0);
    sol.e = e_ >= 0 ? Vector(x.segment(e_, m_)) : minimal;
    if (lambda_ > 0.0) {
      switch (energy.penalty) {
        case Penalty::L2:
          objective += lambda_ * sol.e.norm();
          break;
        case Penalty::L2Squared:
          objective += lambda_ * sol.e.squaredNorm();
          break;
        case Penalty::Linf:
          objective += lambda_ * sol.e.maxCoeff();
          break;
      }
    }
    if (v_ >= 0) sol.epigraph = x(v_);
    for (int i = 0; i < m_; ++i) {
      const double excess = use(i) - net_.e0()(i) - sol.e(i);
      sol.constraintResiduals.energy =
          std::max(sol.constraintResiduals.energy,
                   std::max(excess, 0.0) / std::max(1.0, std::abs(use(i))));
    }
  }
  sol.objective = objective;

  ConstraintResiduals& r = sol.constraintResiduals;
  const double scale = std::max(1.0, std::abs(threshold_));
  for (int t = 0; t < T_; ++t) {
    const Matrix M = restrict(net_.A(), Z.col(t));
    double violation = 0.0;
    try {
      const double value = criterion_of_gram(M, p_.accuracy.criterion);
      violation = mse_ ? value - threshold_ : threshold_ - value;
    } catch (const Error&) {
      violation = std::numeric_limits<double>::infinity();
    }
    r.accuracy = std::max(r.accuracy, std::max(violation, 0.0) / scale);
  }
  if (p_.coverageActive()) {
    std::vector<bool> excluded(static_cast<std::size_t>(m_), false);
    for (int i : p_.coverageExclusions) excluded[static_cast<std::size_t>(i)] = true;
    for (int i = 0; i < m_; ++i) {
      if (!excluded[static_cast<std::size_t>(i)]) {
        r.coverage = std::max(r.coverage, 1.0 - counts(i));
      }
    }
  }
  r.box = std::max({0.0, -Z.minCoeff(), Z.maxCoeff() - 1.0});
  for (const auto& e : p_.fixedOne) r.fixed = std::max(r.fixed, std::abs(Z(e.i, e.t) - 1.0));
  for (const auto& e : p_.fixedZero) r.fixed = std::max(r.fixed, std::abs(Z(e.i, e.t)));
  return sol;
}

}  // namespace

double ConstraintResiduals::max() const {
  return std::max({accuracy, coverage, box, energy, fixed});
}

void SolverProblem::validate() const {
  auto fail = [](const std::string& message) {
    throw Error(ErrorKind::Validation, "solver problem: " + message);
  };
  if (!network) fail("network is missing");
  const int m = network->m();
  if (T < 1) fail("T must be positive");
  if (weights.rows() != m || weights.cols() != T) fail("weights must be m x T");
  if (!weights.allFinite() || weights.minCoeff() <= 0.0) {
    fail("weights must be positive and finite");
  }
  for (const EntrySet* set : {&fixedOne, &fixedZero}) {
    for (const Entry& e : *set) {
      if (e.i < 0 || e.i >= m || e.t < 0 || e.t >= T) fail("fixed entry out of range");
    }
  }
  for (const Entry& e : fixedOne) {
    if (fixedZero.count(e)) fail("an entry is fixed to both one and zero");
  }
  for (int i : coverageExclusions) {
    if (i < 0 || i >= m) fail("coverage exclusion out of range");
  }
  energy.validate(m);
  if (accuracy.criterion == Criterion::Mse) {
    if (!(accuracy.rho >= 1.0) || !(accuracy.gamma0 > 0.0)) {
      throw Error(ErrorKind::DomainError, "MSE accuracy needs rho >= 1, gamma0 > 0");
    }
  } else {
    if (!(accuracy.gamma0 > 0.0)) {
      throw Error(ErrorKind::DomainError,
                  "VCE accuracy needs gamma0 = log det(A^T A) > 0");
    }
    if (!(accuracy.rho > 0.0 && accuracy.rho <= 1.0)) {
      throw Error(ErrorKind::DomainError, "VCE accuracy needs 0 < rho <= 1");
    }
  }
  if (!(tolerances.kktGap > 0.0) || !(tolerances.constraintViol > 0.0) ||
      tolerances.maxIter < 1) {
    fail("tolerances must be positive");
  }
}

SolverSolution solve(const SolverProblem& problem, std::ostream* trace) {
  problem.validate();
  BarrierProgram program(problem);
  return program.run(trace);
}

SolverSolution solve_implicit(const SolverProblem& problem, std::ostream* trace) {
  if (problem.energy.mode != EnergyMode::Implicit) {
    throw Error(ErrorKind::Validation, "solve_implicit needs an implicit energy model");
  }
  return solve(problem, trace);
}

SolverSolution solve_explicit(const SolverProblem& problem, std::ostream* trace) {
  if (problem.energy.mode != EnergyMode::Explicit) {
    throw Error(ErrorKind::Validation, "solve_explicit needs an explicit energy model");
  }
  return solve(problem, trace);
}

std::pair<double, Vector> accuracy_value_and_gradient(const Matrix& A,
                                                      const Vector& z,
                                                      Criterion criterion) {
  const Matrix M = restrict(A, z);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  const Vector& lam = eig.eigenvalues();
  const auto n = lam.size();
  if (eig.info() != Eigen::Success || !(lam(n - 1) > 0.0) ||
      lam(0) <= kRankFloor * lam(n - 1)) {
    throw Error(ErrorKind::RankDeficient, "A^T diag(z) A is singular");
  }
  const Matrix& V = eig.eigenvectors();
  if (criterion == Criterion::Mse) {
    // rows of A V diag(1/lam) V^T are (M^{-1} a_i)^T
    const Matrix Y = A * V * lam.cwiseInverse().asDiagonal() * V.transpose();
    return {lam.cwiseInverse().sum(), -Y.rowwise().squaredNorm()};
  }
  const Matrix W = A * V * lam.cwiseInverse().cwiseSqrt().asDiagonal();
  return {lam.array().log().sum(), W.rowwise().squaredNorm()};
}

std::pair<double, Vector> accuracy_value_and_gradient(
    const SensorNetwork& network, const Vector& z, Criterion criterion) {
  return accuracy_value_and_gradient(network.A(), z, criterion);
}

Vector energy_use(const SensorNetwork& network, const Matrix& Z,
                  bool includeComms) {
  const Vector counts = Z.rowwise().sum();
  Vector use = network.s().cwiseProduct(counts);
  if (includeComms) use += network.C() * counts;
  return use;
}

}  // namespace sensorsched
