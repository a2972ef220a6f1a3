#include "flatness/dense_simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace flatness::lp {

namespace {

class Tableau {
 public:
  Tableau(const LinearProgram& lp, double tol) : m_(lp.A.rows()), n_(lp.A.cols()), tol_(tol) {
    // Columns: n structural, m artificial, rhs. Rows: m constraints, objective.
    t_ = MatrixXd::Zero(m_ + 1, n_ + m_ + 1);
    sign_ = VectorXd::Ones(m_);
    for (Index i = 0; i < m_; ++i) {
      if (lp.b[i] < 0) sign_[i] = -1.0;
      t_.row(i).head(n_) = sign_[i] * lp.A.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, n_ + m_) = sign_[i] * lp.b[i];
    }
    basis_.resize(static_cast<std::size_t>(m_));
    for (Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
  }

  // Sets the objective row to reduced costs of `cost` (length n + m) for the current basis.
  void set_objective(const VectorXd& cost) {
    cost_ = cost;
    t_.row(m_).head(n_ + m_) = cost.transpose();
    t_(m_, n_ + m_) = 0.0;
    for (Index i = 0; i < m_; ++i) {
      const double cb = cost[basis_[static_cast<std::size_t>(i)]];
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  // Returns false when unbounded.
  bool optimize(Index allowed_cols, long& pivots) {
    int degenerate_run = 0;
    while (true) {
      const bool bland = degenerate_run > 50;
      Index enter = -1;
      double best = -tol_;
      for (Index j = 0; j < allowed_cols; ++j) {
        const double rc = t_(m_, j);
        if (rc < best) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return true;

      Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a > tol_) {
          const double q = t_(i, n_ + m_) / a;
          if (q < ratio - tol_ ||
              (q <= ratio + tol_ && leave >= 0 &&
               basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
            ratio = std::min(q, ratio);
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      degenerate_run = ratio <= tol_ ? degenerate_run + 1 : 0;
      pivot(leave, enter);
      ++pivots;
    }
  }

  void pivot(Index row, Index col) {
    t_.row(row) /= t_(row, col);
    for (Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // After phase 1: pivot zero-level artificials out where a structural column allows it.
  void expel_artificials() {
    for (Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      for (Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  double objective_value() const { return -t_(m_, n_ + m_); }

  VectorXd primal() const {
    VectorXd x = VectorXd::Zero(n_);
    for (Index i = 0; i < m_; ++i) {
      const Index b = basis_[static_cast<std::size_t>(i)];
      if (b < n_) x[b] = t_(i, n_ + m_);
    }
    return x;
  }

  VectorXd dual() const {
    VectorXd y(m_);
    for (Index i = 0; i < m_; ++i) y[i] = -t_(m_, n_ + i) * sign_[i];
    return y;
  }

  Index rows() const { return m_; }
  Index cols() const { return n_; }

 private:
  Index m_, n_;
  double tol_;
  MatrixXd t_;
  VectorXd sign_;
  VectorXd cost_;
  std::vector<Index> basis_;
};

}  // namespace

LpResult solve_dense(const LinearProgram& lp, double tol) {
  if (lp.A.rows() != lp.b.size() || lp.A.cols() != lp.c.size())
    throw ValidationError("solve_dense: inconsistent LP dimensions");
  const Index m = lp.A.rows();
  const Index n = lp.A.cols();
  Tableau tab(lp, tol);
  LpResult out;

  VectorXd phase1 = VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.set_objective(phase1);
  tab.optimize(n + m, out.pivots);
  const double scale = 1.0 + lp.b.cwiseAbs().sum();
  if (tab.objective_value() > 1e-9 * scale) {
    out.status = LpStatus::infeasible;
    return out;
  }
  tab.expel_artificials();

  VectorXd phase2 = VectorXd::Zero(n + m);
  phase2.head(n) = lp.c;
  tab.set_objective(phase2);
  if (!tab.optimize(n, out.pivots)) {
    out.status = LpStatus::unbounded;
    return out;
  }
  out.status = LpStatus::optimal;
  out.x = tab.primal();
  out.objective = lp.c.dot(out.x);
  out.dual = tab.dual();
  return out;
}

}  // namespace flatness::lp
