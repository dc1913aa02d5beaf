#pragma once

#include "cmdp/types.hpp"

#include <Eigen/Dense>

#include <vector>

namespace cmdp {

// Canonical LP: maximize objective . x  subject to
//   eq_lhs x = eq_rhs,  ineq_lhs x <= ineq_rhs,  x >= 0.
template <class Scalar>
struct LpProblemT {
  VectorX<Scalar> objective;
  MatrixX<Scalar> eq_lhs;
  VectorX<Scalar> eq_rhs;
  MatrixX<Scalar> ineq_lhs;
  VectorX<Scalar> ineq_rhs;

  int num_vars() const { return static_cast<int>(objective.size()); }
};
using LpProblem = LpProblemT<double>;

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    default: return "iteration-limit";
  }
}

template <class Scalar>
struct LpSolutionT {
  LpStatus status = LpStatus::infeasible;
  VectorX<Scalar> x;
  Scalar objective_value = Scalar(0);
  VectorX<Scalar> eq_duals;    // one multiplier per equality row
  VectorX<Scalar> ineq_duals;  // one multiplier per inequality row
};
using LpSolution = LpSolutionT<double>;

// Two-phase simplex on a dense tableau. Pricing is largest-coefficient with
// Bland's rule engaged whenever the objective stalls on degenerate pivots,
// so cycling is impossible; the tableau is periodically recomputed from the
// basis (and re-verified before optimal/unbounded are declared) to keep
// thousands of pivots from accumulating roundoff. Dependent rows (the flow
// system plus the normalization row is rank-deficient) are tolerated: their
// artificials stay basic at level zero after phase 1. Deterministic for
// identical inputs.
template <class Scalar>
LpSolutionT<Scalar> solve_lp(const LpProblemT<Scalar>& problem,
                             Scalar feas_tol = Scalar(1e-7),
                             Scalar opt_tol = Scalar(1e-9)) {
  const int n = problem.num_vars();
  const int E = static_cast<int>(problem.eq_rhs.size());
  const int U = static_cast<int>(problem.ineq_rhs.size());
  const int m = E + U;
  if ((E > 0 && problem.eq_lhs.cols() != n) || (U > 0 && problem.ineq_lhs.cols() != n) ||
      problem.eq_lhs.rows() != E || problem.ineq_lhs.rows() != U)
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  if (E > 0 && !problem.eq_rhs.allFinite()) throw std::invalid_argument("solve_lp: eq rhs not finite");
  if (U > 0 && !problem.ineq_rhs.allFinite()) throw std::invalid_argument("solve_lp: ineq rhs not finite");

  const Scalar piv_tol = Scalar(1e-9);

  // Standard form: [structural | slack] with a slack identity on the
  // inequality rows, rows sign-normalized to b >= 0.
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(m, n + U);
  VectorX<Scalar> b(m);
  if (E > 0) {
    A.topLeftCorner(E, n) = problem.eq_lhs;
    b.head(E) = problem.eq_rhs;
  }
  if (U > 0) {
    A.block(E, 0, U, n) = problem.ineq_lhs;
    A.block(E, n, U, U).setIdentity();
    b.tail(U) = problem.ineq_rhs;
  }
  std::vector<Scalar> row_sign(m, Scalar(1));
  for (int i = 0; i < m; ++i) {
    if (b[i] < Scalar(0)) {
      A.row(i) = -A.row(i);
      b[i] = -b[i];
      row_sign[i] = Scalar(-1);
    }
  }

  // One artificial per row without a ready-made basic slack.
  std::vector<int> art_row;
  std::vector<int> basis(m, -1);
  for (int i = 0; i < m; ++i) {
    if (i >= E && row_sign[i] > Scalar(0))
      basis[i] = n + (i - E);
    else
      art_row.push_back(i);
  }
  const int n_art = static_cast<int>(art_row.size());
  const int total = n + U + n_art;

  MatrixX<Scalar> full = MatrixX<Scalar>::Zero(m, total);  // immutable standard form
  full.leftCols(n + U) = A;
  for (int k = 0; k < n_art; ++k) {
    full(art_row[k], n + U + k) = Scalar(1);
    basis[art_row[k]] = n + U + k;
  }

  MatrixX<Scalar> T(m, total + 1);
  VectorX<Scalar> obj;          // reduced costs of the active phase
  Scalar obj_value = Scalar(0);
  VectorX<Scalar> phase_cost;   // c of the active phase

  const long max_pivots = 50L * (m + total);
  long pivots = 0;
  int since_refactor = 0;

  auto rebuild_objective = [&]() {
    obj = phase_cost;
    obj_value = Scalar(0);
    for (int i = 0; i < m; ++i) {
      const Scalar cb = phase_cost[basis[i]];
      if (cb != Scalar(0)) {
        obj -= cb * T.row(i).head(total).transpose();
        obj_value += cb * T(i, total);
      }
    }
    for (int i = 0; i < m; ++i) obj[basis[i]] = Scalar(0);
  };

  // Recompute the tableau exactly from the basis: T = B^{-1} [full | b].
  auto refactor = [&]() {
    MatrixX<Scalar> B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = full.col(basis[i]);
    Eigen::PartialPivLU<MatrixX<Scalar>> lu(B);
    T.leftCols(total) = lu.solve(full);
    T.col(total) = lu.solve(b);
    rebuild_objective();
    since_refactor = 0;
  };

  auto pivot = [&](int row, int col) {
    T.row(row) /= T(row, col);
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const Scalar f = T(i, col);
      if (f != Scalar(0)) {
        T.row(i) -= f * T.row(row);
        T(i, col) = Scalar(0);
      }
    }
    const Scalar fo = obj[col];
    if (fo != Scalar(0)) {
      obj -= fo * T.row(row).head(total).transpose();
      obj_value += fo * T(row, total);
      obj[col] = Scalar(0);
    }
    basis[row] = col;
    ++pivots;
    ++since_refactor;
  };

  // Entering: largest reduced cost, or lowest index while Bland's rule is
  // engaged. Leaving: minimum ratio, ties to the lowest basic variable
  // index (the Bland tie-break). Returns optimal/unbounded/limit.
  auto run_phase = [&](int allowed_cols) -> LpStatus {
    bool bland = false;
    int stalled = 0;
    for (;;) {
      int enter = -1;
      if (bland) {
        for (int j = 0; j < allowed_cols; ++j)
          if (obj[j] > opt_tol) {
            enter = j;
            break;
          }
      } else {
        Scalar best = opt_tol;
        for (int j = 0; j < allowed_cols; ++j)
          if (obj[j] > best) {
            best = obj[j];
            enter = j;
          }
      }
      if (enter < 0) {
        if (since_refactor > 0) {  // re-verify optimality on a clean tableau
          refactor();
          bool improving = false;
          for (int j = 0; j < allowed_cols && !improving; ++j) improving = obj[j] > opt_tol;
          if (improving) continue;
        }
        return LpStatus::optimal;
      }
      int leave = -1;
      Scalar best_ratio = Scalar(0);
      for (int i = 0; i < m; ++i) {
        if (T(i, enter) > piv_tol) {
          const Scalar ratio = T(i, total) / T(i, enter);
          if (leave < 0 || ratio < best_ratio ||
              (ratio == best_ratio && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) {
        if (since_refactor > 0) {  // re-verify the ray on a clean tableau
          refactor();
          continue;
        }
        return LpStatus::unbounded;
      }
      const Scalar before = obj_value;
      pivot(leave, enter);
      if (obj_value > before + Scalar(1e-13) * (Scalar(1) + std::abs(before))) {
        stalled = 0;
        bland = false;
      } else if (++stalled > 2 * m) {
        bland = true;  // degenerate stretch: Bland's rule precludes cycling
      }
      if (pivots > max_pivots) return LpStatus::iteration_limit;
      if (since_refactor >= 128) refactor();
    }
  };

  LpSolutionT<Scalar> out;

  phase_cost = VectorX<Scalar>::Zero(total);
  if (n_art > 0) phase_cost.tail(n_art).setConstant(Scalar(-1));
  refactor();
  if (n_art > 0) {
    const LpStatus st = run_phase(total);
    if (st == LpStatus::iteration_limit) {
      out.status = st;
      return out;
    }
    if (obj_value < -feas_tol) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // Pivot leftover artificials out where possible; rows with no usable
    // entry are dependent and stay parked at level zero.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + U) continue;
      int col = -1;
      for (int j = 0; j < n + U; ++j) {
        if (std::abs(T(i, j)) > Scalar(1e-7)) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(i, col);
    }
  }

  phase_cost = VectorX<Scalar>::Zero(total);
  phase_cost.head(n) = problem.objective;
  refactor();
  const LpStatus st = run_phase(n + U);
  out.status = st;
  if (out.status != LpStatus::optimal) return out;

  refactor();
  out.x = VectorX<Scalar>::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) out.x[basis[i]] = T(i, total);
  out.objective_value = problem.objective.dot(out.x);

  // Duals from B^T y = c_B on the sign-normalized system, mapped back to
  // the original row orientation.
  MatrixX<Scalar> B(m, m);
  VectorX<Scalar> cb(m);
  for (int i = 0; i < m; ++i) {
    B.col(i) = full.col(basis[i]);
    cb[i] = phase_cost[basis[i]];
  }
  VectorX<Scalar> y = B.transpose().partialPivLu().solve(cb);
  out.eq_duals.resize(E);
  out.ineq_duals.resize(U);
  for (int i = 0; i < E; ++i) out.eq_duals[i] = row_sign[i] * y[i];
  for (int i = 0; i < U; ++i) out.ineq_duals[i] = row_sign[E + i] * y[E + i];
  return out;
}

}  // namespace cmdp
