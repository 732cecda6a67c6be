#pragma once

// Dense tableau simplex for small standard-form linear programs
//
//   minimize c.x  subject to  A x = b,  x >= 0,
//
// started from a caller-supplied feasible basis. The tableau carries B^-1 in
// extra columns so the optimal dual vector y = c_B B^-1 comes for free.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "icek/errors.hpp"

namespace icek::lp {

struct Problem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major, rows x cols
  std::vector<double> b;
  std::vector<double> c;

  Problem(std::size_t m, std::size_t n) : rows(m), cols(n), a(m * n, 0.0), b(m, 0.0), c(n, 0.0) {}

  double& at(std::size_t r, std::size_t col) { return a[r * cols + col]; }
  double at(std::size_t r, std::size_t col) const { return a[r * cols + col]; }
};

enum class PivotRule {
  // Smallest-index entering and leaving variable; never cycles.
  Bland,
  // Most negative reduced cost; falls back to Bland after a run of
  // degenerate pivots.
  Dantzig,
};

struct Options {
  double tol = 1e-9;
  PivotRule rule = PivotRule::Bland;
  std::size_t max_pivots = 1'000'000;
  std::size_t degenerate_run_limit = 50;
};

struct Solution {
  std::vector<double> x;
  std::vector<double> duals;
  double objective = 0.0;
  std::vector<std::size_t> basis;
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Problem& p)
      : m_(p.rows), n_(p.cols), width_(p.cols + p.rows + 1), t_(p.rows * width_, 0.0),
        cost_(width_, 0.0) {
    for (std::size_t r = 0; r < m_; ++r) {
      for (std::size_t j = 0; j < n_; ++j) t_[r * width_ + j] = p.at(r, j);
      t_[r * width_ + n_ + r] = 1.0;
      t_[r * width_ + width_ - 1] = p.b[r];
    }
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = p.c[j];
  }

  double* row(std::size_t r) { return t_.data() + r * width_; }
  const double* row(std::size_t r) const { return t_.data() + r * width_; }
  double rhs(std::size_t r) const { return row(r)[width_ - 1]; }
  double& cost(std::size_t j) { return cost_[j]; }
  double objective() const { return -cost_[width_ - 1]; }
  std::size_t width() const { return width_; }

  // Gauss-Jordan pivot on (r, j), applied to every row and the cost row.
  void pivot(std::size_t r, std::size_t j) {
    double* pr = row(r);
    const double inv = 1.0 / pr[j];
    nz_.clear();
    for (std::size_t k = 0; k < width_; ++k) {
      if (pr[k] != 0.0) {
        pr[k] *= inv;
        nz_.push_back(k);
      }
    }
    pr[j] = 1.0;
    auto eliminate = [&](double* target) {
      const double factor = target[j];
      if (factor == 0.0) return;
      for (std::size_t k : nz_) target[k] -= factor * pr[k];
      target[j] = 0.0;
    };
    for (std::size_t i = 0; i < m_; ++i)
      if (i != r) eliminate(row(i));
    eliminate(cost_.data());
  }

 private:
  std::size_t m_, n_, width_;
  std::vector<double> t_;
  std::vector<double> cost_;  // reduced costs; last entry holds -objective
  std::vector<std::size_t> nz_;
};

}  // namespace detail

// Solves the problem from `basis` (one column index per row, all columns
// distinct and forming a nonsingular, primal feasible basis).
inline Solution minimize(const Problem& p, std::vector<std::size_t> basis, const Options& opt = {}) {
  const std::size_t m = p.rows;
  const std::size_t n = p.cols;
  if (p.a.size() != m * n || p.b.size() != m || p.c.size() != n)
    throw InputError("lp: inconsistent problem dimensions");
  if (basis.size() != m) throw InputError("lp: basis must have one column per row");

  detail::Tableau t(p);
  const std::size_t rhs_col = t.width() - 1;

  // Bring the starting basis into canonical form, choosing the pivot row
  // with the largest entry among rows not yet assigned. Pivoting the cost
  // row along turns it into the reduced costs.
  std::vector<std::size_t> row_var(m);
  std::vector<bool> assigned(m, false);
  for (std::size_t j : basis) {
    if (j >= n) throw InputError("lp: basis column out of range");
    std::size_t best = m;
    double best_abs = opt.tol;
    for (std::size_t r = 0; r < m; ++r) {
      if (assigned[r]) continue;
      const double v = std::abs(t.row(r)[j]);
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (best == m) throw NumericalError("lp: starting basis is singular");
    t.pivot(best, j);
    assigned[best] = true;
    row_var[best] = j;
  }
  for (std::size_t r = 0; r < m; ++r) {
    if (t.rhs(r) < -opt.tol) throw NumericalError("lp: starting basis is infeasible");
    if (t.rhs(r) < 0.0) t.row(r)[rhs_col] = 0.0;
  }


  Solution sol;
  bool bland = opt.rule == PivotRule::Bland;
  std::size_t degenerate_run = 0;
  for (;;) {
    std::size_t enter = n;
    double best = -opt.tol;
    for (std::size_t j = 0; j < n; ++j) {
      const double rc = t.cost(j);
      if (rc < best) {
        enter = j;
        if (bland) break;
        best = rc;
      }
    }
    if (enter == n) break;

    std::size_t leave = m;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double a = t.row(r)[enter];
      if (a <= opt.tol) continue;
      const double ratio = t.rhs(r) / a;
      if (ratio < best_ratio - 1e-12 ||
          (ratio <= best_ratio + 1e-12 && leave < m && row_var[r] < row_var[leave])) {
        if (ratio < best_ratio) best_ratio = ratio;
        leave = r;
      }
    }
    if (leave == m) throw NumericalError("lp: objective is unbounded below");

    if (++sol.pivots > opt.max_pivots)
      throw NumericalError("lp: pivot limit of " + std::to_string(opt.max_pivots) + " reached");
    degenerate_run = best_ratio <= opt.tol ? degenerate_run + 1 : 0;
    if (!bland && degenerate_run > opt.degenerate_run_limit) bland = true;

    t.pivot(leave, enter);
    row_var[leave] = enter;
    for (std::size_t r = 0; r < m; ++r)
      if (t.rhs(r) < 0.0 && t.rhs(r) > -opt.tol) t.row(r)[rhs_col] = 0.0;
  }

  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) sol.x[row_var[r]] = t.rhs(r);
  sol.duals.resize(m);
  for (std::size_t r = 0; r < m; ++r) sol.duals[r] = -t.cost(n + r);
  sol.objective = t.objective();
  sol.basis = std::move(row_var);
  return sol;
}

}  // namespace icek::lp
