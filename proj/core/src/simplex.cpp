#include "simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cofidec::detail {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kReducedCostEps = 1e-9;
constexpr double kPhase1FeasEps = 1e-7;

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), t_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {}

  double& at(int r, int c) { return t_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  double at(int r, int c) const { return t_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  double& rhs(int r) { return at(r, cols_); }
  double& obj(int c) { return at(rows_, c); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void pivot(int pr, int pc) {
    const double pv = at(pr, pc);
    for (int c = 0; c <= cols_; ++c) at(pr, c) /= pv;
    at(pr, pc) = 1.0;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

 private:
  int rows_, cols_;
  std::vector<double> t_;
};

// Runs simplex pivots until no entering column remains. `n_enterable` caps
// the columns eligible to enter (excludes artificials in phase 2).
void run_pivots(Tableau& t, std::vector<int>& basis, int n_enterable, long& iter_budget) {
  const int rows = t.rows();
  long iters = 0;
  const long bland_after = 200 + 10L * (rows + n_enterable);
  while (true) {
    if (--iter_budget < 0) throw std::runtime_error("simplex: pivot cap exceeded");
    ++iters;
    const bool bland = iters > bland_after;

    int enter = -1;
    if (bland) {
      for (int c = 0; c < n_enterable; ++c) {
        if (t.obj(c) < -kReducedCostEps) {
          enter = c;
          break;
        }
      }
    } else {
      double best = -kReducedCostEps;
      for (int c = 0; c < n_enterable; ++c) {
        if (t.obj(c) < best) {
          best = t.obj(c);
          enter = c;
        }
      }
    }
    if (enter < 0) return;  // optimal

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows; ++r) {
      const double a = t.at(r, enter);
      if (a <= kPivotEps) continue;
      // rhs can pick up a tiny negative from rounding; treat it as zero.
      const double ratio = t.rhs(r) <= 0.0 ? 0.0 : t.rhs(r) / a;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && (leave < 0 || basis[r] < basis[leave]))) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave < 0) throw std::runtime_error("simplex: unbounded");

    t.pivot(leave, enter);
    basis[leave] = enter;
  }
}

}  // namespace

LpResult solve_equality_lp(int m, int n, std::vector<double> A, std::vector<double> b,
                           const std::vector<double>& c) {
  if (static_cast<std::size_t>(m) * n != A.size() || b.size() != static_cast<std::size_t>(m) ||
      c.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("solve_equality_lp: shape mismatch");

  for (int r = 0; r < m; ++r) {
    if (b[r] < 0.0) {
      b[r] = -b[r];
      for (int j = 0; j < n; ++j) A[static_cast<std::size_t>(r) * n + j] *= -1.0;
    }
  }

  const int cols = n + m;  // structural + artificial
  Tableau t(m, cols);
  std::vector<int> basis(m);
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < n; ++j) t.at(r, j) = A[static_cast<std::size_t>(r) * n + j];
    t.at(r, n + r) = 1.0;
    t.rhs(r) = b[r];
    basis[r] = n + r;
  }

  // Phase 1: minimize the artificial sum. With the artificial basis the
  // reduced cost of structural column j is -sum_r A[r][j].
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += t.at(r, j);
    t.obj(j) = -s;
  }
  double phase1_rhs = 0.0;
  for (int r = 0; r < m; ++r) phase1_rhs += t.rhs(r);
  t.obj(cols) = -phase1_rhs;

  long iter_budget = 200000;
  run_pivots(t, basis, n, iter_budget);

  const double phase1_obj = -t.obj(cols);
  LpResult res;
  if (phase1_obj > kPhase1FeasEps) {
    res.feasible = false;
    return res;
  }

  // Drive zero-level artificials out of the basis where a structural pivot
  // exists; rows with no such pivot are redundant and stay inert.
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n) continue;
    int pc = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(t.at(r, j)) > kPivotEps) {
        pc = j;
        break;
      }
    }
    if (pc >= 0) {
      t.pivot(r, pc);
      basis[r] = pc;
    }
  }

  // Phase 2 objective row: c_j - c_B . B^-1 A_j over structural columns.
  for (int j = 0; j <= cols; ++j) t.obj(j) = 0.0;
  for (int j = 0; j < n; ++j) {
    double rc = c[j];
    for (int r = 0; r < m; ++r)
      if (basis[r] < n) rc -= c[basis[r]] * t.at(r, j);
    t.obj(j) = rc;
  }

  run_pivots(t, basis, n, iter_budget);

  res.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (basis[r] < n) res.x[basis[r]] = std::max(0.0, t.rhs(r));
  res.objective = 0.0;
  for (int j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
  res.feasible = true;
  return res;
}

}  // namespace cofidec::detail
