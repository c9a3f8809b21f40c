#pragma once

#include <vector>

namespace cofidec::detail {

struct LpResult {
  std::vector<double> x;
  double objective = 0.0;
  bool feasible = false;
};

// Minimizes c.x subject to A x = b, x >= 0, with A row-major m x n.
// Dense two-phase tableau simplex; Dantzig pricing with a deterministic
// switch to Bland's rule on stall, so it terminates on degenerate problems.
// Throws std::runtime_error if the pivot cap is exceeded.
LpResult solve_equality_lp(int m, int n, std::vector<double> A, std::vector<double> b,
                           const std::vector<double>& c);

}  // namespace cofidec::detail
