#pragma once

#include "cofidec/ot.hpp"
#include "cofidec/types.hpp"

namespace cofidec {

enum class FusionSolver { ExactLp, Sinkhorn };

FusionSolver fusion_solver_from_string(const std::string& s);
std::string to_string(FusionSolver s);

struct FusionConfig {
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  int top_k = 32;                // per-source support restriction
  double smoothing_alpha = 1e-6; /// keeps Sinkhorn marginals strictly positive after restriction
  FusionSolver solver = FusionSolver::Sinkhorn;
  SinkhornConfig sinkhorn;
};

struct FusedStep {
  Distribution fused;
  std::vector<int> restricted_support;
  std::array<double, 3> per_source_cost{0.0, 0.0, 0.0};  // diagnostics only
  SolveStatus solver_status = SolveStatus::Converged;
  bool top_k_clamped = false;
};

struct RestrictedSources {
  std::array<Distribution, 3> dists;  // on the common support, renormalized
  std::vector<int> support;           // sorted union of per-source top_k ids
  bool clamped = false;               // top_k exceeded the vocabulary
};

/// Restricts three same-vocabulary distributions to the union of their
/// per-source top_k ids (ties by lower id) and renormalizes each. The union
/// always contains every source's argmax.
RestrictedSources restrict_support(const Distribution& p_v, const Distribution& p_c,
                                   const Distribution& p_f, int top_k);

/// (1-alpha) * p + alpha * uniform over the same support, 0 <= alpha < 1.
Distribution smooth(const Distribution& p, double alpha);

/// One fusion step: restrict, smooth, then solve the weighted barycenter of
/// the three sources under the configured solver.
FusedStep fuse_distributions(const Distribution& p_v, const Distribution& p_c,
                             const Distribution& p_f, const GroundMetric& metric,
                             const FusionConfig& cfg);

}  // namespace cofidec
