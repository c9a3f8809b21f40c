#pragma once

#include "cofidec/types.hpp"

namespace cofidec {

struct ExactOtResult {
  double cost = 0.0;
  TransportPlan plan;
};

struct SinkhornResult {
  double cost = 0.0;  // sharp cost <plan, C>, entropy term excluded
  TransportPlan plan;
  int iterations = 0;
  SolveStatus status = SolveStatus::Converged;
};

struct LpBarycenterResult {
  Distribution barycenter;
  double objective = 0.0;
};

struct SinkhornBarycenterResult {
  Distribution barycenter;
  int iterations = 0;
  SolveStatus status = SolveStatus::Converged;
};

/// Exact Wasserstein distance between two distributions on a shared support,
/// solved as the transportation linear program. The plan is feasible to 1e-9.
/// Throws on support mismatch or support size > max_support.
ExactOtResult exact_wasserstein(const Distribution& p, const Distribution& q,
                                const GroundMetric& metric, int max_support = 64);

/// Entropic OT via log-domain Sinkhorn iterations. Marginals are floored at
/// cfg.min_prob (auto 1e-8/n when 0) and renormalized before solving.
/// Non-convergence is reported through status, never thrown.
SinkhornResult sinkhorn(const Distribution& p, const Distribution& q,
                        const GroundMetric& metric, const SinkhornConfig& cfg);

/// Exact weighted barycenter over a shared support of size <= 8, solved as a
/// single joint LP over K couplings sharing a free common marginal.
LpBarycenterResult lp_barycenter(const std::vector<Distribution>& dists,
                                 const std::vector<double>& weights,
                                 const GroundMetric& metric);

/// Entropic barycenter via iterative Bregman projections in the log domain.
/// Stops when successive iterates differ by <= cfg.tol in total variation.
SinkhornBarycenterResult sinkhorn_barycenter(const std::vector<Distribution>& dists,
                                             const std::vector<double>& weights,
                                             const GroundMetric& metric,
                                             const SinkhornConfig& cfg);

}  // namespace cofidec
