#include "cofidec/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cofidec {

FusionSolver fusion_solver_from_string(const std::string& s) {
  if (s == "exact_lp" || s == "exact") return FusionSolver::ExactLp;
  if (s == "sinkhorn") return FusionSolver::Sinkhorn;
  throw std::invalid_argument("unknown fusion solver: " + s);
}

std::string to_string(FusionSolver s) {
  return s == FusionSolver::ExactLp ? "exact_lp" : "sinkhorn";
}

namespace {

std::vector<int> top_k_ids(const Distribution& d, int k) {
  std::vector<int> order(d.support_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (d.probs[a] != d.probs[b]) return d.probs[a] > d.probs[b];
    return d.support_ids[a] < d.support_ids[b];
  });
  std::vector<int> ids;
  ids.reserve(k);
  for (int r = 0; r < k; ++r) ids.push_back(d.support_ids[order[r]]);
  return ids;
}

Distribution restrict_to(const Distribution& d, const std::vector<int>& ids) {
  std::vector<double> w(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) w[i] = d.prob_of(ids[i]);
  return Distribution::normalized(ids, std::move(w));
}

}  // namespace

RestrictedSources restrict_support(const Distribution& p_v, const Distribution& p_c,
                                   const Distribution& p_f, int top_k) {
  if (top_k < 1) throw std::invalid_argument("restrict_support: top_k must be >= 1");
  if (p_v.support_ids != p_c.support_ids || p_v.support_ids != p_f.support_ids)
    throw std::invalid_argument("restrict_support: sources must share one vocabulary");

  RestrictedSources out;
  const int vocab = p_v.size();
  int k = top_k;
  if (k > vocab) {
    k = vocab;
    out.clamped = true;
  }

  std::set<int> support;
  for (const Distribution* d : {&p_v, &p_c, &p_f})
    for (int id : top_k_ids(*d, k)) support.insert(id);
  out.support.assign(support.begin(), support.end());

  out.dists = {restrict_to(p_v, out.support), restrict_to(p_c, out.support),
               restrict_to(p_f, out.support)};
  return out;
}

Distribution smooth(const Distribution& p, double alpha) {
  if (!(alpha >= 0.0) || alpha >= 1.0)
    throw std::invalid_argument("smooth: alpha must lie in [0, 1)");
  if (alpha == 0.0) return p;
  const double u = 1.0 / p.size();
  std::vector<double> q(p.probs.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = (1.0 - alpha) * p.probs[i] + alpha * u;
  return Distribution::make(p.support_ids, std::move(q));
}

FusedStep fuse_distributions(const Distribution& p_v, const Distribution& p_c,
                             const Distribution& p_f, const GroundMetric& metric,
                             const FusionConfig& cfg) {
  double wsum = cfg.weights[0] + cfg.weights[1] + cfg.weights[2];
  for (double w : cfg.weights)
    if (!(w > 0.0)) throw std::invalid_argument("fuse_distributions: weights must be positive");
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("fuse_distributions: weights must sum to 1");
  if (p_v.support_ids.back() >= metric.size)
    throw std::invalid_argument("fuse_distributions: metric does not cover the vocabulary");

  RestrictedSources r = restrict_support(p_v, p_c, p_f, cfg.top_k);
  std::vector<Distribution> sources;
  sources.reserve(3);
  for (const Distribution& d : r.dists) sources.push_back(smooth(d, cfg.smoothing_alpha));

  const std::vector<double> weights(cfg.weights.begin(), cfg.weights.end());

  FusedStep step;
  step.restricted_support = r.support;
  step.top_k_clamped = r.clamped;

  if (cfg.solver == FusionSolver::ExactLp) {
    if (static_cast<int>(r.support.size()) > 8)
      throw std::invalid_argument(
          "fuse_distributions: exact_lp requires restricted support <= 8");
    LpBarycenterResult bary = lp_barycenter(sources, weights, metric);
    step.fused = std::move(bary.barycenter);
    step.solver_status = SolveStatus::Converged;
    for (int k = 0; k < 3; ++k)
      step.per_source_cost[k] = exact_wasserstein(step.fused, sources[k], metric).cost;
  } else {
    SinkhornBarycenterResult bary = sinkhorn_barycenter(sources, weights, metric, cfg.sinkhorn);
    step.fused = std::move(bary.barycenter);
    step.solver_status = bary.status;
    for (int k = 0; k < 3; ++k)
      step.per_source_cost[k] = sinkhorn(step.fused, sources[k], metric, cfg.sinkhorn).cost;
  }
  return step;
}

}  // namespace cofidec
