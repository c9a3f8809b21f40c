#include "cofidec/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "simplex.hpp"

namespace cofidec {

namespace {

constexpr int kLpBarycenterMaxSupport = 8;

void require_shared_support(const Distribution& p, const Distribution& q) {
  if (p.support_ids != q.support_ids)
    throw std::invalid_argument("ot: distributions must share the same support ids");
}

void require_metric_covers(const GroundMetric& metric, const Distribution& d) {
  if (d.support_ids.back() >= metric.size)
    throw std::invalid_argument("ot: ground metric does not cover the support ids");
}

std::vector<double> normalized_probs(const Distribution& d) {
  std::vector<double> p = d.probs;
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  return p;
}

// Marginals floored at min_prob then renormalized; Sinkhorn needs strictly
// positive mass everywhere.
std::vector<double> floored_probs(const Distribution& d, double min_prob) {
  const int n = d.size();
  double mp = min_prob;
  if (mp == 0.0) mp = 1e-8 / n;
  if (!(mp > 0.0) || mp >= 1.0 / n)
    throw std::invalid_argument("ot: min_prob must lie in (0, 1/support_size)");
  std::vector<double> p = d.probs;
  double s = 0.0;
  for (double& v : p) {
    v = std::max(v, mp);
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Cost submatrix restricted to the support ids, row-major n*n.
std::vector<double> support_costs(const std::vector<int>& ids, const GroundMetric& metric) {
  const int n = static_cast<int>(ids.size());
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(i) * n + j] = metric.at(ids[i], ids[j]);
  return c;
}

TransportPlan plan_from_mass(int n, std::vector<double> mass, const std::vector<double>& p,
                             const std::vector<double>& q) {
  TransportPlan plan;
  plan.size = n;
  plan.mass = std::move(mass);
  double row_l1 = 0.0, col_l1 = 0.0;
  for (int i = 0; i < n; ++i) {
    double rs = 0.0;
    for (int j = 0; j < n; ++j) rs += plan.at(i, j);
    row_l1 += std::abs(rs - p[i]);
  }
  for (int j = 0; j < n; ++j) {
    double cs = 0.0;
    for (int i = 0; i < n; ++i) cs += plan.at(i, j);
    col_l1 += std::abs(cs - q[j]);
  }
  plan.row_marginal_err = 0.5 * row_l1;
  plan.col_marginal_err = 0.5 * col_l1;
  return plan;
}

double sharp_cost(const TransportPlan& plan, const std::vector<double>& costs) {
  double c = 0.0;
  for (std::size_t k = 0; k < plan.mass.size(); ++k) c += plan.mass[k] * costs[k];
  return c;
}

}  // namespace

ExactOtResult exact_wasserstein(const Distribution& p, const Distribution& q,
                                const GroundMetric& metric, int max_support) {
  require_shared_support(p, q);
  require_metric_covers(metric, p);
  const int n = p.size();
  if (n > max_support)
    throw std::invalid_argument("exact_wasserstein: support too large for exact mode");

  const std::vector<double> pp = normalized_probs(p);
  const std::vector<double> qq = normalized_probs(q);
  const std::vector<double> costs = support_costs(p.support_ids, metric);

  ExactOtResult res;
  if (n == 1) {
    res.plan = plan_from_mass(1, {1.0}, pp, qq);
    res.cost = 0.0;
    return res;
  }

  // Transportation LP: rows are the n row-sum constraints plus the first
  // n-1 column-sum constraints (the last one is redundant).
  const int m = 2 * n - 1;
  const int nvars = n * n;
  std::vector<double> A(static_cast<std::size_t>(m) * nvars, 0.0);
  std::vector<double> b(m, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A[static_cast<std::size_t>(i) * nvars + i * n + j] = 1.0;
    b[i] = pp[i];
  }
  for (int j = 0; j + 1 < n; ++j) {
    const int r = n + j;
    for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(r) * nvars + i * n + j] = 1.0;
    b[r] = qq[j];
  }

  detail::LpResult lp = detail::solve_equality_lp(m, nvars, std::move(A), std::move(b), costs);
  if (!lp.feasible) throw std::runtime_error("exact_wasserstein: LP reported infeasible");

  res.plan = plan_from_mass(n, std::move(lp.x), p.probs, q.probs);
  res.cost = lp.objective;
  return res;
}

SinkhornResult sinkhorn(const Distribution& p, const Distribution& q, const GroundMetric& metric,
                        const SinkhornConfig& cfg) {
  require_shared_support(p, q);
  require_metric_covers(metric, p);
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("sinkhorn: tol must be positive");
  if (cfg.max_iter < 1) throw std::invalid_argument("sinkhorn: max_iter must be positive");

  const int n = p.size();
  const double eps = cfg.epsilon;
  const std::vector<double> pp = floored_probs(p, cfg.min_prob);
  const std::vector<double> qq = floored_probs(q, cfg.min_prob);
  const std::vector<double> costs = support_costs(p.support_ids, metric);

  std::vector<double> log_p(n), log_q(n);
  for (int i = 0; i < n; ++i) {
    log_p[i] = std::log(pp[i]);
    log_q[i] = std::log(qq[i]);
  }

  // Plain log-domain iteration from cold potentials. No epsilon schedule
  // here: both marginals are hard constraints, so the iteration cannot park
  // at a no-transport fixed point, and a staged warm start would leave a
  // residual the slow tail contraction cannot polish below tight tolerances.
  std::vector<double> f(n, 0.0), g(n, 0.0), scratch(n);
  std::vector<double> mass(static_cast<std::size_t>(n) * n);

  SinkhornResult res;
  res.status = SolveStatus::IterationLimit;
  int it = 0;
  for (it = 1; it <= cfg.max_iter; ++it) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i)
        scratch[i] = (f[i] - costs[static_cast<std::size_t>(i) * n + j]) / eps;
      g[j] = eps * (log_q[j] - logsumexp(scratch));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        scratch[j] = (g[j] - costs[static_cast<std::size_t>(i) * n + j]) / eps;
      f[i] = eps * (log_p[i] - logsumexp(scratch));
    }

    bool finite = true;
    for (int i = 0; i < n && finite; ++i) finite = std::isfinite(f[i]) && std::isfinite(g[i]);
    if (!finite) {
      res.status = SolveStatus::Underflow;
      break;
    }

    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        mass[static_cast<std::size_t>(i) * n + j] =
            std::exp((f[i] + g[j] - costs[static_cast<std::size_t>(i) * n + j]) / eps);
    TransportPlan plan = plan_from_mass(n, mass, pp, qq);
    if (std::max(plan.row_marginal_err, plan.col_marginal_err) <= cfg.tol) {
      res.status = SolveStatus::Converged;
      res.plan = std::move(plan);
      break;
    }
    if (it == cfg.max_iter) res.plan = std::move(plan);
  }
  if (res.plan.size == 0) res.plan = plan_from_mass(n, mass, pp, qq);
  res.iterations = std::min(it, cfg.max_iter);
  res.cost = sharp_cost(res.plan, costs);
  return res;
}

namespace {

void validate_barycenter_inputs(const std::vector<Distribution>& dists,
                                const std::vector<double>& weights, const GroundMetric& metric) {
  if (dists.size() < 2) throw std::invalid_argument("barycenter: need at least 2 distributions");
  if (weights.size() != dists.size())
    throw std::invalid_argument("barycenter: weights/distributions length mismatch");
  double ws = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("barycenter: weights must be positive");
    ws += w;
  }
  if (std::abs(ws - 1.0) > 1e-9)
    throw std::invalid_argument("barycenter: weights must sum to 1");
  for (std::size_t k = 1; k < dists.size(); ++k) require_shared_support(dists[0], dists[k]);
  require_metric_covers(metric, dists[0]);
}

}  // namespace

LpBarycenterResult lp_barycenter(const std::vector<Distribution>& dists,
                                 const std::vector<double>& weights, const GroundMetric& metric) {
  validate_barycenter_inputs(dists, weights, metric);
  const int n = dists[0].size();
  const int K = static_cast<int>(dists.size());
  if (n > kLpBarycenterMaxSupport)
    throw std::invalid_argument("lp_barycenter: support too large for the LP oracle");

  std::vector<double> w = weights;
  double ws = 0.0;
  for (double v : w) ws += v;
  for (double& v : w) v /= ws;

  const std::vector<double> costs = support_costs(dists[0].support_ids, metric);

  // Variables: K couplings (row marginal = barycenter, column marginal =
  // input k) followed by the barycenter itself.
  const int nvars = K * n * n + n;
  const int m = 2 * K * n;
  std::vector<double> A(static_cast<std::size_t>(m) * nvars, 0.0);
  std::vector<double> b(m, 0.0);
  std::vector<double> c(nvars, 0.0);

  auto var = [&](int k, int i, int j) { return k * n * n + i * n + j; };
  const int bary0 = K * n * n;

  int row = 0;
  for (int k = 0; k < K; ++k) {
    const std::vector<double> pk = normalized_probs(dists[k]);
    for (int j = 0; j < n; ++j, ++row) {
      for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(row) * nvars + var(k, i, j)] = 1.0;
      b[row] = pk[j];
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i, ++row) {
      for (int j = 0; j < n; ++j) A[static_cast<std::size_t>(row) * nvars + var(k, i, j)] = 1.0;
      A[static_cast<std::size_t>(row) * nvars + bary0 + i] = -1.0;
      b[row] = 0.0;
    }
  }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        c[var(k, i, j)] = w[k] * costs[static_cast<std::size_t>(i) * n + j];

  detail::LpResult lp = detail::solve_equality_lp(m, nvars, std::move(A), std::move(b), c);
  if (!lp.feasible) throw std::runtime_error("lp_barycenter: LP reported infeasible");

  std::vector<double> bary(lp.x.begin() + bary0, lp.x.begin() + bary0 + n);
  LpBarycenterResult res;
  res.barycenter = Distribution::normalized(dists[0].support_ids, std::move(bary));
  res.objective = lp.objective;
  return res;
}

SinkhornBarycenterResult sinkhorn_barycenter(const std::vector<Distribution>& dists,
                                             const std::vector<double>& weights,
                                             const GroundMetric& metric,
                                             const SinkhornConfig& cfg) {
  validate_barycenter_inputs(dists, weights, metric);
  if (!(cfg.epsilon > 0.0))
    throw std::invalid_argument("sinkhorn_barycenter: epsilon must be positive");
  const int n = dists[0].size();
  const int K = static_cast<int>(dists.size());
  const double eps = cfg.epsilon;

  std::vector<double> w = weights;
  double ws = 0.0;
  for (double v : w) ws += v;
  for (double& v : w) v /= ws;

  const std::vector<double> costs = support_costs(dists[0].support_ids, metric);
  std::vector<std::vector<double>> log_p(K);
  for (int k = 0; k < K; ++k) {
    const std::vector<double> pk = floored_probs(dists[k], cfg.min_prob);
    log_p[k].resize(n);
    for (int i = 0; i < n; ++i) log_p[k][i] = std::log(pk[i]);
  }

  // Iterative Bregman projections on the scaling potentials f_k, g_k, with
  // epsilon scaling: at the target eps alone, exp(-C/eps) can drop below the
  // floored marginals and freeze the iteration at a no-transport fixed
  // point, so earlier stages at larger eps warm-start the potentials.
  std::vector<std::vector<double>> f(K, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> g(K, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> s(K, std::vector<double>(n, 0.0));
  std::vector<double> log_b(n, -std::log(static_cast<double>(n)));
  std::vector<double> scratch(n);

  double max_support_cost = 0.0;
  for (double c : costs) max_support_cost = std::max(max_support_cost, c);

  std::vector<double> schedule;
  for (double e = std::max(eps, max_support_cost / 10.0); e > eps; e *= 0.5)
    schedule.push_back(e);
  schedule.push_back(eps);

  Distribution prev = Distribution::uniform(dists[0].support_ids);
  SinkhornBarycenterResult res;
  res.status = SolveStatus::IterationLimit;

  int total_iters = 0;
  for (std::size_t stage = 0; stage < schedule.size() && total_iters < cfg.max_iter; ++stage) {
    const double e = schedule[stage];
    const bool final_stage = stage + 1 == schedule.size();
    const double stage_tol = final_stage ? cfg.tol : std::max(cfg.tol * 100.0, 1e-6);

    while (total_iters < cfg.max_iter) {
      ++total_iters;
      for (int k = 0; k < K; ++k) {
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i)
            scratch[i] = (f[k][i] - costs[static_cast<std::size_t>(i) * n + j]) / e;
          g[k][j] = e * (log_p[k][j] - logsumexp(scratch));
        }
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j)
            scratch[j] = (g[k][j] - costs[static_cast<std::size_t>(i) * n + j]) / e;
          s[k][i] = logsumexp(scratch);
        }
      }
      for (int i = 0; i < n; ++i) {
        double lb = 0.0;
        for (int k = 0; k < K; ++k) lb += w[k] * (f[k][i] / e + s[k][i]);
        log_b[i] = lb;
      }
      const double lz = logsumexp(log_b);
      for (int i = 0; i < n; ++i) log_b[i] -= lz;
      for (int k = 0; k < K; ++k)
        for (int i = 0; i < n; ++i) f[k][i] = e * (log_b[i] - s[k][i]);

      bool finite = std::isfinite(lz);
      for (int k = 0; k < K && finite; ++k)
        for (int i = 0; i < n && finite; ++i) finite = std::isfinite(f[k][i]);
      if (!finite) {
        res.status = SolveStatus::Underflow;
        res.barycenter = std::move(prev);
        res.iterations = total_iters;
        return res;
      }

      std::vector<double> bvals(n);
      for (int i = 0; i < n; ++i) bvals[i] = std::exp(log_b[i]);
      Distribution cur = Distribution::normalized(dists[0].support_ids, std::move(bvals));
      const double tv = total_variation(cur, prev);
      prev = std::move(cur);
      if (tv <= stage_tol) {
        if (final_stage) res.status = SolveStatus::Converged;
        break;
      }
    }
  }
  res.barycenter = std::move(prev);
  res.iterations = total_iters;
  return res;
}

}  // namespace cofidec
