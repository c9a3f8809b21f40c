#include <benchmark/benchmark.h>

#include "cofidec/fusion.hpp"
#include "cofidec/ot.hpp"
#include "cofidec/rng.hpp"

using namespace cofidec;

namespace {

GroundMetric squared_line_metric(int n) {
  std::vector<std::vector<double>> emb;
  for (int i = 0; i < n; ++i) emb.push_back({static_cast<double>(i)});
  return build_ground_metric(emb, MetricKind::SquaredEuclidean);
}

Distribution random_dist(int n, Rng& rng) {
  std::vector<int> ids(n);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = i;
    w[i] = 0.05 + rng.uniform01();
  }
  return Distribution::normalized(std::move(ids), std::move(w));
}

void BM_ExactWasserstein(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GroundMetric m = squared_line_metric(n);
  Rng rng(42);
  const Distribution p = random_dist(n, rng);
  const Distribution q = random_dist(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(exact_wasserstein(p, q, m).cost);
}
BENCHMARK(BM_ExactWasserstein)->Arg(8)->Arg(24)->Arg(64);

void BM_Sinkhorn(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GroundMetric m = squared_line_metric(n);
  Rng rng(42);
  const Distribution p = random_dist(n, rng);
  const Distribution q = random_dist(n, rng);
  SinkhornConfig cfg;
  cfg.epsilon = 0.01;
  cfg.tol = 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn(p, q, m, cfg).cost);
}
BENCHMARK(BM_Sinkhorn)->Arg(8)->Arg(24)->Arg(64);

void BM_LpBarycenter(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GroundMetric m = squared_line_metric(n);
  Rng rng(7);
  const std::vector<Distribution> d{random_dist(n, rng), random_dist(n, rng),
                                    random_dist(n, rng)};
  const std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (auto _ : state) benchmark::DoNotOptimize(lp_barycenter(d, w, m).objective);
}
BENCHMARK(BM_LpBarycenter)->Arg(4)->Arg(8);

void BM_SinkhornBarycenter(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GroundMetric m = squared_line_metric(n);
  Rng rng(7);
  const std::vector<Distribution> d{random_dist(n, rng), random_dist(n, rng),
                                    random_dist(n, rng)};
  const std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  SinkhornConfig cfg;
  cfg.epsilon = 0.005;
  cfg.tol = 1e-7;
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_barycenter(d, w, m, cfg).iterations);
}
BENCHMARK(BM_SinkhornBarycenter)->Arg(8)->Arg(16);

void BM_FuseStep(benchmark::State& state) {
  const int vocab = 14;
  const GroundMetric m = squared_line_metric(vocab);
  Rng rng(11);
  const Distribution a = random_dist(vocab, rng);
  const Distribution b = random_dist(vocab, rng);
  const Distribution c = random_dist(vocab, rng);
  FusionConfig cfg;
  cfg.solver = state.range(0) == 0 ? FusionSolver::ExactLp : FusionSolver::Sinkhorn;
  cfg.top_k = cfg.solver == FusionSolver::ExactLp ? 2 : 8;
  cfg.sinkhorn.epsilon = 0.01;
  cfg.sinkhorn.tol = 1e-6;
  for (auto _ : state)
    benchmark::DoNotOptimize(fuse_distributions(a, b, c, m, cfg).fused.size());
}
BENCHMARK(BM_FuseStep)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
