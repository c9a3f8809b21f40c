#include <benchmark/benchmark.h>

#include "cofidec/bench.hpp"
#include "cofidec/decoding.hpp"
#include "cofidec/rng.hpp"

using namespace cofidec;

namespace {

struct Fixture {
  CaptionVocab vocab = CaptionVocab::default_vocab();
  GroundMetric metric = build_ground_metric(vocab.embeddings, MetricKind::SquaredEuclidean);
  ToyCaptioner model;
  ImageGrid image;
  DecodeConfig config;
  FeedbackSynthesizer synth;

  Fixture()
      : model(vocab,
              [] {
                CaptionerParams p;
                p.bias_beta = 0.4;
                p.evidence_noise = 1.5;
                p.resolution_penalty = 0.1;
                p.seed = 11;
                return p;
              }()) {
    const Scene scene = generate_scene({}, vocab.n_objects(), vocab.n_colors(), 137);
    image = render_scene(scene, vocab, 4, 0.08, 62);
    config.fusion.solver = FusionSolver::ExactLp;
    config.fusion.top_k = 8;
    config.views.crop_w = 12;
    config.views.crop_h = 12;
    config.views.saliency_window = 3;
    synth = [this](const std::vector<int>& t) { return synthesize_feedback(t, vocab, 4, 0); };
  }
};

void BM_RegularDecode(benchmark::State& state) {
  Fixture f;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        regular_decode(f.model, {f.image}, {}, f.config, f.vocab.bos(), f.vocab.eos())
            .tokens.size());
}
BENCHMARK(BM_RegularDecode);

void BM_CofidecDecode(benchmark::State& state) {
  Fixture f;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        cofidec_decode(f.model, f.synth, f.metric, f.image, {}, f.config, f.vocab.bos(),
                       f.vocab.eos())
            .result.tokens.size());
}
BENCHMARK(BM_CofidecDecode);

void BM_CaptionerStep(benchmark::State& state) {
  Fixture f;
  const std::vector<int> prefix{f.vocab.bos()};
  for (auto _ : state)
    benchmark::DoNotOptimize(f.model.next_distribution({f.image}, {}, prefix).size());
}
BENCHMARK(BM_CaptionerStep);

}  // namespace
