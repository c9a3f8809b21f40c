#include "cofidec/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "cofidec/rng.hpp"

namespace cofidec {

int select_token(const Distribution& d, const SelectionConfig& selection, std::uint64_t seed) {
  if (selection.kind == SelectionConfig::Kind::Greedy) return d.argmax_id();
  if (!(selection.temperature > 0.0))
    throw std::invalid_argument("select_token: temperature must be positive");

  // Temperature rescale p^(1/T); zero entries stay zero.
  std::vector<double> w(d.probs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (d.probs[i] > 0.0) {
      w[i] = std::exp(std::log(d.probs[i]) / selection.temperature);
      total += w[i];
    }
  }
  Rng rng(seed);
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return d.support_ids[i];
  }
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0.0) return d.support_ids[i];
  return d.support_ids.back();
}

namespace {

// Shared loop for the regular path and the ablation arm so both are
// bit-identical; sink receives the per-step distribution when tracing.
DecodeResult decode_loop(const ConditionalModel& model, const std::vector<ImageGrid>& views,
                         const std::vector<int>& prompt, const DecodeConfig& cfg, int bos_id,
                         int eos_id, std::vector<TraceStep>* sink) {
  DecodeResult res;
  res.tokens.push_back(bos_id);
  for (int t = 0; t < cfg.max_new_tokens; ++t) {
    Distribution d;
    try {
      d = model.next_distribution(views, prompt, res.tokens);
    } catch (const std::exception& e) {
      throw std::runtime_error("decode step " + std::to_string(t) + ": " + e.what());
    }
    const int tok = select_token(d, cfg.selection, mix_seed(cfg.selection.seed, t));
    res.tokens.push_back(tok);
    if (sink) {
      TraceStep step;
      step.p_v = d;
      step.p_c = d;
      step.p_f = d;
      step.fused = std::move(d);
      step.chosen = tok;
      sink->push_back(std::move(step));
    }
    if (tok == eos_id) return res;
  }
  res.truncated = true;
  return res;
}

int default_crop(int extent) { return std::max(1, extent / 4); }

}  // namespace

DecodeResult regular_decode(const ConditionalModel& model, const std::vector<ImageGrid>& views,
                            const std::vector<int>& prompt, const DecodeConfig& cfg, int bos_id,
                            int eos_id) {
  return decode_loop(model, views, prompt, cfg, bos_id, eos_id, nullptr);
}

GranularResponses generate_granular_responses(const ConditionalModel& model, const ViewSet& views,
                                              const std::vector<int>& prompt,
                                              const DecodeConfig& cfg, int bos_id, int eos_id) {
  DecodeConfig greedy_cfg = cfg;  // intermediate responses are always greedy
  greedy_cfg.selection.kind = SelectionConfig::Kind::Greedy;

  GranularResponses out;
  out.r0 = regular_decode(model, {views.original}, prompt, greedy_cfg, bos_id, eos_id).tokens;
  out.rc = regular_decode(model, views.coarse, prompt, greedy_cfg, bos_id, eos_id).tokens;
  if (views.fine.empty()) {
    out.rf = out.r0;
    out.rf_fallback = true;
  } else {
    std::vector<ImageGrid> crops;
    crops.reserve(views.fine.size());
    for (const CropView& c : views.fine) crops.push_back(c.pixels);
    out.rf = regular_decode(model, crops, prompt, greedy_cfg, bos_id, eos_id).tokens;
  }
  return out;
}

CofidecOutput cofidec_decode(const ConditionalModel& model, const FeedbackSynthesizer& synthesizer,
                             const GroundMetric& metric, const ImageGrid& image,
                             const std::vector<int>& prompt, const DecodeConfig& cfg, int bos_id,
                             int eos_id) {
  CofidecOutput out;

  if (!cfg.feedback_enabled) {
    out.result = decode_loop(model, {image}, prompt, cfg, bos_id, eos_id, &out.trace.steps);
    out.trace.truncated = out.result.truncated;
    return out;
  }

  ViewSet views;
  try {
    ViewsParams vp = cfg.views;
    if (vp.crop_w == 0) vp.crop_w = default_crop(image.width);
    if (vp.crop_h == 0) vp.crop_h = default_crop(image.height);
    if (vp.saliency_window == 0)
      vp.saliency_window = std::max(1, std::min(image.width, image.height) / 4);
    views = build_view_set(image, vp.grid, vp.downsample_factor, vp.m, vp.crop_w, vp.crop_h,
                           vp.saliency_window);
  } catch (const std::exception& e) {
    throw StageError("views", e.what());
  }

  GranularResponses responses;
  try {
    responses = generate_granular_responses(model, views, prompt, cfg, bos_id, eos_id);
  } catch (const std::exception& e) {
    throw StageError("responses", e.what());
  }
  out.trace.r0 = responses.r0;
  out.trace.rc = responses.rc;
  out.trace.rf = responses.rf;
  out.trace.rf_fallback = responses.rf_fallback;

  try {
    out.trace.pseudo_coarse = synthesizer(responses.rc);
    out.trace.pseudo_fine = synthesizer(responses.rf);
  } catch (const std::exception& e) {
    throw StageError("feedback", e.what());
  }

  const std::vector<ImageGrid> views_v = {image};
  const std::vector<ImageGrid> views_c = {out.trace.pseudo_coarse};
  const std::vector<ImageGrid> views_f = {out.trace.pseudo_fine};

  out.result.tokens.push_back(bos_id);
  for (int t = 0; t < cfg.max_new_tokens; ++t) {
    TraceStep step;
    try {
      step.p_v = model.next_distribution(views_v, prompt, out.result.tokens);
      step.p_c = model.next_distribution(views_c, prompt, out.result.tokens);
      step.p_f = model.next_distribution(views_f, prompt, out.result.tokens);
      FusedStep fused = fuse_distributions(step.p_v, step.p_c, step.p_f, metric, cfg.fusion);
      step.fused = std::move(fused.fused);
      step.per_source_cost = fused.per_source_cost;
    } catch (const std::exception& e) {
      throw StageError("fusion", "step " + std::to_string(t) + ": " + e.what());
    }
    int tok = -1;
    try {
      tok = select_token(step.fused, cfg.selection, mix_seed(cfg.selection.seed, t));
    } catch (const std::exception& e) {
      throw StageError("selection", "step " + std::to_string(t) + ": " + e.what());
    }
    step.chosen = tok;
    out.result.tokens.push_back(tok);
    out.trace.steps.push_back(std::move(step));
    if (tok == eos_id) return out;
  }
  out.result.truncated = true;
  out.trace.truncated = true;
  return out;
}

}  // namespace cofidec
