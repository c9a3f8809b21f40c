#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cofidec/captioner.hpp"
#include "cofidec/fusion.hpp"
#include "cofidec/views.hpp"

namespace cofidec {

/// Decode failure tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct SelectionConfig {
  enum class Kind { Greedy, Sample };
  Kind kind = Kind::Greedy;
  double temperature = 1.0;  // only used when sampling
  std::uint64_t seed = 0;
};

struct ViewsParams {
  GridShape grid{2, 2};
  int m = 2;
  int crop_w = 0;  // 0 = quarter of the image per side
  int crop_h = 0;
  int downsample_factor = 2;
  int saliency_window = 0;  // 0 = quarter of the smaller image side
};

struct DecodeConfig {
  int max_new_tokens = 64;
  SelectionConfig selection;
  FusionConfig fusion;
  ViewsParams views;
  bool feedback_enabled = true;
};

struct DecodeResult {
  std::vector<int> tokens;  // BOS ... [EOS]
  bool truncated = false;   // budget exhausted before EOS
};

struct TraceStep {
  Distribution p_v, p_c, p_f;
  Distribution fused;
  int chosen = -1;
  std::array<double, 3> per_source_cost{0.0, 0.0, 0.0};
};

/// Per-step record of the fused decoding loop plus the intermediate
/// responses and pseudo-images that conditioned it.
struct DecodeTrace {
  std::vector<TraceStep> steps;
  std::vector<int> r0, rc, rf;
  ImageGrid pseudo_coarse, pseudo_fine;
  bool truncated = false;
  bool rf_fallback = false;  // no fine crops; rf replays r0
};

struct GranularResponses {
  std::vector<int> r0, rc, rf;
  bool rf_fallback = false;
};

struct CofidecOutput {
  DecodeResult result;
  DecodeTrace trace;
};

/// Renders a textual hypothesis into a pseudo-image.
using FeedbackSynthesizer = std::function<ImageGrid(const std::vector<int>&)>;

/// Greedy argmax (ties to the lowest id) or seeded temperature sampling.
int select_token(const Distribution& d, const SelectionConfig& selection, std::uint64_t seed);

/// Plain autoregressive loop until EOS or max_new_tokens.
DecodeResult regular_decode(const ConditionalModel& model, const std::vector<ImageGrid>& views,
                            const std::vector<int>& prompt, const DecodeConfig& cfg, int bos_id,
                            int eos_id);

/// Greedy responses conditioned on the original image, the coarse patches
/// and the fine crops respectively; rf falls back to r0 when no crops exist.
GranularResponses generate_granular_responses(const ConditionalModel& model, const ViewSet& views,
                                              const std::vector<int>& prompt,
                                              const DecodeConfig& cfg, int bos_id, int eos_id);

/// The full pipeline: decompose, generate granular responses, synthesize
/// pseudo-images, then decode with per-token barycenter fusion of the three
/// conditional distributions. feedback_enabled=false short-circuits to the
/// regular loop on the original image (ablation arm).
CofidecOutput cofidec_decode(const ConditionalModel& model, const FeedbackSynthesizer& synthesizer,
                             const GroundMetric& metric, const ImageGrid& image,
                             const std::vector<int>& prompt, const DecodeConfig& cfg, int bos_id,
                             int eos_id);

}  // namespace cofidec
