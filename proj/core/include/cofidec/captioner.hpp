#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "cofidec/scene.hpp"
#include "cofidec/types.hpp"
#include "cofidec/views.hpp"

namespace cofidec {

/// Knobs of the toy captioner. bias_beta interpolates between purely visual
/// evidence (0) and the pure language prior (1); the prior scores objects by
/// cooccurrence with objects already mentioned in the prefix.
struct CaptionerParams {
  double bias_beta = 0.0;
  std::vector<double> cooccurrence;  // n_objects x n_objects, row-major
  /// Chance (clamped to 1) of a per-view misperception event that drops a
  /// detected object or imagines an absent one, plus a small detection
  /// jitter whenever nonzero.
  double evidence_noise = 0.0;
  double resolution_penalty = 0.0;  // evidence shrink per downsampling level
  std::uint64_t seed = 0;
};

/// Block-structured default: object pairs (0,1) and (2,3) strongly coupled.
std::vector<double> default_cooccurrence(int n_objects);

/// Next-token distribution over a caption vocabulary given visual views,
/// a prompt, and the generated prefix. Implementations are immutable after
/// construction and deterministic, so concurrent calls are safe.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;
  virtual Distribution next_distribution(const std::vector<ImageGrid>& views,
                                         const std::vector<int>& prompt,
                                         const std::vector<int>& prefix) const = 0;
};

/// Per-object visual evidence extracted from a view list.
struct EvidenceSummary {
  std::vector<double> strength;       // in [0,1], indexed by object id
  std::vector<int> detected_color;    // best color per object
  double soft_count = 0.0;            // sum of strengths
};

class ToyCaptioner : public ConditionalModel {
 public:
  ToyCaptioner(CaptionVocab vocab, CaptionerParams params);

  Distribution next_distribution(const std::vector<ImageGrid>& views,
                                 const std::vector<int>& prompt,
                                 const std::vector<int>& prefix) const override;

  /// Palette-signature detection over the views, with resolution penalty and
  /// seeded evidence noise applied. Exposed for tests.
  EvidenceSummary gather_evidence(const std::vector<ImageGrid>& views) const;

  const CaptionVocab& vocab() const { return vocab_; }
  const CaptionerParams& params() const { return params_; }

 private:
  CaptionVocab vocab_;
  CaptionerParams params_;
};

/// Replays one source (v, c or f) of a recorded per-step distribution dump.
class ReplayModel : public ConditionalModel {
 public:
  ReplayModel(std::vector<std::array<Distribution, 3>> steps, int source_index, int eos_id);

  Distribution next_distribution(const std::vector<ImageGrid>& views,
                                 const std::vector<int>& prompt,
                                 const std::vector<int>& prefix) const override;

 private:
  std::vector<std::array<Distribution, 3>> steps_;
  int source_index_;
  int eos_id_;
};

}  // namespace cofidec
