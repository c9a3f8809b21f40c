#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cofidec/captioner.hpp"
#include "cofidec/decoding.hpp"
#include "cofidec/scene.hpp"
#include "cofidec/types.hpp"

namespace cofidec {

struct ChairReport {
  double chair_s = 0.0;     // captions with at least one hallucinated mention
  double chair_i = 0.0;     // hallucinated mentions over all object mentions
  double recall = 0.0;      // distinct true objects mentioned / present, averaged
  double avg_length = 0.0;  // mean content-token count
  int n_captions = 0;
};

enum class PopeSetup { Random, Popular, Adversarial };

PopeSetup pope_setup_from_string(const std::string& s);
std::string to_string(PopeSetup s);

struct PopeReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  PopeSetup setup = PopeSetup::Random;
  int n_questions = 0;
};

struct PopeQuestion {
  int object_id = 0;
  bool ground_truth = false;
};

struct PopeQuestionSet {
  std::vector<PopeQuestion> questions;  // positives first, then negatives
  bool no_positives = false;
};

/// Empirical object frequency and conditional cooccurrence tables.
struct ObjectStats {
  int n_objects = 0;
  std::vector<double> frequency;     // per object
  std::vector<double> cooccurrence;  // row-major, P(col present | row present)

  static ObjectStats from_scenes(const std::vector<Scene>& scenes, int n_objects);
};

ChairReport chair_metrics(const std::vector<std::vector<int>>& captions,
                          const std::vector<Scene>& scenes, const CaptionVocab& vocab);

/// k positives sampled from present objects plus matched negatives chosen
/// per setup: uniformly (random), by global frequency (popular), or by
/// cooccurrence with present objects (adversarial). Seeded, deterministic.
PopeQuestionSet pope_questions(const Scene& scene, PopeSetup setup, int k,
                               const ObjectStats& stats, std::uint64_t seed);

using PopeAnswerer = std::function<bool(std::size_t scene_index, int object_id)>;

PopeReport pope_eval(const PopeAnswerer& answerer, const std::vector<Scene>& scenes,
                     PopeSetup setup, int k, const ObjectStats& stats, std::uint64_t seed);

struct SceneGenParams {
  int grid_w = 4;
  int grid_h = 4;
  int min_objects = 1;
  int max_objects = 3;
  double pair_affinity = 0.6;  // chance the next object is the partner of the previous one
};

/// Seeded scene draw with a popularity-skewed object marginal and coupled
/// object pairs (0,1) and (2,3), mirroring the captioner's default prior.
Scene generate_scene(const SceneGenParams& params, int n_objects, int n_colors,
                     std::uint64_t seed);

struct ExperimentSpec {
  int n_scenes = 1;
  SceneGenParams scenes;
  std::vector<std::uint64_t> seeds{7};
  int cell_px = 4;
  double render_noise_sd = 0.0;
  CaptionerParams captioner;
  DecodeConfig decode;
  MetricKind metric_kind = MetricKind::SquaredEuclidean;
  std::vector<std::string> arms{"regular", "cofidec"};
  std::vector<PopeSetup> pope_setups{PopeSetup::Random, PopeSetup::Popular,
                                     PopeSetup::Adversarial};
  int pope_k = 3;
};

/// Ordered key-value report; serialization lives in io.
struct ReportSection {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
};

struct Report {
  std::vector<ReportSection> sections;
};

struct ExperimentResult {
  Report report;
  ObjectStats stats;  // from the first seed's scene set
  int failures = 0;
};

/// Runs every (arm, seed) combination, scoring CHAIR per arm and POPE per
/// (arm, setup); per-scene failures are counted and the run continues.
/// Scene evaluation order is fixed, so the report is byte-reproducible.
ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace cofidec
