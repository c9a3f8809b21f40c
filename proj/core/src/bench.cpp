#include "cofidec/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cofidec/rng.hpp"

namespace cofidec {

PopeSetup pope_setup_from_string(const std::string& s) {
  if (s == "random") return PopeSetup::Random;
  if (s == "popular") return PopeSetup::Popular;
  if (s == "adversarial") return PopeSetup::Adversarial;
  throw std::invalid_argument("unknown pope setup: " + s);
}

std::string to_string(PopeSetup s) {
  switch (s) {
    case PopeSetup::Random: return "random";
    case PopeSetup::Popular: return "popular";
    case PopeSetup::Adversarial: return "adversarial";
  }
  return "?";
}

ObjectStats ObjectStats::from_scenes(const std::vector<Scene>& scenes, int n_objects) {
  ObjectStats st;
  st.n_objects = n_objects;
  st.frequency.assign(n_objects, 0.0);
  st.cooccurrence.assign(static_cast<std::size_t>(n_objects) * n_objects, 0.0);
  if (scenes.empty()) return st;

  std::vector<double> present_count(n_objects, 0.0);
  for (const Scene& sc : scenes) {
    const std::vector<int> objs = sc.distinct_objects();
    for (int a : objs) {
      present_count[a] += 1.0;
      for (int b : objs)
        if (b != a) st.cooccurrence[static_cast<std::size_t>(a) * n_objects + b] += 1.0;
    }
  }
  for (int o = 0; o < n_objects; ++o) {
    st.frequency[o] = present_count[o] / static_cast<double>(scenes.size());
    if (present_count[o] > 0.0)
      for (int b = 0; b < n_objects; ++b)
        st.cooccurrence[static_cast<std::size_t>(o) * n_objects + b] /= present_count[o];
  }
  return st;
}

ChairReport chair_metrics(const std::vector<std::vector<int>>& captions,
                          const std::vector<Scene>& scenes, const CaptionVocab& vocab) {
  if (captions.empty() || captions.size() != scenes.size())
    throw std::invalid_argument("chair_metrics: captions and scenes must pair up");

  ChairReport rep;
  rep.n_captions = static_cast<int>(captions.size());
  long total_mentions = 0, halluc_mentions = 0;
  int halluc_captions = 0;
  double recall_sum = 0.0;
  int recall_scenes = 0;
  long content_tokens = 0;

  for (std::size_t i = 0; i < captions.size(); ++i) {
    const Scene& scene = scenes[i];
    std::set<int> mentioned;
    bool any_halluc = false;
    for (int t : captions[i]) {
      if (t < 0 || t >= vocab.size())
        throw std::invalid_argument("chair_metrics: caption token outside the vocabulary");
      if (vocab.is_object(t) || vocab.is_color(t)) ++content_tokens;
      if (!vocab.is_object(t)) continue;
      ++total_mentions;
      mentioned.insert(t);
      if (!scene.contains_object(t)) {
        ++halluc_mentions;
        any_halluc = true;
      }
    }
    if (any_halluc) ++halluc_captions;

    const std::vector<int> present = scene.distinct_objects();
    if (!present.empty()) {
      int hit = 0;
      for (int o : present)
        if (mentioned.count(o)) ++hit;
      recall_sum += static_cast<double>(hit) / static_cast<double>(present.size());
      ++recall_scenes;
    }
  }

  rep.chair_i = total_mentions > 0
                    ? static_cast<double>(halluc_mentions) / static_cast<double>(total_mentions)
                    : 0.0;
  rep.chair_s = static_cast<double>(halluc_captions) / static_cast<double>(captions.size());
  rep.recall = recall_scenes > 0 ? recall_sum / recall_scenes : 0.0;
  rep.avg_length = static_cast<double>(content_tokens) / static_cast<double>(captions.size());
  return rep;
}

namespace {

// Seeded partial Fisher-Yates; returns the first `take` elements.
std::vector<int> sample_without_replacement(std::vector<int> pool, int take, Rng& rng) {
  const int n = static_cast<int>(pool.size());
  take = std::min(take, n);
  for (int i = 0; i < take; ++i) std::swap(pool[i], pool[rng.uniform_int(i, n - 1)]);
  pool.resize(take);
  return pool;
}

}  // namespace

PopeQuestionSet pope_questions(const Scene& scene, PopeSetup setup, int k,
                               const ObjectStats& stats, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("pope_questions: k must be >= 1");
  if (stats.n_objects < 1 ||
      stats.frequency.size() != static_cast<std::size_t>(stats.n_objects) ||
      stats.cooccurrence.size() !=
          static_cast<std::size_t>(stats.n_objects) * stats.n_objects)
    throw std::invalid_argument("pope_questions: stats do not cover the vocabulary");

  PopeQuestionSet out;
  const std::vector<int> present = scene.distinct_objects();
  if (present.empty()) {
    out.no_positives = true;
    return out;
  }
  std::vector<int> absent;
  for (int o = 0; o < stats.n_objects; ++o)
    if (!scene.contains_object(o)) absent.push_back(o);

  Rng rng(seed);
  const int n_pos = std::min<int>(k, static_cast<int>(present.size()));
  const int n_neg = std::min<int>(n_pos, static_cast<int>(absent.size()));

  for (int o : sample_without_replacement(present, n_pos, rng))
    out.questions.push_back({o, true});

  std::vector<int> negatives;
  switch (setup) {
    case PopeSetup::Random:
      negatives = sample_without_replacement(absent, n_neg, rng);
      break;
    case PopeSetup::Popular:
      std::stable_sort(absent.begin(), absent.end(), [&](int a, int b) {
        if (stats.frequency[a] != stats.frequency[b])
          return stats.frequency[a] > stats.frequency[b];
        return a < b;
      });
      absent.resize(n_neg);
      negatives = absent;
      break;
    case PopeSetup::Adversarial: {
      std::vector<double> score(stats.n_objects, 0.0);
      for (int a : absent)
        for (int p : present)
          score[a] = std::max(score[a],
                              stats.cooccurrence[static_cast<std::size_t>(p) * stats.n_objects + a]);
      std::stable_sort(absent.begin(), absent.end(), [&](int a, int b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
      });
      absent.resize(n_neg);
      negatives = absent;
      break;
    }
  }
  for (int o : negatives) out.questions.push_back({o, false});
  return out;
}

PopeReport pope_eval(const PopeAnswerer& answerer, const std::vector<Scene>& scenes,
                     PopeSetup setup, int k, const ObjectStats& stats, std::uint64_t seed) {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const PopeQuestionSet qs = pope_questions(scenes[i], setup, k, stats, mix_seed(seed, i));
    for (const PopeQuestion& q : qs.questions) {
      const bool yes = answerer(i, q.object_id);
      if (q.ground_truth) {
        yes ? ++tp : ++fn;
      } else {
        yes ? ++fp : ++tn;
      }
    }
  }
  PopeReport rep;
  rep.setup = setup;
  rep.n_questions = static_cast<int>(tp + tn + fp + fn);
  const long n = tp + tn + fp + fn;
  rep.accuracy = n > 0 ? static_cast<double>(tp + tn) / n : 0.0;
  rep.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  rep.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  rep.f1 = (rep.precision + rep.recall) > 0.0
               ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
               : 0.0;
  return rep;
}

Scene generate_scene(const SceneGenParams& params, int n_objects, int n_colors,
                     std::uint64_t seed) {
  if (params.min_objects < 0 || params.max_objects < params.min_objects)
    throw std::invalid_argument("generate_scene: bad object count range");
  Rng rng(seed);
  const int capacity = params.grid_w * params.grid_h;
  const int count = std::min(capacity, rng.uniform_int(params.min_objects, params.max_objects));

  std::vector<int> cells(capacity);
  std::iota(cells.begin(), cells.end(), 0);
  const std::vector<int> chosen = sample_without_replacement(std::move(cells), count, rng);

  // Popularity-skewed marginal; partners follow the coupled pairs (0,1), (2,3).
  std::vector<double> weight(n_objects);
  double wsum = 0.0;
  for (int o = 0; o < n_objects; ++o) {
    weight[o] = std::pow(0.75, o);
    wsum += weight[o];
  }
  auto draw_object = [&]() {
    double u = rng.uniform01() * wsum;
    for (int o = 0; o < n_objects; ++o) {
      u -= weight[o];
      if (u < 0.0) return o;
    }
    return n_objects - 1;
  };
  auto partner = [&](int o) { return (o < 4 && (o ^ 1) < n_objects) ? (o ^ 1) : -1; };

  std::vector<Placement> placements;
  int prev = -1;
  for (int i = 0; i < count; ++i) {
    int obj;
    const int buddy = prev >= 0 ? partner(prev) : -1;
    if (buddy >= 0 && rng.uniform01() < params.pair_affinity) {
      obj = buddy;
    } else {
      obj = draw_object();
    }
    Placement p;
    p.cell_x = chosen[i] % params.grid_w;
    p.cell_y = chosen[i] / params.grid_w;
    p.object_id = obj;
    p.color_id = rng.uniform_int(0, n_colors - 1);
    placements.push_back(p);
    prev = obj;
  }
  return Scene::make(params.grid_w, params.grid_h, std::move(placements), n_objects, n_colors);
}

namespace {

struct MetricRow {
  std::string section;
  std::vector<std::pair<std::string, double>> values;
};

void append_chair(std::vector<MetricRow>& rows, const std::string& arm, const ChairReport& r) {
  rows.push_back({arm + "/chair",
                  {{"chair_s", r.chair_s},
                   {"chair_i", r.chair_i},
                   {"recall", r.recall},
                   {"avg_length", r.avg_length},
                   {"n_captions", static_cast<double>(r.n_captions)}}});
}

void append_pope(std::vector<MetricRow>& rows, const std::string& arm, const PopeReport& r) {
  rows.push_back({arm + "/pope-" + to_string(r.setup),
                  {{"accuracy", r.accuracy},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"f1", r.f1},
                   {"n_questions", static_cast<double>(r.n_questions)}}});
}

ReportSection config_echo(const ExperimentSpec& spec) {
  ReportSection s;
  s.name = "config";
  auto add = [&](const std::string& k, const std::string& v) { s.entries.emplace_back(k, v); };
  add("n_scenes", std::to_string(spec.n_scenes));
  add("scenes.grid_w", std::to_string(spec.scenes.grid_w));
  add("scenes.grid_h", std::to_string(spec.scenes.grid_h));
  add("scenes.min_objects", std::to_string(spec.scenes.min_objects));
  add("scenes.max_objects", std::to_string(spec.scenes.max_objects));
  add("scenes.pair_affinity", format_double(spec.scenes.pair_affinity));
  add("render.cell_px", std::to_string(spec.cell_px));
  add("render.noise_sd", format_double(spec.render_noise_sd));
  add("captioner.bias_beta", format_double(spec.captioner.bias_beta));
  add("captioner.evidence_noise", format_double(spec.captioner.evidence_noise));
  add("captioner.resolution_penalty", format_double(spec.captioner.resolution_penalty));
  add("captioner.seed", std::to_string(spec.captioner.seed));
  add("decode.max_new_tokens", std::to_string(spec.decode.max_new_tokens));
  add("decode.selection",
      spec.decode.selection.kind == SelectionConfig::Kind::Greedy ? "greedy" : "sample");
  add("decode.feedback_enabled", spec.decode.feedback_enabled ? "true" : "false");
  add("fusion.solver", to_string(spec.decode.fusion.solver));
  add("fusion.top_k", std::to_string(spec.decode.fusion.top_k));
  add("fusion.smoothing_alpha", format_double(spec.decode.fusion.smoothing_alpha));
  add("fusion.epsilon", format_double(spec.decode.fusion.sinkhorn.epsilon));
  add("views.rows", std::to_string(spec.decode.views.grid.rows));
  add("views.cols", std::to_string(spec.decode.views.grid.cols));
  add("views.m", std::to_string(spec.decode.views.m));
  add("views.downsample_factor", std::to_string(spec.decode.views.downsample_factor));
  add("metric", to_string(spec.metric_kind));
  add("pope.k", std::to_string(spec.pope_k));
  std::string arms;
  for (const std::string& a : spec.arms) arms += (arms.empty() ? "" : ",") + a;
  add("arms", arms);
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.n_scenes < 1) throw std::invalid_argument("run_experiment: n_scenes must be >= 1");
  if (spec.seeds.empty()) throw std::invalid_argument("run_experiment: need at least one seed");
  if (spec.arms.empty()) throw std::invalid_argument("run_experiment: need at least one arm");
  for (const std::string& arm : spec.arms)
    if (arm != "regular" && arm != "cofidec")
      throw std::invalid_argument("run_experiment: unknown arm " + arm);

  const CaptionVocab vocab = CaptionVocab::default_vocab();
  const GroundMetric metric = build_ground_metric(vocab.embeddings, spec.metric_kind);
  const ToyCaptioner model(vocab, spec.captioner);
  const int bos = vocab.bos(), eos = vocab.eos();
  const std::vector<int> prompt;
  const FeedbackSynthesizer synth = [&](const std::vector<int>& tokens) {
    return synthesize_feedback(tokens, vocab, spec.cell_px, 0);
  };

  ExperimentResult result;
  result.report.sections.push_back(config_echo(spec));

  // One row layout shared by every seed so aggregation is positional.
  std::vector<std::vector<MetricRow>> per_seed_rows;

  for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
    const std::uint64_t seed = spec.seeds[si];

    std::vector<Scene> scenes;
    std::vector<ImageGrid> images;
    scenes.reserve(spec.n_scenes);
    for (int i = 0; i < spec.n_scenes; ++i) {
      scenes.push_back(
          generate_scene(spec.scenes, vocab.n_objects(), vocab.n_colors(), mix_seed(seed, i)));
      images.push_back(render_scene(scenes.back(), vocab, spec.cell_px, spec.render_noise_sd,
                                    mix_seed(mix_seed(seed, 0x52454eULL), i)));
    }
    const ObjectStats stats = ObjectStats::from_scenes(scenes, vocab.n_objects());
    if (si == 0) result.stats = stats;

    std::vector<MetricRow> rows;
    for (const std::string& arm : spec.arms) {
      std::vector<std::vector<int>> captions;
      captions.reserve(scenes.size());
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        std::vector<int> caption{bos, eos};
        try {
          if (arm == "regular") {
            caption = regular_decode(model, {images[i]}, prompt, spec.decode, bos, eos).tokens;
          } else {
            caption =
                cofidec_decode(model, synth, metric, images[i], prompt, spec.decode, bos, eos)
                    .result.tokens;
          }
        } catch (const std::exception&) {
          ++result.failures;  // failed scene scores as an empty caption
        }
        captions.push_back(std::move(caption));
      }

      append_chair(rows, arm, chair_metrics(captions, scenes, vocab));
      const PopeAnswerer answerer = [&captions](std::size_t idx, int object_id) {
        const std::vector<int>& c = captions[idx];
        return std::find(c.begin(), c.end(), object_id) != c.end();
      };
      for (PopeSetup setup : spec.pope_setups)
        append_pope(rows, arm,
                    pope_eval(answerer, scenes, setup, spec.pope_k, stats,
                              mix_seed(seed, 0x504f5045ULL)));
    }
    per_seed_rows.push_back(std::move(rows));
  }

  const bool multi_seed = spec.seeds.size() > 1;
  if (multi_seed) {
    for (std::size_t si = 0; si < per_seed_rows.size(); ++si) {
      for (const MetricRow& row : per_seed_rows[si]) {
        ReportSection sec;
        sec.name = row.section + "@" + std::to_string(spec.seeds[si]);
        for (const auto& [k, v] : row.values) sec.entries.emplace_back(k, format_double(v));
        result.report.sections.push_back(std::move(sec));
      }
    }
    // Population mean/std across seeds, positionally aligned.
    for (std::size_t ri = 0; ri < per_seed_rows[0].size(); ++ri) {
      ReportSection sec;
      sec.name = per_seed_rows[0][ri].section;
      for (std::size_t ki = 0; ki < per_seed_rows[0][ri].values.size(); ++ki) {
        const std::string& key = per_seed_rows[0][ri].values[ki].first;
        double mean = 0.0, sq = 0.0;
        for (const auto& rows : per_seed_rows) {
          const double v = rows[ri].values[ki].second;
          mean += v;
          sq += v * v;
        }
        mean /= static_cast<double>(per_seed_rows.size());
        sq /= static_cast<double>(per_seed_rows.size());
        const double sd = std::sqrt(std::max(0.0, sq - mean * mean));
        sec.entries.emplace_back(key + "_mean", format_double(mean));
        sec.entries.emplace_back(key + "_std", format_double(sd));
      }
      result.report.sections.push_back(std::move(sec));
    }
  } else {
    for (const MetricRow& row : per_seed_rows[0]) {
      ReportSection sec;
      sec.name = row.section;
      for (const auto& [k, v] : row.values) sec.entries.emplace_back(k, format_double(v));
      result.report.sections.push_back(std::move(sec));
    }
  }

  ReportSection seeds_sec;
  seeds_sec.name = "seeds";
  std::string seed_list;
  for (std::uint64_t s : spec.seeds) seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  seeds_sec.entries.emplace_back("seeds", seed_list);
  seeds_sec.entries.emplace_back("failures", std::to_string(result.failures));
  result.report.sections.push_back(std::move(seeds_sec));
  return result;
}

}  // namespace cofidec
