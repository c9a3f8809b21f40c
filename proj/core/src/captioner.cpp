#include "cofidec/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cofidec/rng.hpp"

namespace cofidec {

namespace {

constexpr double kEosSlope = 4.0;
constexpr double kPriorExpectedObjects = 2.0;  // expected caption length under the bare prior
constexpr double kEvidenceFloor = 0.02;
constexpr double kPresenceMin = 0.22;  // rejects most noise-only background pixels

double eos_weight(int mentioned, double expected_count) {
  return 1.0 / (1.0 + std::exp(-kEosSlope * (mentioned - expected_count + 0.5)));
}

enum class State { ExpectPhrase, ExpectObject, ExpectCont, Done };

struct PrefixInfo {
  State state = State::ExpectPhrase;
  int pending_color = -1;           // active when state == ExpectObject
  std::vector<int> mentioned;       // object ids in prefix order
  bool is_mentioned(int o) const {
    return std::find(mentioned.begin(), mentioned.end(), o) != mentioned.end();
  }
};

PrefixInfo scan_prefix(const std::vector<int>& prefix, const CaptionVocab& vocab) {
  if (prefix.empty() || prefix.front() != vocab.bos())
    throw std::invalid_argument("captioner: prefix must begin with BOS");
  PrefixInfo info;
  for (std::size_t i = 1; i < prefix.size(); ++i) {
    const int t = prefix[i];
    if (t == vocab.eos()) {
      info.state = State::Done;
      return info;
    }
    if (t == vocab.and_token() || t == vocab.sep() || t == vocab.bos()) {
      info.state = State::ExpectPhrase;
      info.pending_color = -1;
    } else if (vocab.is_color(t)) {
      info.state = State::ExpectObject;
      info.pending_color = t - vocab.n_objects();
    } else if (vocab.is_object(t)) {
      info.mentioned.push_back(t);
      info.state = State::ExpectCont;
      info.pending_color = -1;
    } else {
      throw std::invalid_argument("captioner: prefix token outside the vocabulary");
    }
  }
  return info;
}

std::uint64_t hash_views(const std::vector<ImageGrid>& views) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (const ImageGrid& v : views) {
    const int dims[4] = {v.width, v.height, v.channels, v.downsample_level};
    h = mix_seed(h, hash_bytes(dims, sizeof(dims)));
    h = mix_seed(h, hash_bytes(v.pixels.data(), v.pixels.size() * sizeof(double)));
  }
  return h;
}

// Quantizes a presence-normalized channel value to the nearest palette slot;
// -1 when no slot lies within half the palette gap.
int quantize_palette(double value, int n_slots) {
  const double step = 1.0 / (n_slots + 1);
  const int nearest = static_cast<int>(std::lround(value / step)) - 1;
  if (nearest < 0 || nearest >= n_slots) return -1;
  if (std::abs(value - (nearest + 1) * step) > 0.5 * step) return -1;
  return nearest;
}

}  // namespace

std::vector<double> default_cooccurrence(int n_objects) {
  std::vector<double> m(static_cast<std::size_t>(n_objects) * n_objects, 0.05);
  for (int i = 0; i < n_objects; ++i) m[static_cast<std::size_t>(i) * n_objects + i] = 0.0;
  auto couple = [&](int a, int b) {
    if (a < n_objects && b < n_objects) {
      m[static_cast<std::size_t>(a) * n_objects + b] = 0.9;
      m[static_cast<std::size_t>(b) * n_objects + a] = 0.9;
    }
  };
  couple(0, 1);
  couple(2, 3);
  return m;
}

ToyCaptioner::ToyCaptioner(CaptionVocab vocab, CaptionerParams params)
    : vocab_(std::move(vocab)), params_(std::move(params)) {
  if (!(params_.bias_beta >= 0.0 && params_.bias_beta <= 1.0))
    throw std::invalid_argument("ToyCaptioner: bias_beta must lie in [0, 1]");
  if (!(params_.evidence_noise >= 0.0))
    throw std::invalid_argument("ToyCaptioner: negative evidence_noise");
  if (!(params_.resolution_penalty >= 0.0 && params_.resolution_penalty <= 1.0))
    throw std::invalid_argument("ToyCaptioner: resolution_penalty must lie in [0, 1]");
  const int n = vocab_.n_objects();
  if (params_.cooccurrence.empty()) params_.cooccurrence = default_cooccurrence(n);
  if (params_.cooccurrence.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("ToyCaptioner: cooccurrence must be n_objects x n_objects");
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = params_.cooccurrence[static_cast<std::size_t>(i) * n + j];
      if (!(v >= 0.0)) throw std::invalid_argument("ToyCaptioner: negative cooccurrence");
      row += v;
    }
    if (!(row > 0.0)) throw std::invalid_argument("ToyCaptioner: cooccurrence row not normalizable");
  }
}

EvidenceSummary ToyCaptioner::gather_evidence(const std::vector<ImageGrid>& views) const {
  if (views.empty()) throw std::invalid_argument("captioner: empty view list");
  const int n_obj = vocab_.n_objects();
  const int n_col = vocab_.n_colors();

  // Aggregate per (object, color): max over views of the penalized vote share.
  std::vector<double> agg(static_cast<std::size_t>(n_obj) * n_col, 0.0);
  for (const ImageGrid& view : views) {
    if (view.channels < 3) throw std::invalid_argument("captioner: views need 3 channels");
    std::vector<double> votes(static_cast<std::size_t>(n_obj) * n_col, 0.0);
    for (int y = 0; y < view.height; ++y) {
      for (int x = 0; x < view.width; ++x) {
        const double s = view.at(x, y, 2);
        if (s < kPresenceMin) continue;
        const int o = quantize_palette(view.at(x, y, 0) / s, n_obj);
        const int c = quantize_palette(view.at(x, y, 1) / s, n_col);
        if (o < 0 || c < 0) continue;
        votes[static_cast<std::size_t>(o) * n_col + c] += s;
      }
    }
    double max_vote = 0.0;
    for (double v : votes) max_vote = std::max(max_vote, v);
    if (max_vote <= 0.0) continue;
    const double penalty = std::pow(1.0 - params_.resolution_penalty, view.downsample_level);
    for (std::size_t i = 0; i < votes.size(); ++i)
      agg[i] = std::max(agg[i], votes[i] / max_vote * penalty);
  }

  EvidenceSummary ev;
  ev.strength.assign(n_obj, 0.0);
  ev.detected_color.assign(n_obj, -1);
  for (int o = 0; o < n_obj; ++o) {
    for (int c = 0; c < n_col; ++c) {
      const double v = agg[static_cast<std::size_t>(o) * n_col + c];
      if (v > ev.strength[o]) {
        ev.strength[o] = v;
        ev.detected_color[o] = c;
      }
    }
  }

  if (params_.evidence_noise > 0.0) {
    // Misperception scales with how far the view sits from clean palette
    // renders, measured on the presence channel; noiseless feedback images
    // score ~0 and are parsed almost perfectly.
    double off_manifold = 0.0;
    std::size_t n_px = 0;
    for (const ImageGrid& view : views) {
      for (int y = 0; y < view.height; ++y) {
        for (int x = 0; x < view.width; ++x) {
          const double s = view.at(x, y, 2);
          off_manifold += std::min(s, std::abs(1.0 - s)) > 0.05 ? 1.0 : 0.0;
          ++n_px;
        }
      }
    }
    const double noisiness = n_px > 0 ? off_manifold / static_cast<double>(n_px) : 0.0;

    Rng rng(mix_seed(params_.seed, hash_views(views)));
    for (int o = 0; o < n_obj; ++o)
      ev.strength[o] =
          std::clamp(ev.strength[o] + 0.05 * noisiness * rng.uniform_sym(), 0.0, 1.0);
    // Sparse misperception event: one object is either lost or imagined.
    if (rng.uniform01() < std::min(1.0, params_.evidence_noise * noisiness)) {
      const int o = rng.uniform_int(0, n_obj - 1);
      if (ev.strength[o] >= 0.5) {
        ev.strength[o] *= 0.15;
      } else {
        ev.strength[o] = 0.55 + 0.3 * rng.uniform01();
      }
    }
  }
  for (int o = 0; o < n_obj; ++o)
    if (ev.detected_color[o] < 0) ev.detected_color[o] = o % n_col;

  for (double s : ev.strength) ev.soft_count += s;
  return ev;
}

Distribution ToyCaptioner::next_distribution(const std::vector<ImageGrid>& views,
                                             const std::vector<int>& prompt,
                                             const std::vector<int>& prefix) const {
  (void)prompt;  // the toy world has a single implicit "describe the scene" query
  if (views.empty()) throw std::invalid_argument("captioner: empty view list");
  const PrefixInfo info = scan_prefix(prefix, vocab_);
  const int vsize = vocab_.size();
  std::vector<int> ids(vsize);
  for (int i = 0; i < vsize; ++i) ids[i] = i;

  if (info.state == State::Done) return Distribution::dirac(ids, vocab_.eos());

  const EvidenceSummary ev = gather_evidence(views);
  const int n_obj = vocab_.n_objects();
  const int n_col = vocab_.n_colors();
  const int k_men = static_cast<int>(info.mentioned.size());

  // Prior over unmentioned objects from cooccurrence with mentioned ones;
  // uniform before anything is mentioned.
  std::vector<double> prior(n_obj, 0.0);
  {
    double total = 0.0;
    for (int o = 0; o < n_obj; ++o) {
      if (info.is_mentioned(o)) continue;
      double s = 0.0;
      for (int m : info.mentioned)
        s += params_.cooccurrence[static_cast<std::size_t>(m) * n_obj + o];
      if (info.mentioned.empty()) s = 1.0;
      prior[o] = s;
      total += s;
    }
    if (total > 0.0)
      for (double& v : prior) v /= total;
  }

  // Evidence-driven and prior-driven distributions are built separately and
  // mixed linearly, so bias_beta = 1 is exactly view-independent.
  std::vector<double> pe(vsize, 0.0), pp(vsize, 0.0);

  auto fill_weighted = [](std::vector<double>& out, const std::vector<int>& tokens,
                          const std::vector<double>& weights, double mass) {
    double s = 0.0;
    for (double w : weights) s += w;
    for (std::size_t i = 0; i < tokens.size(); ++i) out[tokens[i]] = mass * weights[i] / s;
  };

  switch (info.state) {
    case State::ExpectPhrase: {
      const double eos_e = eos_weight(k_men, ev.soft_count);
      const double eos_p = eos_weight(k_men, kPriorExpectedObjects);
      std::vector<int> color_tokens(n_col);
      std::vector<double> we(n_col, kEvidenceFloor), wp(n_col, 1.0);
      for (int c = 0; c < n_col; ++c) color_tokens[c] = vocab_.color_token(c);
      for (int o = 0; o < n_obj; ++o)
        if (!info.is_mentioned(o)) we[ev.detected_color[o]] += ev.strength[o];
      fill_weighted(pe, color_tokens, we, 1.0 - eos_e);
      fill_weighted(pp, color_tokens, wp, 1.0 - eos_p);
      pe[vocab_.eos()] = eos_e;
      pp[vocab_.eos()] = eos_p;
      break;
    }
    case State::ExpectObject: {
      std::vector<int> object_tokens;
      std::vector<double> we, wp;
      for (int o = 0; o < n_obj; ++o) {
        if (info.is_mentioned(o)) continue;
        object_tokens.push_back(vocab_.object_token(o));
        const double matched =
            ev.detected_color[o] == info.pending_color ? ev.strength[o] : 0.0;
        we.push_back(matched + kEvidenceFloor);
        wp.push_back(prior[o] + kEvidenceFloor);
      }
      if (object_tokens.empty()) {
        for (int o = 0; o < n_obj; ++o) {
          object_tokens.push_back(vocab_.object_token(o));
          we.push_back(1.0);
          wp.push_back(1.0);
        }
      }
      fill_weighted(pe, object_tokens, we, 1.0);
      fill_weighted(pp, object_tokens, wp, 1.0);
      break;
    }
    case State::ExpectCont: {
      const double eos_e = eos_weight(k_men, ev.soft_count);
      const double eos_p = eos_weight(k_men, kPriorExpectedObjects);
      pe[vocab_.eos()] = eos_e;
      pe[vocab_.and_token()] = 1.0 - eos_e;
      pp[vocab_.eos()] = eos_p;
      pp[vocab_.and_token()] = 1.0 - eos_p;
      break;
    }
    case State::Done:
      break;  // handled above
  }

  const double beta = params_.bias_beta;
  std::vector<double> mixed(vsize);
  for (int t = 0; t < vsize; ++t) mixed[t] = (1.0 - beta) * pe[t] + beta * pp[t];
  return Distribution::normalized(std::move(ids), std::move(mixed));
}

ReplayModel::ReplayModel(std::vector<std::array<Distribution, 3>> steps, int source_index,
                         int eos_id)
    : steps_(std::move(steps)), source_index_(source_index), eos_id_(eos_id) {
  if (source_index_ < 0 || source_index_ > 2)
    throw std::invalid_argument("ReplayModel: source index must be 0 (v), 1 (c) or 2 (f)");
  if (steps_.empty()) throw std::invalid_argument("ReplayModel: empty dump");
}

Distribution ReplayModel::next_distribution(const std::vector<ImageGrid>& views,
                                            const std::vector<int>& prompt,
                                            const std::vector<int>& prefix) const {
  (void)views;
  (void)prompt;
  if (prefix.empty()) throw std::invalid_argument("ReplayModel: empty prefix");
  const std::size_t step = prefix.size() - 1;
  if (step < steps_.size()) return steps_[step][source_index_];
  // Past the recorded steps the replay emits EOS.
  return Distribution::dirac(steps_[0][source_index_].support_ids, eos_id_);
}

}  // namespace cofidec
