#include "cofidec/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "cofidec/rng.hpp"

namespace cofidec {

Scene Scene::make(int grid_w, int grid_h, std::vector<Placement> placements, int n_objects,
                  int n_colors) {
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("Scene: nonpositive grid");
  std::set<std::pair<int, int>> cells;
  for (const Placement& p : placements) {
    if (p.cell_x < 0 || p.cell_x >= grid_w || p.cell_y < 0 || p.cell_y >= grid_h)
      throw std::invalid_argument("Scene: placement outside the grid");
    if (p.object_id < 0 || p.object_id >= n_objects)
      throw std::invalid_argument("Scene: object id outside the vocabulary");
    if (p.color_id < 0 || p.color_id >= n_colors)
      throw std::invalid_argument("Scene: color id outside the vocabulary");
    if (!cells.insert({p.cell_x, p.cell_y}).second)
      throw std::invalid_argument("Scene: more than one placement per cell");
  }
  Scene s;
  s.grid_w = grid_w;
  s.grid_h = grid_h;
  s.placements = std::move(placements);
  return s;
}

bool Scene::contains_object(int object_id) const {
  for (const Placement& p : placements)
    if (p.object_id == object_id) return true;
  return false;
}

std::vector<int> Scene::distinct_objects() const {
  std::set<int> s;
  for (const Placement& p : placements) s.insert(p.object_id);
  return {s.begin(), s.end()};
}

std::string CaptionVocab::token_name(int token) const {
  if (is_object(token)) return objects[token];
  if (is_color(token)) return colors[token - n_objects()];
  if (token == bos()) return "BOS";
  if (token == eos()) return "EOS";
  if (token == and_token()) return "AND";
  if (token == sep()) return "SEP";
  throw std::invalid_argument("token_name: token outside the vocabulary");
}

int CaptionVocab::token_id(const std::string& name) const {
  for (int t = 0; t < size(); ++t)
    if (token_name(t) == name) return t;
  return -1;
}

CaptionVocab CaptionVocab::make(std::vector<std::string> objects, std::vector<std::string> colors,
                                std::vector<std::vector<double>> embeddings) {
  CaptionVocab v;
  v.objects = std::move(objects);
  v.colors = std::move(colors);
  v.embeddings = std::move(embeddings);
  if (v.objects.empty() || v.colors.empty())
    throw std::invalid_argument("CaptionVocab: need at least one object and color");
  if (v.embeddings.size() != static_cast<std::size_t>(v.size()))
    throw std::invalid_argument("CaptionVocab: one embedding per token required");
  const std::size_t dim = v.embeddings[0].size();
  if (dim == 0) throw std::invalid_argument("CaptionVocab: empty embeddings");
  for (const auto& e : v.embeddings)
    if (e.size() != dim) throw std::invalid_argument("CaptionVocab: embedding dim mismatch");
  std::set<std::string> names;
  for (int t = 0; t < v.size(); ++t)
    if (!names.insert(v.token_name(t)).second)
      throw std::invalid_argument("CaptionVocab: duplicate token name");
  return v;
}

CaptionVocab CaptionVocab::default_vocab() {
  std::vector<std::string> objects = {"cube", "sphere", "cone", "cylinder", "torus", "prism"};
  std::vector<std::string> colors = {"red", "green", "blue", "yellow"};
  const int n_obj = static_cast<int>(objects.size());
  const int n_col = static_cast<int>(colors.size());

  // Objects on a unit circle, colors on a smaller offset circle, structural
  // tokens spaced along the last axis.
  std::vector<std::vector<double>> emb;
  constexpr double kTau = 2.0 * 3.14159265358979323846;
  for (int o = 0; o < n_obj; ++o)
    emb.push_back({std::cos(kTau * o / n_obj), std::sin(kTau * o / n_obj), 0.0, 0.0});
  for (int c = 0; c < n_col; ++c)
    emb.push_back({0.25 * std::cos(kTau * c / n_col), 0.25 * std::sin(kTau * c / n_col), 1.5, 0.0});
  for (int s = 0; s < 4; ++s) emb.push_back({0.0, 0.0, 0.0, 2.0 + 0.5 * s});
  return make(std::move(objects), std::move(colors), std::move(emb));
}

double palette_object_value(int object_id, int n_objects) {
  return static_cast<double>(object_id + 1) / (n_objects + 1);
}

double palette_color_value(int color_id, int n_colors) {
  return static_cast<double>(color_id + 1) / (n_colors + 1);
}

ImageGrid render_scene(const Scene& scene, const CaptionVocab& vocab, int cell_px,
                       double noise_sd, std::uint64_t seed) {
  if (cell_px < 2) throw std::invalid_argument("render_scene: cell_px must be >= 2");
  if (noise_sd < 0.0) throw std::invalid_argument("render_scene: negative noise_sd");

  const int w = scene.grid_w * cell_px;
  const int h = scene.grid_h * cell_px;
  std::vector<double> px(static_cast<std::size_t>(w) * h * 3, 0.0);

  for (const Placement& p : scene.placements) {
    const double vo = palette_object_value(p.object_id, vocab.n_objects());
    const double vc = palette_color_value(p.color_id, vocab.n_colors());
    for (int dy = 0; dy < cell_px; ++dy) {
      for (int dx = 0; dx < cell_px; ++dx) {
        const std::size_t base =
            (static_cast<std::size_t>(p.cell_y * cell_px + dy) * w + p.cell_x * cell_px + dx) * 3;
        px[base + 0] = vo;
        px[base + 1] = vc;
        px[base + 2] = 1.0;
      }
    }
  }

  if (noise_sd > 0.0) {
    Rng rng(seed);
    for (double& v : px) v = std::clamp(v + noise_sd * rng.normal(), 0.0, 1.0);
  }
  return ImageGrid::make(w, h, 3, std::move(px));
}

ParseResult parse_caption(const std::vector<int>& tokens, const CaptionVocab& vocab) {
  ParseResult out;
  int pending_color = -1;
  std::vector<std::pair<int, int>> phrases;  // (object, color)

  auto flush_pending = [&]() {
    if (pending_color >= 0) {
      ++out.warnings;  // color without an object
      pending_color = -1;
    }
  };

  for (int t : tokens) {
    if (t < 0 || t >= vocab.size())
      throw std::invalid_argument("parse_caption: token outside the vocabulary");
    if (t == vocab.bos()) {
      flush_pending();
      continue;
    }
    if (t == vocab.eos()) break;
    if (t == vocab.and_token() || t == vocab.sep()) {
      flush_pending();
      continue;
    }
    if (vocab.is_color(t)) {
      flush_pending();
      pending_color = t - vocab.n_objects();
      continue;
    }
    // object token
    phrases.emplace_back(t, pending_color >= 0 ? pending_color : 0);
    pending_color = -1;
  }
  flush_pending();

  constexpr int kCanonicalCols = 4;
  const int n = static_cast<int>(phrases.size());
  const int grid_w = kCanonicalCols;
  const int grid_h = std::max(1, (n + kCanonicalCols - 1) / kCanonicalCols);
  std::vector<Placement> placements;
  placements.reserve(n);
  for (int i = 0; i < n; ++i) {
    Placement p;
    p.cell_x = i % kCanonicalCols;
    p.cell_y = i / kCanonicalCols;
    p.object_id = phrases[i].first;
    p.color_id = phrases[i].second;
    placements.push_back(p);
  }
  out.scene = Scene::make(grid_w, grid_h, std::move(placements), vocab.n_objects(),
                          vocab.n_colors());
  return out;
}

ImageGrid synthesize_feedback(const std::vector<int>& tokens, const CaptionVocab& vocab,
                              int cell_px, std::uint64_t seed) {
  ParseResult parsed = parse_caption(tokens, vocab);
  return render_scene(parsed.scene, vocab, cell_px, 0.0, seed);
}

}  // namespace cofidec
