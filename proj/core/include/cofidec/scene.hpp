#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cofidec/views.hpp"

namespace cofidec {

/// Ground-truth object layout on a cell grid; at most one placement per cell.
struct Placement {
  int cell_x = 0;
  int cell_y = 0;
  int object_id = 0;
  int color_id = 0;
};

struct Scene {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<Placement> placements;

  static Scene make(int grid_w, int grid_h, std::vector<Placement> placements, int n_objects,
                    int n_colors);

  bool contains_object(int object_id) const;
  std::vector<int> distinct_objects() const;  // sorted, deduplicated
};

/// Token vocabulary: object words, then color words, then the structural
/// tokens BOS/EOS/AND/SEP, each with an embedding vector.
struct CaptionVocab {
  std::vector<std::string> objects;
  std::vector<std::string> colors;
  std::vector<std::vector<double>> embeddings;  // one per token, equal dimension

  int n_objects() const { return static_cast<int>(objects.size()); }
  int n_colors() const { return static_cast<int>(colors.size()); }
  int size() const { return n_objects() + n_colors() + 4; }

  int object_token(int object_id) const { return object_id; }
  int color_token(int color_id) const { return n_objects() + color_id; }
  int bos() const { return n_objects() + n_colors(); }
  int eos() const { return bos() + 1; }
  int and_token() const { return bos() + 2; }
  int sep() const { return bos() + 3; }

  bool is_object(int token) const { return token >= 0 && token < n_objects(); }
  bool is_color(int token) const {
    return token >= n_objects() && token < n_objects() + n_colors();
  }

  std::string token_name(int token) const;
  /// Token id for a name; -1 if unknown.
  int token_id(const std::string& name) const;

  static CaptionVocab make(std::vector<std::string> objects, std::vector<std::string> colors,
                           std::vector<std::vector<double>> embeddings);
  /// The built-in toy vocabulary (6 objects, 4 colors, deterministic embeddings).
  static CaptionVocab default_vocab();
};

/// Palette signature of a placed object: channel 0 encodes the object id,
/// channel 1 the color id, channel 2 is a presence marker.
double palette_object_value(int object_id, int n_objects);
double palette_color_value(int color_id, int n_colors);

/// Renders each cell as a cell_px x cell_px constant block of its palette
/// signature over a zero background, plus optional seeded Gaussian noise.
ImageGrid render_scene(const Scene& scene, const CaptionVocab& vocab, int cell_px,
                       double noise_sd, std::uint64_t seed);

struct ParseResult {
  Scene scene;
  int warnings = 0;
};

/// Extracts (color?, object) phrases delimited by AND/SEP and places them
/// row-major on a canonical grid; unparseable fragments are skipped and
/// counted. A phrase without a color gets color id 0.
ParseResult parse_caption(const std::vector<int>& tokens, const CaptionVocab& vocab);

/// parse_caption then a noiseless render: the pseudo-image of a hypothesis.
ImageGrid synthesize_feedback(const std::vector<int>& tokens, const CaptionVocab& vocab,
                              int cell_px, std::uint64_t seed);

}  // namespace cofidec
