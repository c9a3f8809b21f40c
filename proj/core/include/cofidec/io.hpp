#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cofidec/bench.hpp"
#include "cofidec/decoding.hpp"
#include "cofidec/scene.hpp"
#include "cofidec/types.hpp"
#include "cofidec/views.hpp"

namespace cofidec {

/// Parse failure naming the offending source and line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// All formats are line-oriented plain text: LF endings, '#' comments, floats
// printed with 17 significant digits so every parser/serializer pair is an
// exact inverse on valid data.

void write_dist(std::ostream& os, const Distribution& d);
Distribution read_dist(std::istream& is, const std::string& source = "<stream>");

void write_cost(std::ostream& os, const GroundMetric& m);
GroundMetric read_cost(std::istream& is, const std::string& source = "<stream>");

void write_embeddings(std::ostream& os, const std::vector<std::vector<double>>& emb);
std::vector<std::vector<double>> read_embeddings(std::istream& is,
                                                 const std::string& source = "<stream>");

void write_grid(std::ostream& os, const ImageGrid& img);
ImageGrid read_grid(std::istream& is, const std::string& source = "<stream>");

/// Scene files resolve object/color names against the given vocabulary; the
/// serializer declares the vocabulary in header comments.
void write_scene(std::ostream& os, const Scene& scene, const CaptionVocab& vocab);
Scene read_scene(std::istream& is, const CaptionVocab& vocab,
                 const std::string& source = "<stream>");

/// Logits dump: per step, the three source distributions labelled v/c/f.
void write_dump(std::ostream& os, const std::vector<std::array<Distribution, 3>>& steps);
std::vector<std::array<Distribution, 3>> read_dump(std::istream& is,
                                                   const std::string& source = "<stream>");

/// Per-step decode trace: chosen token, per-source cost triple, fused
/// distribution.
struct TraceFileStep {
  int chosen = -1;
  std::array<double, 3> per_source_cost{0.0, 0.0, 0.0};
  Distribution fused;
};

struct TraceFile {
  std::vector<TraceFileStep> steps;
};

TraceFile trace_file_from(const DecodeTrace& trace);
void write_trace(std::ostream& os, const TraceFile& trace);
TraceFile read_trace(std::istream& is, const std::string& source = "<stream>");

void write_report(std::ostream& os, const Report& report);
Report read_report(std::istream& is, const std::string& source = "<stream>");

/// Caption file: one line of space-separated token names.
void write_caption(std::ostream& os, const std::vector<int>& tokens, const CaptionVocab& vocab);
std::vector<int> read_caption(std::istream& is, const CaptionVocab& vocab,
                              const std::string& source = "<stream>");

void write_object_stats(std::ostream& os, const ObjectStats& stats);

/// "key = value" configuration with '#' comments. Consumers mark keys as
/// they read them; require_consumed() rejects anything left over.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<stream>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) const;

  /// Throws ParseError naming the first unread key, if any.
  void require_consumed() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  std::string source_;
  std::map<std::string, Entry> entries_;
};

std::string slurp_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

}  // namespace cofidec
