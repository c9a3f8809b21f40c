#include "cofidec/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cofidec {

namespace {

// Line-oriented token reader: skips blank lines and '#' comments, tracks the
// current line number for diagnostics.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  // Next non-empty, non-comment line split into whitespace tokens.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      const std::size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(source_, line_no_, message);
  }

  std::vector<std::string> expect(const std::string& what) {
    std::vector<std::string> tokens;
    if (!next(tokens)) fail("unexpected end of input, expected " + what);
    return tokens;
  }

  int line_no() const { return line_no_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& is_;
  std::string source_;
  int line_no_ = 0;
};

double to_double(LineReader& r, const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) r.fail("malformed number '" + s + "'");
  return v;
}

int to_int(LineReader& r, const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) r.fail("malformed integer '" + s + "'");
  return v;
}

Distribution read_dist_body(LineReader& r) {
  std::vector<std::string> t = r.expect("'dist <support_size>'");
  if (t.size() != 2 || t[0] != "dist") r.fail("expected 'dist <support_size>'");
  const int n = to_int(r, t[1]);
  if (n < 1) r.fail("support size must be positive");
  std::vector<int> ids(n);
  std::vector<double> probs(n);
  for (int i = 0; i < n; ++i) {
    t = r.expect("'<token_id> <prob>'");
    if (t.size() != 2) r.fail("expected '<token_id> <prob>'");
    ids[i] = to_int(r, t[0]);
    probs[i] = to_double(r, t[1]);
  }
  try {
    return Distribution::make(std::move(ids), std::move(probs));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

}  // namespace

void write_dist(std::ostream& os, const Distribution& d) {
  os << "dist " << d.size() << "\n";
  for (int i = 0; i < d.size(); ++i)
    os << d.support_ids[i] << " " << format_double(d.probs[i]) << "\n";
}

Distribution read_dist(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  return read_dist_body(r);
}

void write_cost(std::ostream& os, const GroundMetric& m) {
  os << "cost " << m.size << "\n";
  for (int i = 0; i < m.size; ++i) {
    for (int j = 0; j < m.size; ++j) os << (j ? " " : "") << format_double(m.at(i, j));
    os << "\n";
  }
}

GroundMetric read_cost(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string> t = r.expect("'cost <n>'");
  if (t.size() != 2 || t[0] != "cost") r.fail("expected 'cost <n>'");
  const int n = to_int(r, t[1]);
  if (n < 1) r.fail("cost size must be positive");
  std::vector<double> costs;
  costs.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    t = r.expect("a cost row");
    if (static_cast<int>(t.size()) != n) r.fail("expected " + std::to_string(n) + " entries");
    for (const std::string& s : t) costs.push_back(to_double(r, s));
  }
  try {
    return GroundMetric::make(n, std::move(costs));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

void write_embeddings(std::ostream& os, const std::vector<std::vector<double>>& emb) {
  os << "emb " << emb.size() << " " << (emb.empty() ? 0 : emb[0].size()) << "\n";
  for (std::size_t i = 0; i < emb.size(); ++i) {
    os << i;
    for (double v : emb[i]) os << " " << format_double(v);
    os << "\n";
  }
}

std::vector<std::vector<double>> read_embeddings(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string> t = r.expect("'emb <n> <dim>'");
  if (t.size() != 3 || t[0] != "emb") r.fail("expected 'emb <n> <dim>'");
  const int n = to_int(r, t[1]);
  const int dim = to_int(r, t[2]);
  if (n < 1 || dim < 1) r.fail("embedding counts must be positive");
  std::vector<std::vector<double>> emb(n);
  for (int i = 0; i < n; ++i) {
    t = r.expect("'<token_id> <floats...>'");
    if (static_cast<int>(t.size()) != dim + 1)
      r.fail("expected token id plus " + std::to_string(dim) + " floats");
    if (to_int(r, t[0]) != i) r.fail("token ids must be 0..n-1 in order");
    emb[i].reserve(dim);
    for (int k = 1; k <= dim; ++k) emb[i].push_back(to_double(r, t[k]));
  }
  return emb;
}

void write_grid(std::ostream& os, const ImageGrid& img) {
  os << "grid " << img.width << " " << img.height << " " << img.channels << "\n";
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < img.channels; ++ch)
        os << (ch ? " " : "") << format_double(img.at(x, y, ch));
      os << "\n";
    }
  }
}

ImageGrid read_grid(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string> t = r.expect("'grid <w> <h> <channels>'");
  if (t.size() != 4 || t[0] != "grid") r.fail("expected 'grid <w> <h> <channels>'");
  const int w = to_int(r, t[1]);
  const int h = to_int(r, t[2]);
  const int ch = to_int(r, t[3]);
  if (w < 1 || h < 1 || ch < 1) r.fail("grid dimensions must be positive");
  std::vector<double> px;
  px.reserve(static_cast<std::size_t>(w) * h * ch);
  for (int i = 0; i < w * h; ++i) {
    t = r.expect("a pixel line");
    if (static_cast<int>(t.size()) != ch)
      r.fail("expected " + std::to_string(ch) + " channel values");
    for (const std::string& s : t) px.push_back(to_double(r, s));
  }
  try {
    return ImageGrid::make(w, h, ch, std::move(px));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

void write_scene(std::ostream& os, const Scene& scene, const CaptionVocab& vocab) {
  os << "# objects:";
  for (const std::string& o : vocab.objects) os << " " << o;
  os << "\n# colors:";
  for (const std::string& c : vocab.colors) os << " " << c;
  os << "\nscene " << scene.grid_w << " " << scene.grid_h << "\n";
  for (const Placement& p : scene.placements)
    os << p.cell_x << " " << p.cell_y << " " << vocab.objects[p.object_id] << " "
       << vocab.colors[p.color_id] << "\n";
}

Scene read_scene(std::istream& is, const CaptionVocab& vocab, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string> t = r.expect("'scene <gw> <gh>'");
  if (t.size() != 3 || t[0] != "scene") r.fail("expected 'scene <gw> <gh>'");
  const int gw = to_int(r, t[1]);
  const int gh = to_int(r, t[2]);
  std::vector<Placement> placements;
  while (r.next(t)) {
    if (t.size() != 4) r.fail("expected '<x> <y> <object> <color>'");
    Placement p;
    p.cell_x = to_int(r, t[0]);
    p.cell_y = to_int(r, t[1]);
    const int obj = vocab.token_id(t[2]);
    if (obj < 0 || !vocab.is_object(obj)) r.fail("unknown object name '" + t[2] + "'");
    const int col = vocab.token_id(t[3]);
    if (col < 0 || !vocab.is_color(col)) r.fail("unknown color name '" + t[3] + "'");
    p.object_id = obj;
    p.color_id = col - vocab.n_objects();
    placements.push_back(p);
  }
  try {
    return Scene::make(gw, gh, std::move(placements), vocab.n_objects(), vocab.n_colors());
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

void write_dump(std::ostream& os, const std::vector<std::array<Distribution, 3>>& steps) {
  static const char* kLabels[3] = {"v", "c", "f"};
  for (std::size_t s = 0; s < steps.size(); ++s) {
    os << "step " << s << "\n";
    for (int k = 0; k < 3; ++k) {
      const Distribution& d = steps[s][k];
      os << kLabels[k] << " dist " << d.size() << "\n";
      for (int i = 0; i < d.size(); ++i)
        os << d.support_ids[i] << " " << format_double(d.probs[i]) << "\n";
    }
  }
}

std::vector<std::array<Distribution, 3>> read_dump(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  static const char* kLabels[3] = {"v", "c", "f"};
  std::vector<std::array<Distribution, 3>> steps;
  std::vector<std::string> t;
  while (r.next(t)) {
    if (t.size() != 2 || t[0] != "step") r.fail("expected 'step <t>'");
    if (to_int(r, t[1]) != static_cast<int>(steps.size()))
      r.fail("step indices must be consecutive from 0");
    std::array<Distribution, 3> triple;
    for (int k = 0; k < 3; ++k) {
      t = r.expect("'<label> dist <n>'");
      if (t.size() != 3 || t[0] != kLabels[k] || t[1] != "dist")
        r.fail(std::string("expected '") + kLabels[k] + " dist <n>'");
      const int n = to_int(r, t[2]);
      if (n < 1) r.fail("support size must be positive");
      std::vector<int> ids(n);
      std::vector<double> probs(n);
      for (int i = 0; i < n; ++i) {
        t = r.expect("'<token_id> <prob>'");
        if (t.size() != 2) r.fail("expected '<token_id> <prob>'");
        ids[i] = to_int(r, t[0]);
        probs[i] = to_double(r, t[1]);
      }
      try {
        triple[k] = Distribution::make(std::move(ids), std::move(probs));
      } catch (const std::invalid_argument& e) {
        r.fail(std::string("step ") + std::to_string(steps.size()) + ": " + e.what());
      }
    }
    steps.push_back(std::move(triple));
  }
  if (steps.empty()) r.fail("dump holds no steps");
  return steps;
}

TraceFile trace_file_from(const DecodeTrace& trace) {
  TraceFile tf;
  tf.steps.reserve(trace.steps.size());
  for (const TraceStep& s : trace.steps) {
    TraceFileStep fs;
    fs.chosen = s.chosen;
    fs.per_source_cost = s.per_source_cost;
    fs.fused = s.fused;
    tf.steps.push_back(std::move(fs));
  }
  return tf;
}

void write_trace(std::ostream& os, const TraceFile& trace) {
  os << "trace " << trace.steps.size() << "\n";
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const TraceFileStep& st = trace.steps[s];
    os << "step " << s << " chosen " << st.chosen << " cost "
       << format_double(st.per_source_cost[0]) << " " << format_double(st.per_source_cost[1])
       << " " << format_double(st.per_source_cost[2]) << "\n";
    os << "fused ";
    write_dist(os, st.fused);
  }
}

TraceFile read_trace(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string> t = r.expect("'trace <n>'");
  if (t.size() != 2 || t[0] != "trace") r.fail("expected 'trace <n>'");
  const int n = to_int(r, t[1]);
  if (n < 0) r.fail("negative step count");
  TraceFile tf;
  tf.steps.reserve(n);
  for (int s = 0; s < n; ++s) {
    t = r.expect("'step <t> chosen <id> cost <c1> <c2> <c3>'");
    if (t.size() != 8 || t[0] != "step" || t[2] != "chosen" || t[4] != "cost")
      r.fail("expected 'step <t> chosen <id> cost <c1> <c2> <c3>'");
    if (to_int(r, t[1]) != s) r.fail("step indices must be consecutive from 0");
    TraceFileStep st;
    st.chosen = to_int(r, t[3]);
    for (int k = 0; k < 3; ++k) st.per_source_cost[k] = to_double(r, t[5 + k]);
    t = r.expect("'fused dist <n>'");
    if (t.size() != 3 || t[0] != "fused" || t[1] != "dist") r.fail("expected 'fused dist <n>'");
    const int sz = to_int(r, t[2]);
    if (sz < 1) r.fail("support size must be positive");
    std::vector<int> ids(sz);
    std::vector<double> probs(sz);
    for (int i = 0; i < sz; ++i) {
      t = r.expect("'<token_id> <prob>'");
      if (t.size() != 2) r.fail("expected '<token_id> <prob>'");
      ids[i] = to_int(r, t[0]);
      probs[i] = to_double(r, t[1]);
    }
    try {
      st.fused = Distribution::make(std::move(ids), std::move(probs));
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
    tf.steps.push_back(std::move(st));
  }
  return tf;
}

void write_report(std::ostream& os, const Report& report) {
  for (const ReportSection& sec : report.sections) {
    os << "[" << sec.name << "]\n";
    for (const auto& [k, v] : sec.entries) os << k << " = " << v << "\n";
  }
}

Report read_report(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  Report rep;
  std::vector<std::string> t;
  while (r.next(t)) {
    if (t.size() == 1 && t[0].size() >= 2 && t[0].front() == '[' && t[0].back() == ']') {
      ReportSection sec;
      sec.name = t[0].substr(1, t[0].size() - 2);
      rep.sections.push_back(std::move(sec));
      continue;
    }
    if (rep.sections.empty()) r.fail("entry before any [section] header");
    if (t.size() < 3 || t[1] != "=") r.fail("expected 'key = value'");
    std::string value = t[2];
    for (std::size_t i = 3; i < t.size(); ++i) value += " " + t[i];
    rep.sections.back().entries.emplace_back(t[0], std::move(value));
  }
  return rep;
}

void write_caption(std::ostream& os, const std::vector<int>& tokens, const CaptionVocab& vocab) {
  for (std::size_t i = 0; i < tokens.size(); ++i)
    os << (i ? " " : "") << vocab.token_name(tokens[i]);
  os << "\n";
}

std::vector<int> read_caption(std::istream& is, const CaptionVocab& vocab,
                              const std::string& source) {
  LineReader r(is, source);
  std::vector<std::string> t;
  if (!r.next(t)) r.fail("empty caption file");
  std::vector<int> tokens;
  tokens.reserve(t.size());
  for (const std::string& name : t) {
    const int id = vocab.token_id(name);
    if (id < 0) r.fail("unknown token name '" + name + "'");
    tokens.push_back(id);
  }
  return tokens;
}

void write_object_stats(std::ostream& os, const ObjectStats& stats) {
  os << "# object frequency and cooccurrence tables\n";
  os << "objects " << stats.n_objects << "\n";
  os << "frequency";
  for (double f : stats.frequency) os << " " << format_double(f);
  os << "\n";
  for (int i = 0; i < stats.n_objects; ++i) {
    for (int j = 0; j < stats.n_objects; ++j)
      os << (j ? " " : "")
         << format_double(stats.cooccurrence[static_cast<std::size_t>(i) * stats.n_objects + j]);
    os << "\n";
  }
}

Config Config::parse(std::istream& is, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(source, line_no, "expected 'key = value'");
    auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      const std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (!cfg.entries_.emplace(key, Entry{value, line_no, false}).second)
      throw ParseError(source, line_no, "duplicate key '" + key + "'");
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  it->second.used = true;
  return true;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  return it->second.value;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  try {
    return parse_double(it->second.value);
  } catch (const std::invalid_argument&) {
    throw ParseError(source_, it->second.line, "key '" + key + "' is not a number");
  }
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  int v = 0;
  const std::string& s = it->second.value;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(source_, it->second.line, "key '" + key + "' is not an integer");
  return v;
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  std::uint64_t v = 0;
  const std::string& s = it->second.value;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(source_, it->second.line, "key '" + key + "' is not an unsigned integer");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  if (it->second.value == "true") return true;
  if (it->second.value == "false") return false;
  throw ParseError(source_, it->second.line, "key '" + key + "' must be true or false");
}

namespace {
std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}
}  // namespace

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  std::vector<double> out;
  for (const std::string& part : split_commas(it->second.value)) {
    try {
      out.push_back(parse_double(part));
    } catch (const std::invalid_argument&) {
      throw ParseError(source_, it->second.line, "key '" + key + "' holds a malformed number");
    }
  }
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key,
                                                 const std::vector<std::string>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  it->second.used = true;
  return split_commas(it->second.value);
}

void Config::require_consumed() const {
  for (const auto& [key, entry] : entries_)
    if (!entry.used)
      throw ParseError(source_, entry.line, "unknown key '" + key + "'");
}

std::string slurp_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f << data;
  if (!f.good()) throw std::runtime_error("write failed: " + path);
}

}  // namespace cofidec
