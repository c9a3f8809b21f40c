#include "cofidec/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "cofidec/bench.hpp"
#include "cofidec/decoding.hpp"
#include "cofidec/io.hpp"
#include "cofidec/ot.hpp"

namespace cofidec {

namespace {

// Paths already written by the active command; removed if it later fails.
struct OutputLedger {
  std::vector<std::string> paths;
  void write(const std::string& path, const std::string& data) {
    write_file(path, data);
    paths.push_back(path);
  }
  void discard_all() {
    for (const std::string& p : paths) std::remove(p.c_str());
  }
};

SinkhornConfig parse_sinkhorn(const Config& cfg, const std::string& prefix) {
  SinkhornConfig sk;
  sk.epsilon = cfg.get_double(prefix + ".epsilon", sk.epsilon);
  sk.max_iter = cfg.get_int(prefix + ".max_iter", sk.max_iter);
  sk.tol = cfg.get_double(prefix + ".tol", sk.tol);
  sk.min_prob = cfg.get_double(prefix + ".min_prob", sk.min_prob);
  return sk;
}

FusionConfig parse_fusion(const Config& cfg) {
  FusionConfig fu;
  const std::vector<double> w =
      cfg.get_double_list("fusion.weights", {fu.weights[0], fu.weights[1], fu.weights[2]});
  if (w.size() != 3) throw std::runtime_error("fusion.weights must hold three values");
  fu.weights = {w[0], w[1], w[2]};
  fu.top_k = cfg.get_int("fusion.top_k", fu.top_k);
  fu.smoothing_alpha = cfg.get_double("fusion.smoothing_alpha", fu.smoothing_alpha);
  fu.solver = fusion_solver_from_string(cfg.get_string("fusion.solver", to_string(fu.solver)));
  fu.sinkhorn = parse_sinkhorn(cfg, "fusion");
  return fu;
}

struct DecodeSetup {
  DecodeConfig decode;
  CaptionerParams captioner;
  int cell_px = 4;
  double render_noise_sd = 0.0;
  std::uint64_t render_seed = 0;
  MetricKind metric = MetricKind::SquaredEuclidean;
};

DecodeSetup parse_decode_setup(const Config& cfg) {
  DecodeSetup s;
  s.decode.max_new_tokens = cfg.get_int("max_new_tokens", s.decode.max_new_tokens);
  const std::string sel = cfg.get_string("selection", "greedy");
  if (sel == "greedy") {
    s.decode.selection.kind = SelectionConfig::Kind::Greedy;
  } else if (sel == "sample") {
    s.decode.selection.kind = SelectionConfig::Kind::Sample;
  } else {
    throw std::runtime_error("selection must be greedy or sample");
  }
  s.decode.selection.temperature = cfg.get_double("temperature", 1.0);
  s.decode.selection.seed = cfg.get_uint64("seed", 0);
  s.decode.feedback_enabled = cfg.get_bool("feedback_enabled", true);
  s.decode.fusion = parse_fusion(cfg);
  s.decode.views.grid.rows = cfg.get_int("views.rows", 2);
  s.decode.views.grid.cols = cfg.get_int("views.cols", 2);
  s.decode.views.m = cfg.get_int("views.m", 2);
  s.decode.views.crop_w = cfg.get_int("views.crop_w", 0);
  s.decode.views.crop_h = cfg.get_int("views.crop_h", 0);
  s.decode.views.downsample_factor = cfg.get_int("views.downsample_factor", 2);
  s.decode.views.saliency_window = cfg.get_int("views.saliency_window", 0);
  s.captioner.bias_beta = cfg.get_double("captioner.bias_beta", 0.0);
  s.captioner.evidence_noise = cfg.get_double("captioner.evidence_noise", 0.0);
  s.captioner.resolution_penalty = cfg.get_double("captioner.resolution_penalty", 0.0);
  s.captioner.seed = cfg.get_uint64("captioner.seed", 0);
  if (cfg.has("captioner.cooccurrence_file")) {
    const std::string path = cfg.get_string("captioner.cooccurrence_file", "");
    std::istringstream is(slurp_file(path));
    s.captioner.cooccurrence = read_cost(is, path).costs;
  }
  s.cell_px = cfg.get_int("render.cell_px", 4);
  s.render_noise_sd = cfg.get_double("render.noise_sd", 0.0);
  s.render_seed = cfg.get_uint64("render.seed", 0);
  s.metric = metric_kind_from_string(cfg.get_string("metric", "squared_euclidean"));
  return s;
}

ExperimentSpec parse_experiment_spec(const Config& cfg) {
  ExperimentSpec spec;
  DecodeSetup setup = parse_decode_setup(cfg);
  spec.decode = setup.decode;
  spec.captioner = setup.captioner;
  spec.cell_px = setup.cell_px;
  spec.render_noise_sd = setup.render_noise_sd;
  spec.metric_kind = setup.metric;
  spec.n_scenes = cfg.get_int("n_scenes", 1);
  spec.scenes.grid_w = cfg.get_int("scenes.grid_w", spec.scenes.grid_w);
  spec.scenes.grid_h = cfg.get_int("scenes.grid_h", spec.scenes.grid_h);
  spec.scenes.min_objects = cfg.get_int("scenes.min_objects", spec.scenes.min_objects);
  spec.scenes.max_objects = cfg.get_int("scenes.max_objects", spec.scenes.max_objects);
  spec.scenes.pair_affinity = cfg.get_double("scenes.pair_affinity", spec.scenes.pair_affinity);
  if (cfg.has("seeds")) {
    spec.seeds.clear();
    for (const std::string& s : cfg.get_string_list("seeds", {}))
      spec.seeds.push_back(std::stoull(s));
  }
  spec.pope_k = cfg.get_int("pope.k", spec.pope_k);
  if (cfg.has("pope.setups")) {
    spec.pope_setups.clear();
    for (const std::string& s : cfg.get_string_list("pope.setups", {}))
      spec.pope_setups.push_back(pope_setup_from_string(s));
  }
  spec.arms = cfg.get_string_list("arms", spec.arms);
  return spec;
}

Config load_config(const std::string& path) {
  std::istringstream is(slurp_file(path));
  return Config::parse(is, path);
}

struct BarycenterArgs {
  std::vector<std::string> dists;
  std::string cost_file, embeddings_file, metric = "squared_euclidean";
  std::vector<double> weights;
  std::string solver = "exact";
  double epsilon = 0.005;
  std::string out;
};

int cmd_barycenter(const BarycenterArgs& a, OutputLedger& ledger) {
  if (a.dists.size() < 2) throw std::runtime_error("need at least two --dists files");
  if (a.cost_file.empty() == a.embeddings_file.empty())
    throw std::runtime_error("exactly one of --cost or --embeddings is required");

  std::vector<Distribution> dists;
  for (const std::string& path : a.dists) {
    std::istringstream is(slurp_file(path));
    dists.push_back(read_dist(is, path));
  }

  GroundMetric metric;
  if (!a.cost_file.empty()) {
    std::istringstream is(slurp_file(a.cost_file));
    metric = read_cost(is, a.cost_file);
  } else {
    std::istringstream is(slurp_file(a.embeddings_file));
    metric = build_ground_metric(read_embeddings(is, a.embeddings_file),
                                 metric_kind_from_string(a.metric));
  }

  std::vector<double> weights = a.weights;
  if (weights.empty()) weights.assign(dists.size(), 1.0 / static_cast<double>(dists.size()));
  if (weights.size() != dists.size())
    throw std::runtime_error("--weights arity must match the number of --dists");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::runtime_error("--weights must be positive");
    wsum += w;
  }
  for (double& w : weights) w /= wsum;

  Distribution fused;
  double objective = 0.0;
  if (a.solver == "exact") {
    LpBarycenterResult res = lp_barycenter(dists, weights, metric);
    fused = std::move(res.barycenter);
    objective = res.objective;
  } else if (a.solver == "sinkhorn") {
    SinkhornConfig sk;
    sk.epsilon = a.epsilon;
    SinkhornBarycenterResult res = sinkhorn_barycenter(dists, weights, metric, sk);
    fused = std::move(res.barycenter);
    for (std::size_t k = 0; k < dists.size(); ++k)
      objective += weights[k] * sinkhorn(fused, dists[k], metric, sk).cost;
  } else {
    throw std::runtime_error("--solver must be exact or sinkhorn");
  }

  std::ostringstream os;
  os << "# objective " << format_double(objective) << "\n";
  write_dist(os, fused);
  ledger.write(a.out, os.str());
  return 0;
}

struct DecodeArgs {
  std::string scene_file, image_file, config_file, mode = "cofidec";
  std::string trace_file, out;
};

int cmd_decode(const DecodeArgs& a, OutputLedger& ledger) {
  if (a.scene_file.empty() == a.image_file.empty())
    throw std::runtime_error("exactly one of --scene or --image is required");
  if (a.mode != "regular" && a.mode != "cofidec")
    throw std::runtime_error("--mode must be regular or cofidec");

  const Config cfg = load_config(a.config_file);
  DecodeSetup setup = parse_decode_setup(cfg);
  cfg.require_consumed();

  const CaptionVocab vocab = CaptionVocab::default_vocab();
  ImageGrid image;
  if (!a.scene_file.empty()) {
    std::istringstream is(slurp_file(a.scene_file));
    const Scene scene = read_scene(is, vocab, a.scene_file);
    image = render_scene(scene, vocab, setup.cell_px, setup.render_noise_sd, setup.render_seed);
  } else {
    std::istringstream is(slurp_file(a.image_file));
    image = read_grid(is, a.image_file);
  }

  const ToyCaptioner model(vocab, setup.captioner);
  const GroundMetric metric = build_ground_metric(vocab.embeddings, setup.metric);
  const FeedbackSynthesizer synth = [&](const std::vector<int>& tokens) {
    return synthesize_feedback(tokens, vocab, setup.cell_px, 0);
  };

  DecodeConfig dc = setup.decode;
  if (a.mode == "regular") dc.feedback_enabled = false;
  const CofidecOutput out =
      cofidec_decode(model, synth, metric, image, {}, dc, vocab.bos(), vocab.eos());

  std::ostringstream os;
  write_caption(os, out.result.tokens, vocab);
  ledger.write(a.out, os.str());
  if (!a.trace_file.empty()) {
    std::ostringstream ts;
    write_trace(ts, trace_file_from(out.trace));
    ledger.write(a.trace_file, ts.str());
  }
  return 0;
}

struct ViewsArgs {
  std::string image_file;
  std::vector<int> grid;  // rows,cols
  int m = 2;
  std::string out_dir;
};

int cmd_views(const ViewsArgs& a, OutputLedger& ledger) {
  if (a.grid.size() != 2 || a.grid[0] < 1 || a.grid[1] < 1)
    throw std::runtime_error("--n must be rows,cols with both positive");

  std::istringstream is(slurp_file(a.image_file));
  const ImageGrid image = read_grid(is, a.image_file);

  const GridShape grid{a.grid[0], a.grid[1]};
  const int factor = 2;
  const int crop_w = std::max(1, image.width / 4);
  const int crop_h = std::max(1, image.height / 4);
  const int window = std::max(1, std::min(image.width, image.height) / 4);
  const ViewSet vs = build_view_set(image, grid, factor, a.m, crop_w, crop_h, window);

  std::filesystem::create_directories(a.out_dir);
  auto path = [&](const std::string& name) {
    return (std::filesystem::path(a.out_dir) / name).string();
  };
  char buf[32];

  std::ostringstream manifest;
  manifest << "# view decomposition manifest\n";
  manifest << "original " << image.width << " " << image.height << " " << image.channels << "\n";
  manifest << "grid " << grid.rows << " " << grid.cols << " factor " << factor << "\n";

  for (std::size_t i = 0; i < vs.coarse.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "coarse_%02zu.grid", i);
    std::ostringstream os;
    write_grid(os, vs.coarse[i]);
    ledger.write(path(buf), os.str());
    manifest << "coarse " << buf << "\n";
  }
  for (std::size_t i = 0; i < vs.fine.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "fine_%02zu.grid", i);
    std::ostringstream os;
    write_grid(os, vs.fine[i].pixels);
    ledger.write(path(buf), os.str());
    manifest << "fine " << buf << " region " << vs.fine[i].region.x << " " << vs.fine[i].region.y
             << " " << vs.fine[i].region.w << " " << vs.fine[i].region.h << " score "
             << format_double(vs.fine[i].saliency_score) << "\n";
  }
  if (vs.fine_clamped) manifest << "fine_clamped true\n";
  ledger.write(path("manifest.txt"), manifest.str());
  return 0;
}

struct BenchArgs {
  std::string spec_file, out;
};

int cmd_bench(const BenchArgs& a, OutputLedger& ledger) {
  const Config cfg = load_config(a.spec_file);
  const ExperimentSpec spec = parse_experiment_spec(cfg);
  cfg.require_consumed();

  const ExperimentResult result = run_experiment(spec);

  std::ostringstream os;
  write_report(os, result.report);
  ledger.write(a.out, os.str());

  std::ostringstream stats;
  write_object_stats(stats, result.stats);
  ledger.write(a.out + ".stats", stats.str());
  return 0;
}

struct FuseReplayArgs {
  std::string dump_file, cost_file, config_file, out;
};

int cmd_fuse_replay(const FuseReplayArgs& a, OutputLedger& ledger) {
  std::istringstream ds(slurp_file(a.dump_file));
  const std::vector<std::array<Distribution, 3>> steps = read_dump(ds, a.dump_file);

  std::istringstream cs(slurp_file(a.cost_file));
  const GroundMetric metric = read_cost(cs, a.cost_file);

  const Config cfg = load_config(a.config_file);
  const FusionConfig fusion = parse_fusion(cfg);
  cfg.require_consumed();

  TraceFile trace;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    try {
      const auto& [v, c, f] = steps[t];
      FusedStep fs = fuse_distributions(v, c, f, metric, fusion);
      TraceFileStep step;
      step.fused = std::move(fs.fused);
      step.per_source_cost = fs.per_source_cost;
      step.chosen = step.fused.argmax_id();
      trace.steps.push_back(std::move(step));
    } catch (const std::exception& e) {
      throw std::runtime_error("step " + std::to_string(t) + ": " + e.what());
    }
  }

  std::ostringstream os;
  write_trace(os, trace);
  ledger.write(a.out, os.str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"coarse-to-fine decoding with Wasserstein-barycenter fusion"};
  app.require_subcommand(1);

  BarycenterArgs bary;
  CLI::App* sb = app.add_subcommand("barycenter", "fuse distributions via a barycenter");
  sb->add_option("--dists", bary.dists, "input .dist files")->required()->expected(2, -1);
  sb->add_option("--cost", bary.cost_file, "ground cost matrix (.cost)");
  sb->add_option("--embeddings", bary.embeddings_file, "token embeddings (.emb)");
  sb->add_option("--metric", bary.metric, "metric kind for --embeddings");
  sb->add_option("--weights", bary.weights, "barycenter weights")->delimiter(',');
  sb->add_option("--solver", bary.solver, "exact | sinkhorn");
  sb->add_option("--epsilon", bary.epsilon, "entropic regularization for sinkhorn");
  sb->add_option("--out", bary.out, "output .dist file")->required();

  DecodeArgs dec;
  CLI::App* sd = app.add_subcommand("decode", "caption a scene or image");
  sd->add_option("--scene", dec.scene_file, "input .scene file");
  sd->add_option("--image", dec.image_file, "input .grid file");
  sd->add_option("--config", dec.config_file, "decode configuration (.cfg)")->required();
  sd->add_option("--mode", dec.mode, "regular | cofidec");
  sd->add_option("--trace", dec.trace_file, "write the decode trace here");
  sd->add_option("--out", dec.out, "output caption file")->required();

  ViewsArgs vw;
  CLI::App* sv = app.add_subcommand("views", "decompose an image into views");
  sv->add_option("--image", vw.image_file, "input .grid file")->required();
  sv->add_option("--n", vw.grid, "coarse grid rows,cols")->required()->delimiter(',');
  sv->add_option("--m", vw.m, "number of fine crops")->required();
  sv->add_option("--out", vw.out_dir, "output directory")->required();

  BenchArgs bench;
  CLI::App* sn = app.add_subcommand("bench", "run a seeded experiment");
  sn->add_option("--spec", bench.spec_file, "experiment spec (.cfg)")->required();
  sn->add_option("--out", bench.out, "output report file")->required();

  FuseReplayArgs replay;
  CLI::App* sr = app.add_subcommand("fuse-replay", "fuse an external logits dump");
  sr->add_option("--dump", replay.dump_file, "per-step distribution dump (.dump)")->required();
  sr->add_option("--cost", replay.cost_file, "ground cost matrix (.cost)")->required();
  sr->add_option("--config", replay.config_file, "fusion configuration (.cfg)")->required();
  sr->add_option("--out", replay.out, "output trace file")->required();

  std::vector<const char*> argv;
  argv.push_back("cofidec");
  for (const std::string& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  OutputLedger ledger;
  try {
    if (sb->parsed()) return cmd_barycenter(bary, ledger);
    if (sd->parsed()) return cmd_decode(dec, ledger);
    if (sv->parsed()) return cmd_views(vw, ledger);
    if (sn->parsed()) return cmd_bench(bench, ledger);
    if (sr->parsed()) return cmd_fuse_replay(replay, ledger);
  } catch (const std::exception& e) {
    ledger.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace cofidec
