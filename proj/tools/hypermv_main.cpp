#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypermv/checkpoint.hpp"
#include "hypermv/event_synth.hpp"
#include "hypermv/rng.hpp"
#include "hypermv/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hypermv;

namespace {

struct SynthArgs {
  int classes = 5;
  int subjects = 20;
  int views = 3;
  int width = 48;
  int height = 48;
  double theta = 0.2;
  long long refractory = 100;
  double rate = 200.0;
  long long duration = 2'340'000;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  CameraRig rig = make_ring_rig(a.views, a.width, a.height);
  EventCameraParams params;
  params.theta = a.theta;
  params.refractory_us = a.refractory;
  std::vector<std::uint64_t> subjects;
  for (int s = 0; s < a.subjects; ++s)
    subjects.push_back(rng::mix(a.seed + static_cast<std::uint64_t>(s)));
  const auto manifests =
      synth_dataset(a.classes, subjects, rig, params, a.out, a.duration, a.rate);
  std::size_t events = 0;
  for (const auto& m : manifests)
    for (int v = 0; v < m.views; ++v) events += load_view(m, v).events.size();
  std::cout << "wrote " << manifests.size() << " recordings (" << a.classes << " classes x "
            << a.subjects << " subjects, " << a.views << " views, " << events
            << " events) to " << a.out << std::endl;
  return 0;
}

int cmd_split(const std::string& data, const std::string& mode, std::uint64_t seed,
              int val_views, const std::string& out) {
  const auto manifests = scan_dataset(data);
  const DatasetSplit split =
      make_splits(manifests, split_mode_from_name(mode), seed, val_views);
  write_split(split, out);
  std::cout << "split " << mode << " seed=" << seed << ": train=" << split.train.size()
            << " val=" << split.val.size() << " test=" << split.test.size() << " -> " << out
            << std::endl;
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data,
              const std::string& split_path, const std::string& out) {
  const RunConfig cfg = load_run_config(config_path);
  const DatasetSplit split = read_split(split_path);
  const TrainResult result = train(cfg, split, data, out);
  std::cout << "checkpoints in " << out << " (best epoch " << result.best_epoch << ")"
            << std::endl;
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             const std::string& data, const std::string& split_path,
             const std::string& partition) {
  RunConfig cfg = load_run_config(config_path);
  const DatasetSplit split = read_split(split_path);
  const auto manifests = scan_dataset(data);
  resolve_config(cfg, manifests, split);
  const ParamStore params = load_checkpoint(checkpoint);
  const auto samples =
      make_samples(manifests, split.partition(partition), cfg.model.variant);
  const EvalMetrics m = evaluate(cfg.model, params, samples, cfg.workers);
  json j;
  j["partition"] = partition;
  j["count"] = m.count;
  j["loss"] = m.loss;
  j["top1"] = m.top1;
  j["top3"] = m.top3;
  j["top5"] = m.top5;
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& grid_path, int seeds,
               const std::string& data, const std::string& split_path,
               const std::string& out) {
  const RunConfig base = load_run_config(config_path);
  AblationGrid grid;
  if (!grid_path.empty()) {
    std::ifstream is(grid_path);
    if (!is) throw std::runtime_error("cannot open grid file: " + grid_path);
    json j;
    is >> j;
    if (j.contains("strategies")) {
      grid.strategies.clear();
      for (const auto& s : j.at("strategies"))
        grid.strategies.push_back(strategy_from_name(s.get<std::string>()));
    }
    if (j.contains("attention")) grid.attention = j.at("attention").get<std::vector<int>>();
    if (j.contains("L")) grid.layers = j.at("L").get<std::vector<int>>();
    if (j.contains("k")) grid.k_values = j.at("k").get<std::vector<int>>();
    if (j.contains("seeds")) grid.seeds = j.at("seeds").get<int>();
  }
  if (seeds > 0) grid.seeds = seeds;
  const auto manifests = scan_dataset(data);
  const DatasetSplit split = read_split(split_path);
  const auto rows = ablation_suite(base, grid, manifests, split, true);
  const std::string table = ablation_table(rows);
  std::cout << table << std::endl;
  if (!out.empty()) {
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    os << table << '\n';
  }
  return 0;
}

int cmd_inspect(const std::string& recording, const std::string& dump,
                const std::string& config_path, const std::string& checkpoint) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config(config_path);
  const RecordingManifest m = read_manifest((fs::path(recording) / "manifest.json").string());
  if (cfg.model.classes <= 0) cfg.model.classes = m.label + 1 < 2 ? 2 : m.label + 1;
  if (cfg.model.views <= 0) cfg.model.views = m.views;
  json out;
  out["recording_id"] = m.recording_id;
  out["label"] = m.label;

  if (dump == "frames") {
    json views = json::array();
    for (int v = 0; v < m.views; ++v) {
      const FrameVolume vol = render_volume(load_view(m, v), cfg.model.T, m.width, m.height);
      json jv;
      jv["view"] = v;
      json sums = json::array(), nonzero = json::array();
      for (const auto& frame : vol.frames) {
        long long sum = 0;
        int nz = 0;
        for (int px : frame) {
          sum += px;
          if (px != 0) ++nz;
        }
        sums.push_back(sum);
        nonzero.push_back(nz);
      }
      jv["polarity_sums"] = sums;
      jv["nonzero_pixels"] = nonzero;
      views.push_back(std::move(jv));
    }
    out["T"] = cfg.model.T;
    out["views"] = views;
    std::cout << out.dump(2) << std::endl;
    return 0;
  }

  ParamStore params = checkpoint.empty() ? init_model(cfg.model, cfg.seed)
                                         : load_checkpoint(checkpoint);
  out["params"] = checkpoint.empty() ? "seeded-init" : checkpoint;

  if (dump == "weights") {
    json jp = json::array();
    for (const auto& [name, t] : params) {
      json e;
      e["name"] = name;
      e["shape"] = t.shape();
      double mn = t.size() ? t[0] : 0.0, mx = mn, mean = 0.0;
      for (double v : t.values()) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        mean += v;
      }
      e["min"] = mn;
      e["max"] = mx;
      e["mean"] = t.size() ? mean / static_cast<double>(t.size()) : 0.0;
      jp.push_back(std::move(e));
    }
    out["parameters"] = jp;
    std::cout << out.dump(2) << std::endl;
    return 0;
  }

  if (dump != "hypergraph")
    throw std::runtime_error("unknown dump kind: " + dump + " (want hypergraph|weights|frames)");

  const auto volumes = load_volumes(m, {}, cfg.model.T);
  const Tensor embeddings = extract(volumes, cfg.model.backbone, params);
  const auto edges = build_model_edges(cfg.model, embeddings, m.views);
  const IncidenceStructure inc = build_incidence(edges, m.views * cfg.model.T);
  json je = json::array();
  for (const auto& e : edges) {
    json x;
    x["kind"] = edge_kind_name(e.kind);
    x["anchor"] = e.anchor;
    x["members"] = e.members;
    je.push_back(std::move(x));
  }
  out["edges"] = je;
  out["H_rows"] = inc.vertex_count;
  out["H_cols"] = inc.edge_count;
  out["Dv"] = inc.dv;
  out["De"] = inc.de;

  PropagationParams prop;
  for (int l = 0; l < cfg.model.L; ++l) prop.theta.push_back(params.at("prop.theta" + std::to_string(l)));
  prop.edge_weights = cfg.model.attention && params.count("prop.we") &&
                              params.at("prop.we").size() == static_cast<std::size_t>(inc.edge_count)
                          ? params.at("prop.we")
                          : Tensor::full({inc.edge_count}, 1.0);
  prop.vertex_weights = cfg.model.attention && params.count("prop.wv") &&
                                params.at("prop.wv").size() == static_cast<std::size_t>(inc.vertex_count)
                            ? params.at("prop.wv")
                            : Tensor::full({inc.vertex_count}, 1.0);
  const Tensor features = propagate(embeddings, inc, prop);
  double total = 0.0;
  std::vector<double> omega(static_cast<std::size_t>(features.rows()), 0.0);
  for (int i = 0; i < features.rows(); ++i) {
    double l1 = 0.0;
    for (int j = 0; j < features.cols(); ++j) l1 += std::fabs(features.at(i, j));
    omega[static_cast<std::size_t>(i)] = l1;
    total += l1;
  }
  for (double& w : omega) w = total > 0.0 ? w / total : 1.0 / static_cast<double>(omega.size());
  out["omega"] = omega;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_convert(const std::string& in, const std::string& out, int T, int width, int height,
                bool normalize) {
  const ViewStream stream = read_events(in, width, height);
  const FrameVolume vol = render_volume(stream, T, width, height);
  json j;
  j["X"] = vol.x;
  j["Y"] = vol.y;
  j["T"] = vol.t;
  j["events"] = stream.events.size();
  if (normalize) {
    const RealVolume rv = normalize_volume(vol);
    j["frames"] = rv.values;
    j["normalized"] = true;
  } else {
    j["frames"] = vol.frames;
    j["normalized"] = false;
  }
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << j.dump() << '\n';
  std::cout << "wrote " << out << " (" << stream.events.size() << " events, T=" << T << ")"
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HyperMV: multi-view event-based action recognition pipeline"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic multi-view event dataset");
  s->add_option("--classes", synth.classes, "action classes")->check(CLI::Range(2, 1000));
  s->add_option("--subjects", synth.subjects, "subjects per class")->check(CLI::PositiveNumber);
  s->add_option("--views", synth.views, "camera views")->check(CLI::PositiveNumber);
  s->add_option("--width", synth.width, "sensor width");
  s->add_option("--height", synth.height, "sensor height");
  s->add_option("--theta", synth.theta, "contrast threshold");
  s->add_option("--refractory", synth.refractory, "refractory period (us)");
  s->add_option("--rate", synth.rate, "render frame rate (Hz)");
  s->add_option("--duration", synth.duration, "recording duration (us)");
  s->add_option("--seed", synth.seed, "subject seed base");
  s->add_option("--out", synth.out, "output dataset directory")->required();

  std::string data, mode = "cross-subject", out, config_path, split_path, partition = "test";
  std::string checkpoint, grid_path, recording, dump = "hypergraph", in_path;
  std::uint64_t seed = 0;
  int val_views = 1, seeds = 0, T = 9, width = 48, height = 48;
  bool normalize = false;

  auto* sp = app.add_subcommand("split", "partition a dataset by subjects or views");
  sp->add_option("--data", data, "dataset root")->required();
  sp->add_option("--mode", mode, "cross-subject|cross-view");
  sp->add_option("--seed", seed, "shuffle seed");
  sp->add_option("--val-views", val_views, "held-out validation views (cross-view)");
  sp->add_option("--out", out, "split file")->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "run config JSON")->required();
  tr->add_option("--data", data, "dataset root")->required();
  tr->add_option("--split", split_path, "split file")->required();
  tr->add_option("--out", out, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "HMV1 checkpoint")->required();
  ev->add_option("--config", config_path, "run config JSON")->required();
  ev->add_option("--data", data, "dataset root")->required();
  ev->add_option("--split", split_path, "split file")->required();
  ev->add_option("--partition", partition, "train|val|test");

  auto* ab = app.add_subcommand("ablate", "run the ablation grid");
  ab->add_option("--config", config_path, "base run config JSON")->required();
  ab->add_option("--grid", grid_path, "grid JSON (strategies/attention/L/k/seeds)");
  ab->add_option("--seeds", seeds, "override seed count");
  ab->add_option("--data", data, "dataset root")->required();
  ab->add_option("--split", split_path, "split file")->required();
  ab->add_option("--out", out, "write the table JSON here too");

  auto* insp = app.add_subcommand("inspect", "dump hypergraph/weights/frames as JSON");
  insp->add_option("--recording", recording, "recording directory")->required();
  insp->add_option("--dump", dump, "hypergraph|weights|frames");
  insp->add_option("--config", config_path, "run config JSON");
  insp->add_option("--checkpoint", checkpoint, "HMV1 checkpoint");

  auto* cv = app.add_subcommand("convert", "render an event file into frame volumes");
  cv->add_option("--in", in_path, "EVT-CSV event file")->required();
  cv->add_option("--out", out, "output JSON volume")->required();
  cv->add_option("-T,--windows", T, "time windows");
  cv->add_option("--width", width, "sensor width")->required();
  cv->add_option("--height", height, "sensor height")->required();
  cv->add_flag("--normalize", normalize, "emit max-abs normalized values");

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (sp->parsed()) return cmd_split(data, mode, seed, val_views, out);
    if (tr->parsed()) return cmd_train(config_path, data, split_path, out);
    if (ev->parsed()) return cmd_eval(checkpoint, config_path, data, split_path, partition);
    if (ab->parsed()) return cmd_ablate(config_path, grid_path, seeds, data, split_path, out);
    if (insp->parsed()) return cmd_inspect(recording, dump, config_path, checkpoint);
    if (cv->parsed()) return cmd_convert(in_path, out, T, width, height, normalize);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
