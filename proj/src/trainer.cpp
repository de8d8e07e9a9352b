#include "hypermv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "hypermv/checkpoint.hpp"
#include "hypermv/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hypermv {

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad run config: ") + e.what());
  }
  RunConfig cfg;
  auto get = [&j](const char* key, auto fallback) {
    using T = decltype(fallback);
    return j.contains(key) ? j.at(key).get<T>() : fallback;
  };
  cfg.model.T = get("T", cfg.model.T);
  cfg.model.k = get("k", cfg.model.k);
  cfg.model.L = get("L", cfg.model.L);
  cfg.model.classes = get("classes", 0);
  cfg.model.views = get("views", 0);
  cfg.model.variant = variant_from_name(get("variant", std::string("hypermv")));
  cfg.model.strategy = strategy_from_name(get("strategy", std::string("both")));
  cfg.model.attention = get("attention", true);
  if (j.contains("backbone")) {
    const json& b = j.at("backbone");
    if (b.contains("channels")) cfg.model.backbone.channels = b.at("channels").get<std::vector<int>>();
    if (b.contains("kernel")) cfg.model.backbone.kernel = b.at("kernel").get<int>();
    if (b.contains("stride")) cfg.model.backbone.stride = b.at("stride").get<int>();
    if (b.contains("pad")) cfg.model.backbone.pad = b.at("pad").get<int>();
  }
  cfg.optim.lr0 = get("lr0", cfg.optim.lr0);
  cfg.optim.weight_decay = get("weight_decay", cfg.optim.weight_decay);
  cfg.optim.gamma = get("gamma", cfg.optim.gamma);
  cfg.optim.decay_step = get("decay_step", cfg.optim.decay_step);
  cfg.batch_size = get("batch_size", cfg.batch_size);
  cfg.epochs = get("epochs", cfg.epochs);
  cfg.seed = get("seed", cfg.seed);
  cfg.workers = get("workers", cfg.workers);
  cfg.val_views = get("val_views", cfg.val_views);
  if (cfg.batch_size < 1 || cfg.epochs < 0 || cfg.workers < 1)
    throw std::runtime_error("run config: batch_size/epochs/workers out of range");
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["T"] = cfg.model.T;
  j["k"] = cfg.model.k;
  j["L"] = cfg.model.L;
  j["classes"] = cfg.model.classes;
  j["views"] = cfg.model.views;
  j["variant"] = variant_name(cfg.model.variant);
  j["strategy"] = strategy_name(cfg.model.strategy);
  j["attention"] = cfg.model.attention;
  j["backbone"] = {{"channels", cfg.model.backbone.channels},
                   {"kernel", cfg.model.backbone.kernel},
                   {"stride", cfg.model.backbone.stride},
                   {"pad", cfg.model.backbone.pad}};
  j["lr0"] = cfg.optim.lr0;
  j["weight_decay"] = cfg.optim.weight_decay;
  j["gamma"] = cfg.optim.gamma;
  j["decay_step"] = cfg.optim.decay_step;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["val_views"] = cfg.val_views;
  return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open run config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write run config: " + path);
  os << run_config_to_json(cfg) << '\n';
}

std::vector<Sample> make_samples(const std::vector<RecordingManifest>& manifests,
                                 const std::vector<SplitEntry>& entries, Variant variant) {
  std::map<std::string, const RecordingManifest*> by_id;
  for (const auto& m : manifests) by_id[m.recording_id] = &m;
  std::vector<Sample> samples;
  for (const auto& e : entries) {
    auto it = by_id.find(e.recording_id);
    if (it == by_id.end())
      throw std::runtime_error("split references unknown recording: " + e.recording_id);
    const RecordingManifest* m = it->second;
    std::vector<int> views = e.views;
    if (views.empty())
      for (int v = 0; v < m->views; ++v) views.push_back(v);
    for (int v : views)
      if (v < 0 || v >= m->views)
        throw std::runtime_error("split view index out of range for " + e.recording_id);
    if (variant == Variant::kSingleViewBaseline) {
      for (int v : views) samples.push_back({m, {v}, m->label});
    } else {
      samples.push_back({m, std::move(views), m->label});
    }
  }
  return samples;
}

bool label_in_top_m(const Tensor& logits, int label, int m) {
  const int C = static_cast<int>(logits.size());
  if (label < 0 || label >= C)
    throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(C) + ")");
  const double ly = logits[static_cast<std::size_t>(label)];
  int rank = 0;
  for (int c = 0; c < C; ++c) {
    const double lc = logits[static_cast<std::size_t>(c)];
    if (lc > ly || (lc == ly && c < label)) ++rank;
  }
  return rank < m;
}

namespace {

// Preloaded per-sample input: stacked volumes plus label.
struct Prepared {
  Tensor frames;  // [V*T, 1, Y, X]
  int label = 0;
  int views = 0;
};

std::vector<Prepared> preload(const std::vector<Sample>& samples, int T, int workers) {
  std::vector<Prepared> out(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    out[i].frames = stack_volumes(load_volumes(*s.manifest, s.views, T));
    out[i].label = s.label;
    out[i].views = static_cast<int>(s.views.empty() ? s.manifest->views : s.views.size());
  }
  return out;
}

std::vector<RealVolume> unstack(const Prepared& p, int T) {
  // model_forward consumes RealVolumes; rebuild the per-view views over the
  // cached stacked tensor without re-reading events.
  std::vector<RealVolume> views(static_cast<std::size_t>(p.views));
  const int Y = p.frames.dim(2), X = p.frames.dim(3);
  const std::size_t frame_size = static_cast<std::size_t>(Y) * X;
  for (int v = 0; v < p.views; ++v) {
    RealVolume& vol = views[static_cast<std::size_t>(v)];
    vol.x = X;
    vol.y = Y;
    vol.t = T;
    vol.values.assign(p.frames.data() + static_cast<std::size_t>(v) * T * frame_size,
                      p.frames.data() + static_cast<std::size_t>(v + 1) * T * frame_size);
  }
  return views;
}

EvalMetrics evaluate_prepared(const ModelConfig& cfg, const ParamStore& params,
                              const std::vector<Prepared>& samples, int T) {
  EvalMetrics m;
  m.count = static_cast<int>(samples.size());
  if (samples.empty()) return m;
  for (const Prepared& p : samples) {
    const Tensor logits = model_logits(cfg, params, unstack(p, T));
    Tape tape;
    const int node = tape.input(Tensor({1, static_cast<int>(logits.size())}, logits.values()), false);
    m.loss += tape.value(tape.cross_entropy(node, {p.label}))[0];
    m.top1 += label_in_top_m(logits, p.label, 1) ? 1.0 : 0.0;
    m.top3 += label_in_top_m(logits, p.label, 3) ? 1.0 : 0.0;
    m.top5 += label_in_top_m(logits, p.label, 5) ? 1.0 : 0.0;
  }
  m.loss /= m.count;
  m.top1 /= m.count;
  m.top3 /= m.count;
  m.top5 /= m.count;
  return m;
}

}  // namespace

EvalMetrics evaluate(const ModelConfig& cfg, const ParamStore& params,
                     const std::vector<Sample>& samples, int workers) {
  return evaluate_prepared(cfg, params, preload(samples, cfg.T, workers), cfg.T);
}

void resolve_config(RunConfig& cfg, const std::vector<RecordingManifest>& manifests,
                    const DatasetSplit& split) {
  if (manifests.empty()) throw std::runtime_error("no recordings in dataset");
  if (cfg.model.classes <= 0) {
    int max_label = 0;
    for (const auto& m : manifests) max_label = std::max(max_label, m.label);
    cfg.model.classes = max_label + 1;
  }
  if (cfg.model.views <= 0) {
    if (cfg.model.variant == Variant::kSingleViewBaseline) {
      cfg.model.views = 1;
    } else if (!split.train.empty() && !split.train.front().views.empty()) {
      cfg.model.views = static_cast<int>(split.train.front().views.size());
    } else {
      cfg.model.views = manifests.front().views;
    }
  }
}

TrainResult train_core(const RunConfig& cfg, const std::vector<RecordingManifest>& manifests,
                       const std::vector<Sample>& train_samples,
                       const std::vector<Sample>& val_samples, bool verbose) {
  (void)manifests;
  validate_model_config(cfg.model);
  if (train_samples.empty()) throw std::runtime_error("training partition is empty");

  const std::vector<Prepared> train_data = preload(train_samples, cfg.model.T, cfg.workers);
  const std::vector<Prepared> val_data = preload(val_samples, cfg.model.T, cfg.workers);

  TrainResult result;
  ParamStore params = init_model(cfg.model, cfg.seed);
  AdamState adam(params);
  std::mt19937_64 order_gen(rng::mix(cfg.seed ^ 0x736875666665ull));

  std::vector<std::size_t> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_top1 = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(cfg.optim, epoch);
    rng::shuffle(order, order_gen);

    double loss_sum = 0.0;
    double hit_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int bs = static_cast<int>(end - start);
      Tape tape;
      ParamHandles handles = register_params(tape, params);
      int total = -1;
      for (std::size_t i = start; i < end; ++i) {
        const Prepared& p = train_data[order[i]];
        const int logits = model_forward(tape, cfg.model, handles, unstack(p, cfg.model.T));
        const int ce = tape.cross_entropy(logits, {p.label});
        total = total < 0 ? ce : tape.add(total, ce);
        const Tensor& lv = tape.value(logits);
        hit_sum += label_in_top_m(Tensor({lv.cols()}, lv.values()), p.label, 1) ? 1.0 : 0.0;
      }
      const int loss = tape.scale(total, 1.0 / bs);
      const double loss_value = tape.value(loss)[0];
      if (!std::isfinite(loss_value))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      loss_sum += loss_value * bs;
      tape.backward(loss);

      ParamStore grads;
      for (const auto& [name, node] : handles.nodes) grads.emplace(name, tape.grad(node));
      adam.step(params, grads, cfg.optim, lr);
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr;
    em.train_loss = loss_sum / static_cast<double>(train_data.size());
    em.train_top1 = hit_sum / static_cast<double>(train_data.size());
    if (!val_data.empty()) {
      em.val = evaluate_prepared(cfg.model, params, val_data, cfg.model.T);
      if (em.val.top1 > best_top1) {
        best_top1 = em.val.top1;
        result.best_params = params;
        result.best_epoch = epoch;
      }
    }
    result.log.push_back(em);
    if (verbose) std::cout << metrics_json_line(em) << std::endl;
  }
  result.final_params = std::move(params);
  if (result.best_epoch < 0) result.best_params = result.final_params;
  return result;
}

TrainResult train(RunConfig cfg, const DatasetSplit& split, const std::string& data_root,
                  const std::string& out_dir, bool verbose) {
  const std::vector<RecordingManifest> manifests = scan_dataset(data_root);
  resolve_config(cfg, manifests, split);
  const auto train_samples = make_samples(manifests, split.train, cfg.model.variant);
  const auto val_samples = make_samples(manifests, split.val, cfg.model.variant);

  fs::create_directories(out_dir);
  save_run_config(cfg, (fs::path(out_dir) / "config.json").string());

  TrainResult result = train_core(cfg, manifests, train_samples, val_samples, verbose);

  std::ofstream log((fs::path(out_dir) / "metrics.jsonl").string(),
                    std::ios::binary | std::ios::trunc);
  for (const EpochMetrics& em : result.log) log << metrics_json_line(em) << '\n';
  save_checkpoint(result.best_params, (fs::path(out_dir) / "best.hmv1").string());
  save_checkpoint(result.final_params, (fs::path(out_dir) / "final.hmv1").string());
  return result;
}

std::string metrics_json_line(const EpochMetrics& m) {
  json j;
  j["epoch"] = m.epoch;
  j["lr"] = m.lr;
  j["train_loss"] = m.train_loss;
  j["train_top1"] = m.train_top1;
  if (m.val.count > 0) {
    j["val_loss"] = m.val.loss;
    j["val_top1"] = m.val.top1;
    j["val_top3"] = m.val.top3;
    j["val_top5"] = m.val.top5;
  }
  return j.dump();
}

std::vector<AblationRow> ablation_suite(const RunConfig& base, const AblationGrid& grid,
                                        const std::vector<RecordingManifest>& manifests,
                                        const DatasetSplit& split, bool verbose) {
  if (grid.seeds < 1) throw std::invalid_argument("ablation needs >= 1 seed");
  std::vector<AblationRow> rows;
  for (Strategy strategy : grid.strategies) {
    for (int attention : grid.attention) {
      for (int L : grid.layers) {
        for (int k : grid.k_values) {
          AblationRow row;
          row.cell = {strategy, attention != 0, L, k};
          for (int s = 0; s < grid.seeds; ++s) {
            RunConfig cfg = base;
            cfg.model.strategy = strategy;
            cfg.model.attention = attention != 0;
            cfg.model.L = L;
            cfg.model.k = k;
            cfg.seed = base.seed + static_cast<std::uint64_t>(s);
            resolve_config(cfg, manifests, split);
            const auto train_samples = make_samples(manifests, split.train, cfg.model.variant);
            const auto val_samples = make_samples(manifests, split.val, cfg.model.variant);
            const auto test_samples = make_samples(manifests, split.test, cfg.model.variant);
            TrainResult r = train_core(cfg, manifests, train_samples, val_samples, false);
            const EvalMetrics m =
                evaluate(cfg.model, r.best_params, test_samples, cfg.workers);
            row.top1.push_back(m.top1);
            if (verbose)
              std::cout << "ablate strategy=" << strategy_name(strategy)
                        << " attention=" << (attention != 0) << " L=" << L << " k=" << k
                        << " seed=" << cfg.seed << " top1=" << m.top1 << std::endl;
          }
          double mean = 0.0;
          for (double v : row.top1) mean += v;
          mean /= static_cast<double>(row.top1.size());
          double var = 0.0;
          for (double v : row.top1) var += (v - mean) * (v - mean);
          row.mean = mean;
          row.stddev = row.top1.size() > 1
                           ? std::sqrt(var / static_cast<double>(row.top1.size() - 1))
                           : 0.0;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json j;
    j["strategy"] = strategy_name(row.cell.strategy);
    j["attention"] = row.cell.attention;
    j["L"] = row.cell.L;
    j["k"] = row.cell.k;
    j["top1_mean"] = row.mean;
    j["top1_std"] = row.stddev;
    j["top1"] = row.top1;
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

}  // namespace hypermv
