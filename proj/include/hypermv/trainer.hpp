#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypermv/dataset.hpp"
#include "hypermv/model.hpp"
#include "hypermv/optim.hpp"

namespace hypermv {

/// Run configuration: model shape, optimizer settings, loop controls.
/// JSON round-trips through load/save_run_config.
struct RunConfig {
  ModelConfig model;
  AdamConfig optim;
  int batch_size = 12;
  int epochs = 40;
  std::uint64_t seed = 0;
  int workers = 1;    // preprocessing pool; 1 guarantees bitwise determinism
  int val_views = 1;  // held-out validation views in cross-view splits
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

/// One recording (or one view of it) with its label.
struct Sample {
  const RecordingManifest* manifest = nullptr;
  std::vector<int> views;  // empty = all views
  int label = 0;
};

/// Materializes split entries into samples; the single-view baseline expands
/// every entry into one sample per view.
std::vector<Sample> make_samples(const std::vector<RecordingManifest>& manifests,
                                 const std::vector<SplitEntry>& entries, Variant variant);

struct EvalMetrics {
  double loss = 0.0;
  double top1 = 0.0;
  double top3 = 0.0;
  double top5 = 0.0;
  int count = 0;
};

/// True when the label ranks among the m largest logits, ties broken by
/// smaller class index.
bool label_in_top_m(const Tensor& logits, int label, int m);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_top1 = 0.0;
  EvalMetrics val;
};

struct TrainResult {
  ParamStore final_params;
  ParamStore best_params;
  int best_epoch = -1;  // -1 when there is no validation partition
  std::vector<EpochMetrics> log;
};

/// Core loop: Adam + exponential lr decay on mean cross-entropy, metrics per
/// epoch, best checkpoint by validation Top-1. Deterministic in the seed.
/// Aborts with a diagnostic if the loss turns non-finite.
TrainResult train_core(const RunConfig& cfg, const std::vector<RecordingManifest>& manifests,
                       const std::vector<Sample>& train_samples,
                       const std::vector<Sample>& val_samples, bool verbose);

/// train_core + artifacts: config.json, metrics.jsonl, best.hmv1, final.hmv1
/// under out_dir. The config's classes/views fields are resolved from the
/// data before training.
TrainResult train(RunConfig cfg, const DatasetSplit& split, const std::string& data_root,
                  const std::string& out_dir, bool verbose = true);

EvalMetrics evaluate(const ModelConfig& cfg, const ParamStore& params,
                     const std::vector<Sample>& samples, int workers = 1);

std::string metrics_json_line(const EpochMetrics& m);

/// Resolves classes (max label + 1) and the training view count from the
/// split, so configs can leave them at 0 for "derive from data".
void resolve_config(RunConfig& cfg, const std::vector<RecordingManifest>& manifests,
                    const DatasetSplit& split);

struct AblationCell {
  Strategy strategy = Strategy::kBoth;
  bool attention = true;
  int L = 2;
  int k = 3;
};

struct AblationRow {
  AblationCell cell;
  std::vector<double> top1;  // per seed
  double mean = 0.0;
  double stddev = 0.0;
};

struct AblationGrid {
  std::vector<Strategy> strategies = {Strategy::kRule, Strategy::kKnn, Strategy::kBoth};
  std::vector<int> attention = {1, 0};
  std::vector<int> layers = {2};
  std::vector<int> k_values = {3};
  int seeds = 5;
};

/// Trains one run per (cell, seed) and reports mean +/- std test Top-1.
std::vector<AblationRow> ablation_suite(const RunConfig& base, const AblationGrid& grid,
                                        const std::vector<RecordingManifest>& manifests,
                                        const DatasetSplit& split, bool verbose);

std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace hypermv
