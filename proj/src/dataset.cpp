#include "hypermv/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "hypermv/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hypermv {

void write_manifest(const RecordingManifest& m, const std::string& path) {
  json j;
  j["recording_id"] = m.recording_id;
  j["label"] = m.label;
  j["subject"] = m.subject;
  j["V"] = m.views;
  j["X"] = m.width;
  j["Y"] = m.height;
  j["t_begin"] = m.t_begin;
  j["t_end"] = m.t_end;
  j["views"] = m.view_files;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest: " + path);
  os << j.dump(2) << '\n';
}

RecordingManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad manifest " + path + ": " + e.what());
  }
  RecordingManifest m;
  m.recording_id = j.at("recording_id").get<std::string>();
  m.label = j.at("label").get<int>();
  m.subject = j.at("subject").get<std::uint64_t>();
  m.views = j.at("V").get<int>();
  m.width = j.at("X").get<int>();
  m.height = j.at("Y").get<int>();
  m.t_begin = j.at("t_begin").get<std::int64_t>();
  m.t_end = j.at("t_end").get<std::int64_t>();
  m.view_files = j.at("views").get<std::vector<std::string>>();
  if (static_cast<int>(m.view_files.size()) != m.views)
    throw std::runtime_error("manifest " + path + ": view file count != V");
  m.dir = fs::path(path).parent_path().string();
  return m;
}

std::vector<RecordingManifest> scan_dataset(const std::string& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root not found: " + root);
  std::vector<RecordingManifest> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const fs::path mpath = entry.path() / "manifest.json";
    if (fs::exists(mpath)) out.push_back(read_manifest(mpath.string()));
  }
  std::sort(out.begin(), out.end(), [](const RecordingManifest& a, const RecordingManifest& b) {
    return a.recording_id < b.recording_id;
  });
  return out;
}

ViewStream load_view(const RecordingManifest& m, int view) {
  if (view < 0 || view >= m.views)
    throw std::out_of_range("view index " + std::to_string(view) + " outside manifest V=" +
                            std::to_string(m.views));
  const fs::path p = fs::path(m.dir) / m.view_files[static_cast<std::size_t>(view)];
  ViewStream s = read_events(p.string(), m.width, m.height);
  s.t_begin = m.t_begin;
  s.t_end = m.t_end;
  if (!s.events.empty() && (s.events.front().t < s.t_begin || s.events.back().t > s.t_end))
    throw std::runtime_error("events outside manifest bounds in " + p.string());
  return s;
}

std::vector<RealVolume> load_volumes(const RecordingManifest& m, std::vector<int> views, int T) {
  if (views.empty()) {
    views.resize(static_cast<std::size_t>(m.views));
    for (int v = 0; v < m.views; ++v) views[static_cast<std::size_t>(v)] = v;
  }
  std::vector<RealVolume> out;
  out.reserve(views.size());
  for (int v : views)
    out.push_back(normalize_volume(render_volume(load_view(m, v), T, m.width, m.height)));
  return out;
}

const std::vector<SplitEntry>& DatasetSplit::partition(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw std::invalid_argument("unknown partition: " + name + " (want train|val|test)");
}

DatasetSplit make_splits(const std::vector<RecordingManifest>& manifests, SplitMode mode,
                         std::uint64_t seed, int val_views) {
  DatasetSplit split;
  split.mode = mode;
  split.seed = seed;
  std::mt19937_64 gen(rng::mix(seed));

  if (mode == SplitMode::kCrossSubject) {
    std::set<std::uint64_t> subject_set;
    for (const auto& m : manifests) subject_set.insert(m.subject);
    std::vector<std::uint64_t> subjects(subject_set.begin(), subject_set.end());
    if (subjects.size() < 10)
      throw std::invalid_argument("cross-subject split needs >= 10 subjects, have " +
                                  std::to_string(subjects.size()));
    rng::shuffle(subjects, gen);
    const std::size_t n = subjects.size();
    const std::size_t n_val = n / 10;
    const std::size_t n_test = n / 10;
    std::set<std::uint64_t> val_set(subjects.end() - static_cast<long>(n_val + n_test),
                                    subjects.end() - static_cast<long>(n_test));
    std::set<std::uint64_t> test_set(subjects.end() - static_cast<long>(n_test),
                                     subjects.end());
    for (const auto& m : manifests) {
      SplitEntry e{m.recording_id, {}};
      if (test_set.count(m.subject))
        split.test.push_back(std::move(e));
      else if (val_set.count(m.subject))
        split.val.push_back(std::move(e));
      else
        split.train.push_back(std::move(e));
    }
    return split;
  }

  // Cross-view: all recordings share the view layout; partition view indices.
  if (manifests.empty()) throw std::invalid_argument("cross-view split needs recordings");
  const int V = manifests.front().views;
  for (const auto& m : manifests)
    if (m.views != V)
      throw std::invalid_argument("cross-view split needs a uniform view count");
  if (val_views < 0) throw std::invalid_argument("val_views must be >= 0");
  if (V < val_views + 2)
    throw std::invalid_argument("cross-view split needs views >= val_views + 2, have " +
                                std::to_string(V));
  std::vector<int> order(static_cast<std::size_t>(V));
  for (int v = 0; v < V; ++v) order[static_cast<std::size_t>(v)] = v;
  rng::shuffle(order, gen);
  const int test_view = order.back();
  std::vector<int> heldout_val(order.end() - 1 - val_views, order.end() - 1);
  std::vector<int> train_views(order.begin(), order.end() - 1 - val_views);
  std::sort(train_views.begin(), train_views.end());
  std::sort(heldout_val.begin(), heldout_val.end());
  for (const auto& m : manifests) {
    split.train.push_back({m.recording_id, train_views});
    for (int v : heldout_val) split.val.push_back({m.recording_id, {v}});
    split.test.push_back({m.recording_id, {test_view}});
  }
  return split;
}

std::string split_mode_name(SplitMode mode) {
  return mode == SplitMode::kCrossSubject ? "cross-subject" : "cross-view";
}

SplitMode split_mode_from_name(const std::string& name) {
  if (name == "cross-subject") return SplitMode::kCrossSubject;
  if (name == "cross-view") return SplitMode::kCrossView;
  throw std::invalid_argument("unknown split mode: " + name +
                              " (want cross-subject|cross-view)");
}

namespace {

json entries_to_json(const std::vector<SplitEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json je;
    je["recording_id"] = e.recording_id;
    je["views"] = e.views;
    arr.push_back(std::move(je));
  }
  return arr;
}

std::vector<SplitEntry> entries_from_json(const json& arr) {
  std::vector<SplitEntry> out;
  for (const auto& je : arr) {
    SplitEntry e;
    e.recording_id = je.at("recording_id").get<std::string>();
    e.views = je.at("views").get<std::vector<int>>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

void write_split(const DatasetSplit& split, const std::string& path) {
  json j;
  j["mode"] = split_mode_name(split.mode);
  j["seed"] = split.seed;
  j["train"] = entries_to_json(split.train);
  j["val"] = entries_to_json(split.val);
  j["test"] = entries_to_json(split.test);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write split: " + path);
  os << j.dump(2) << '\n';
}

DatasetSplit read_split(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open split: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad split file " + path + ": " + e.what());
  }
  DatasetSplit split;
  split.mode = split_mode_from_name(j.at("mode").get<std::string>());
  split.seed = j.at("seed").get<std::uint64_t>();
  split.train = entries_from_json(j.at("train"));
  split.val = entries_from_json(j.at("val"));
  split.test = entries_from_json(j.at("test"));
  return split;
}

}  // namespace hypermv
