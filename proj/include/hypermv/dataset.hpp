#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypermv/event_io.hpp"

namespace hypermv {

/// Descriptor of one multi-view recording on disk. A recording directory
/// holds view<k>.csv for k = 0..V-1 plus manifest.json with these fields.
struct RecordingManifest {
  std::string recording_id;
  int label = 0;
  std::uint64_t subject = 0;
  int views = 0;
  int width = 0;
  int height = 0;
  std::int64_t t_begin = 0;
  std::int64_t t_end = 0;
  std::vector<std::string> view_files;
  std::string dir;  // directory containing the manifest; not serialized
};

void write_manifest(const RecordingManifest& m, const std::string& path);
RecordingManifest read_manifest(const std::string& path);

/// Scans <root>/<recording_id>/manifest.json, sorted by recording id.
std::vector<RecordingManifest> scan_dataset(const std::string& root);

/// Reads one view's events with the manifest's resolution and time bounds.
ViewStream load_view(const RecordingManifest& m, int view);

/// Normalized frame volumes for the selected views (all views when empty),
/// in the order given.
std::vector<RealVolume> load_volumes(const RecordingManifest& m, std::vector<int> views, int T);

enum class SplitMode { kCrossSubject, kCrossView };

/// One dataset sample: a recording plus the view indices fed to the model.
struct SplitEntry {
  std::string recording_id;
  std::vector<int> views;

  friend bool operator==(const SplitEntry&, const SplitEntry&) = default;
};

struct DatasetSplit {
  SplitMode mode = SplitMode::kCrossSubject;
  std::uint64_t seed = 0;
  std::vector<SplitEntry> train;
  std::vector<SplitEntry> val;
  std::vector<SplitEntry> test;

  const std::vector<SplitEntry>& partition(const std::string& name) const;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Cross-subject: subjects are shuffled by seed and partitioned 8:1:1
/// (floor(n/10) each for val and test, residue to train); every entry keeps
/// all views. Requires >= 10 subjects.
///
/// Cross-view: view indices are shuffled by seed; the last val_views + 1
/// become validation and test views. Every recording contributes one
/// training entry with the remaining views jointly and one single-view
/// entry per held-out view. Requires views >= val_views + 2.
DatasetSplit make_splits(const std::vector<RecordingManifest>& manifests, SplitMode mode,
                         std::uint64_t seed, int val_views = 1);

void write_split(const DatasetSplit& split, const std::string& path);
DatasetSplit read_split(const std::string& path);

std::string split_mode_name(SplitMode mode);
SplitMode split_mode_from_name(const std::string& name);

}  // namespace hypermv
