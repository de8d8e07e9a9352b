#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypermv/dataset.hpp"
#include "hypermv/event_io.hpp"

namespace hypermv {

/// Contrast-threshold event camera model. An event of polarity p fires when
/// the log-intensity at a pixel moves p * theta past the reference level of
/// the last event there.
struct EventCameraParams {
  double theta = 0.2;                // contrast threshold, log-intensity units
  std::int64_t refractory_us = 100;  // per-pixel dead time after an event
  double floor_level = 0.0;          // background log-intensity
};

/// V cameras on a ring around the scene origin, all sharing one resolution
/// and focal scale (pixels per scene unit). Projection is orthographic:
/// azimuth fixes the view direction, distance is pose metadata.
struct CameraRig {
  int width = 48;
  int height = 48;
  double focal = 14.0;
  std::vector<double> azimuths;
  std::vector<double> distances;

  int view_count() const { return static_cast<int>(azimuths.size()); }
};

CameraRig make_ring_rig(int views, int width, int height, double distance = 4.0);
void validate_rig(const CameraRig& rig);

enum class TrajectoryFamily {
  kHorizontalCircle,
  kVerticalOscillation,
  kExpandContract,
  kZigzag,
  kSpinPair,
};

constexpr int kTrajectoryFamilies = 5;

/// Parametric action: a family of blob trajectories plus timing. The frame
/// rate bounds the underlying intensity rendering, not the event stream.
struct ActionSpec {
  int class_id = 0;
  TrajectoryFamily family = TrajectoryFamily::kHorizontalCircle;
  double base_speed_hz = 0.8;  // trajectory cycles per second
  std::int64_t duration_us = 2'340'000;
  double frame_rate_hz = 200.0;
};

/// family = class_id % 5, speed stepped up for repeated families.
ActionSpec default_action_spec(int class_id);
void validate_action_spec(const ActionSpec& spec);

/// Seed controlling actor size, speed jitter, phase offset, and blob count.
/// The same seed reproduces a bit-identical recording for fixed spec, rig,
/// and camera params.
struct SubjectSeed {
  std::uint64_t seed = 0;
};

/// Incremental simulator for one view. Feed log-intensity frames in time
/// order; per pixel the reference level starts at the first frame and
/// advances by p * theta per emitted crossing, so a jump of m * theta emits
/// exactly m events. Event times are interpolated linearly across the
/// inter-frame gap; the per-pixel refractory period suppresses (but still
/// consumes) crossings that arrive too early.
class EventCameraSim {
 public:
  EventCameraSim(int width, int height, const EventCameraParams& params);

  void feed(const std::vector<double>& frame, std::int64_t t);
  /// Time-sorts the emitted events and returns the stream.
  ViewStream finish(std::int64_t t_begin, std::int64_t t_end);

 private:
  int width_;
  int height_;
  EventCameraParams params_;
  bool primed_ = false;
  std::int64_t prev_t_ = 0;
  std::vector<double> first_;
  std::vector<double> prev_;
  std::vector<long long> crossings_;  // net emitted crossings per pixel
  std::vector<std::int64_t> last_event_t_;
  std::vector<Event> events_;
};

/// Runs the camera model over a full frame sequence.
ViewStream simulate_camera(const std::vector<std::vector<double>>& log_frames,
                           const std::vector<std::int64_t>& timestamps, int width, int height,
                           const EventCameraParams& params);

struct MultiViewRecording {
  int label = 0;
  std::uint64_t subject = 0;
  std::int64_t t_begin = 0;
  std::int64_t t_end = 0;
  std::vector<ViewStream> views;
};

/// Renders Gaussian blobs following the action's trajectory into per-view
/// log-intensity sequences and runs the event camera on each view.
/// Deterministic in (spec, subject, rig, params).
MultiViewRecording synth_recording(const ActionSpec& spec, const SubjectSeed& subject,
                                   const CameraRig& rig, const EventCameraParams& params);

/// Writes classes x subjects recordings under out_dir using the dataset
/// layout <out_dir>/<recording_id>/view<k>.csv + manifest.json. Action specs
/// come from default_action_spec with the given duration/rate overrides.
/// Returns the manifests sorted by recording id.
std::vector<RecordingManifest> synth_dataset(int classes,
                                             const std::vector<std::uint64_t>& subjects,
                                             const CameraRig& rig,
                                             const EventCameraParams& params,
                                             const std::string& out_dir,
                                             std::int64_t duration_us = 2'340'000,
                                             double frame_rate_hz = 200.0);

}  // namespace hypermv
