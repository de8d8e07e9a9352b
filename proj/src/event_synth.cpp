#include "hypermv/event_synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>

#include "hypermv/rng.hpp"

namespace fs = std::filesystem;

namespace hypermv {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::int64_t kNoEvent = std::numeric_limits<std::int64_t>::min();

// Fastest oscillation in the family, as a multiple of the base rate.
double max_frequency_factor(TrajectoryFamily family) {
  return family == TrajectoryFamily::kZigzag ? 2.0 : 1.0;
}

// Triangle wave with period 1 in cycles, range [-1, 1].
double tri(double cycles) {
  const double f = cycles - std::floor(cycles);
  return 4.0 * std::fabs(f - 0.5) - 1.0;
}

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

struct Blob {
  double sigma = 0.12;      // scene units
  double amplitude = 0.8;   // log-intensity units
  double phase = 0.0;       // radians
  double radius = 0.9;      // scene units
  Vec3 anchor;              // family-specific static offset / direction
  double sign = 1.0;        // spin-pair side
};

struct Actor {
  std::vector<Blob> blobs;
  double speed_jitter = 1.0;
  double phase0 = 0.0;
};

Actor draw_actor(const ActionSpec& spec, const SubjectSeed& subject) {
  std::mt19937_64 gen(rng::mix(subject.seed ^ rng::mix(static_cast<std::uint64_t>(
                                                 spec.class_id + 1))));
  Actor actor;
  actor.speed_jitter = rng::uniform(gen, 0.85, 1.15);
  actor.phase0 = rng::uniform(gen, 0.0, 2.0 * kPi);
  const int blob_count = 1 + rng::uniform_int(gen, 3);
  const double sigma = rng::uniform(gen, 0.14, 0.26);
  const double amplitude = rng::uniform(gen, 0.55, 0.95);
  for (int b = 0; b < blob_count; ++b) {
    Blob blob;
    blob.sigma = sigma * rng::uniform(gen, 0.85, 1.15);
    blob.amplitude = amplitude * rng::uniform(gen, 0.85, 1.15);
    blob.phase = 2.0 * kPi * b / blob_count + rng::uniform(gen, -0.3, 0.3);
    blob.radius = rng::uniform(gen, 0.65, 1.05);
    blob.anchor = {rng::uniform(gen, -0.6, 0.6), rng::uniform(gen, -0.6, 0.6),
                   rng::uniform(gen, -0.4, 0.4)};
    blob.sign = (b % 2 == 0) ? 1.0 : -1.0;
    actor.blobs.push_back(blob);
  }
  return actor;
}

Vec3 blob_center(const ActionSpec& spec, const Actor& actor, const Blob& blob,
                 double t_seconds) {
  const double phase =
      2.0 * kPi * spec.base_speed_hz * actor.speed_jitter * t_seconds + actor.phase0;
  const double cycles = phase / (2.0 * kPi);
  switch (spec.family) {
    case TrajectoryFamily::kHorizontalCircle:
      return {blob.radius * std::cos(phase + blob.phase),
              blob.radius * std::sin(phase + blob.phase), 0.35 * blob.anchor.z};
    case TrajectoryFamily::kVerticalOscillation:
      return {blob.anchor.x, blob.anchor.y,
              0.9 * blob.radius * std::sin(phase + blob.phase)};
    case TrajectoryFamily::kExpandContract: {
      const double r = 0.55 + 0.45 * std::sin(phase);
      const double a = blob.phase;
      return {r * blob.radius * std::cos(a), r * blob.radius * std::sin(a),
              0.4 * r * blob.anchor.z};
    }
    case TrajectoryFamily::kZigzag:
      return {blob.radius * tri(2.0 * cycles + blob.phase / (2.0 * kPi)), blob.anchor.y,
              0.6 * tri(0.5 * cycles + 0.25) + 0.3 * blob.anchor.z};
    case TrajectoryFamily::kSpinPair:
      return {blob.sign * blob.radius * std::cos(phase), 0.4 * blob.anchor.y,
              blob.sign * blob.radius * std::sin(phase)};
  }
  throw std::logic_error("unknown trajectory family");
}

// Orthographic ring-camera projection; azimuth spins the horizontal axis.
void render_view(const ActionSpec& spec, const Actor& actor, const CameraRig& rig,
                 double azimuth, double t_seconds, double floor_level,
                 std::vector<double>& frame) {
  std::fill(frame.begin(), frame.end(), floor_level);
  const double cx = 0.5 * (rig.width - 1);
  const double cy = 0.5 * (rig.height - 1);
  const double rx = -std::sin(azimuth), ry = std::cos(azimuth);
  for (const Blob& blob : actor.blobs) {
    const Vec3 p = blob_center(spec, actor, blob, t_seconds);
    const double u = rig.focal * (p.x * rx + p.y * ry);
    const double w = rig.focal * p.z;
    const double px = cx + u;
    const double py = cy - w;
    const double sigma_px = blob.sigma * rig.focal;
    const double extent = 3.5 * sigma_px;
    const int x0 = std::max(0, static_cast<int>(std::floor(px - extent)));
    const int x1 = std::min(rig.width - 1, static_cast<int>(std::ceil(px + extent)));
    const int y0 = std::max(0, static_cast<int>(std::floor(py - extent)));
    const int y1 = std::min(rig.height - 1, static_cast<int>(std::ceil(py + extent)));
    const double inv2s2 = 1.0 / (2.0 * sigma_px * sigma_px);
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - py;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - px;
        frame[static_cast<std::size_t>(y) * rig.width + x] +=
            blob.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2);
      }
    }
  }
}

}  // namespace

CameraRig make_ring_rig(int views, int width, int height, double distance) {
  if (views < 1) throw std::invalid_argument("rig needs at least one view");
  CameraRig rig;
  rig.width = width;
  rig.height = height;
  rig.focal = 0.30 * std::min(width, height);
  for (int v = 0; v < views; ++v) {
    rig.azimuths.push_back(2.0 * kPi * v / views);
    rig.distances.push_back(distance);
  }
  validate_rig(rig);
  return rig;
}

void validate_rig(const CameraRig& rig) {
  if (rig.view_count() < 1) throw std::invalid_argument("rig needs at least one view");
  if (rig.distances.size() != rig.azimuths.size())
    throw std::invalid_argument("rig azimuth/distance count mismatch");
  if (rig.width < 4 || rig.height < 4) throw std::invalid_argument("rig resolution too small");
  for (std::size_t i = 0; i < rig.azimuths.size(); ++i)
    for (std::size_t j = i + 1; j < rig.azimuths.size(); ++j)
      if (rig.azimuths[i] == rig.azimuths[j])
        throw std::invalid_argument("rig azimuths must be distinct");
}

ActionSpec default_action_spec(int class_id) {
  ActionSpec spec;
  spec.class_id = class_id;
  spec.family = static_cast<TrajectoryFamily>(class_id % kTrajectoryFamilies);
  spec.base_speed_hz = 0.8 * (1.0 + 0.25 * (class_id / kTrajectoryFamilies));
  return spec;
}

void validate_action_spec(const ActionSpec& spec) {
  if (spec.duration_us <= 0) throw std::invalid_argument("action duration must be > 0");
  if (spec.base_speed_hz < 0.0) throw std::invalid_argument("action speed must be >= 0");
  // Nyquist bound with margin for the per-subject speed jitter (<= 1.15).
  const double max_hz = spec.base_speed_hz * max_frequency_factor(spec.family) * 1.15;
  if (spec.frame_rate_hz < 2.0 * max_hz)
    throw std::invalid_argument("frame rate " + std::to_string(spec.frame_rate_hz) +
                                " Hz below 2x the trajectory frequency " +
                                std::to_string(max_hz) + " Hz");
}

EventCameraSim::EventCameraSim(int width, int height, const EventCameraParams& params)
    : width_(width), height_(height), params_(params) {
  if (params.theta <= 0.0) throw std::invalid_argument("contrast threshold must be > 0");
  if (params.refractory_us < 0) throw std::invalid_argument("refractory must be >= 0");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  first_.assign(n, 0.0);
  prev_.assign(n, 0.0);
  crossings_.assign(n, 0);
  last_event_t_.assign(n, kNoEvent);
}

void EventCameraSim::feed(const std::vector<double>& frame, std::int64_t t) {
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  if (frame.size() != n)
    throw std::invalid_argument("frame size mismatch: " + std::to_string(frame.size()) +
                                " vs " + std::to_string(n));
  if (!primed_) {
    first_ = frame;
    prev_ = frame;
    prev_t_ = t;
    primed_ = true;
    return;
  }
  if (t <= prev_t_) throw std::invalid_argument("frame timestamps must be strictly increasing");
  const double theta = params_.theta;
  const double gap = static_cast<double>(t - prev_t_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
      // Reference level as first + crossings * theta: no incremental drift
      // and exact symmetry under sequence negation.
      const double ref = first_[i] + static_cast<double>(crossings_[i]) * theta;
      const double delta = frame[i] - ref;
      const double mag = std::fabs(delta);
      const int m = static_cast<int>(std::floor(mag / theta + 1e-9));
      if (m >= 1) {
        const int p = delta > 0.0 ? 1 : -1;
        const double residual = p * (prev_[i] - ref);
        const double ramp = p * (frame[i] - prev_[i]);
        for (int k = 1; k <= m; ++k) {
          const double dist = k * theta - residual;
          double f = ramp > 0.0 ? dist / ramp : 1.0;
          f = std::min(1.0, std::max(0.0, f));
          const std::int64_t te = prev_t_ + std::llround(f * gap);
          crossings_[i] += p;
          if (last_event_t_[i] == kNoEvent || te - last_event_t_[i] >= params_.refractory_us) {
            events_.push_back({x, y, te, p});
            last_event_t_[i] = te;
          }
        }
      }
      prev_[i] = frame[i];
    }
  }
  prev_t_ = t;
}

ViewStream EventCameraSim::finish(std::int64_t t_begin, std::int64_t t_end) {
  ViewStream s;
  s.width = width_;
  s.height = height_;
  s.t_begin = t_begin;
  s.t_end = t_end;
  s.events = std::move(events_);
  events_.clear();
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return s;
}

ViewStream simulate_camera(const std::vector<std::vector<double>>& log_frames,
                           const std::vector<std::int64_t>& timestamps, int width, int height,
                           const EventCameraParams& params) {
  if (log_frames.size() != timestamps.size())
    throw std::invalid_argument("frame/timestamp count mismatch");
  if (log_frames.empty()) throw std::invalid_argument("need at least one frame");
  EventCameraSim sim(width, height, params);
  for (std::size_t i = 0; i < log_frames.size(); ++i) sim.feed(log_frames[i], timestamps[i]);
  return sim.finish(timestamps.front(), timestamps.back());
}

MultiViewRecording synth_recording(const ActionSpec& spec, const SubjectSeed& subject,
                                   const CameraRig& rig, const EventCameraParams& params) {
  validate_action_spec(spec);
  validate_rig(rig);
  const Actor actor = draw_actor(spec, subject);
  const int V = rig.view_count();
  const std::int64_t frame_step = std::llround(1e6 / spec.frame_rate_hz);
  if (frame_step <= 0) throw std::invalid_argument("frame rate too high for 1 us clock");

  std::vector<EventCameraSim> sims;
  sims.reserve(static_cast<std::size_t>(V));
  for (int v = 0; v < V; ++v) sims.emplace_back(rig.width, rig.height, params);

  std::vector<double> frame(static_cast<std::size_t>(rig.width) * rig.height);
  for (std::int64_t t = 0;; t += frame_step) {
    if (t > spec.duration_us) break;
    const double ts = static_cast<double>(t) * 1e-6;
    for (int v = 0; v < V; ++v) {
      render_view(spec, actor, rig, rig.azimuths[static_cast<std::size_t>(v)], ts,
                  params.floor_level, frame);
      sims[static_cast<std::size_t>(v)].feed(frame, t);
    }
  }

  MultiViewRecording rec;
  rec.label = spec.class_id;
  rec.subject = subject.seed;
  rec.t_begin = 0;
  rec.t_end = spec.duration_us;
  for (int v = 0; v < V; ++v)
    rec.views.push_back(sims[static_cast<std::size_t>(v)].finish(0, spec.duration_us));
  return rec;
}

std::vector<RecordingManifest> synth_dataset(int classes,
                                             const std::vector<std::uint64_t>& subjects,
                                             const CameraRig& rig,
                                             const EventCameraParams& params,
                                             const std::string& out_dir,
                                             std::int64_t duration_us, double frame_rate_hz) {
  if (classes < 2) throw std::invalid_argument("synth_dataset needs at least 2 classes");
  if (subjects.empty()) throw std::invalid_argument("synth_dataset needs subjects");
  fs::create_directories(out_dir);

  struct Job {
    int class_id;
    int subject_index;
  };
  std::vector<Job> jobs;
  for (int c = 0; c < classes; ++c)
    for (std::size_t s = 0; s < subjects.size(); ++s)
      jobs.push_back({c, static_cast<int>(s)});

  std::vector<RecordingManifest> manifests(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job job = jobs[j];
    ActionSpec spec = default_action_spec(job.class_id);
    spec.duration_us = duration_us;
    spec.frame_rate_hz = frame_rate_hz;
    const SubjectSeed subject{subjects[static_cast<std::size_t>(job.subject_index)]};
    const MultiViewRecording rec = synth_recording(spec, subject, rig, params);

    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "rec_c%02d_s%04d", job.class_id, job.subject_index);
    const std::string id(idbuf);
    const fs::path dir = fs::path(out_dir) / id;
    fs::create_directories(dir);

    RecordingManifest m;
    m.recording_id = id;
    m.label = rec.label;
    m.subject = rec.subject;
    m.views = rig.view_count();
    m.width = rig.width;
    m.height = rig.height;
    m.t_begin = rec.t_begin;
    m.t_end = rec.t_end;
    for (int v = 0; v < rig.view_count(); ++v) {
      const std::string fname = "view" + std::to_string(v) + ".csv";
      write_events(rec.views[static_cast<std::size_t>(v)], (dir / fname).string());
      m.view_files.push_back(fname);
    }
    write_manifest(m, (dir / "manifest.json").string());
    m.dir = dir.string();
    manifests[j] = std::move(m);
  }

  std::sort(manifests.begin(), manifests.end(),
            [](const RecordingManifest& a, const RecordingManifest& b) {
              return a.recording_id < b.recording_id;
            });
  return manifests;
}

}  // namespace hypermv
