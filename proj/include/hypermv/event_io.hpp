#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hypermv {

/// A single event-camera detection: pixel location, microsecond timestamp,
/// polarity in {-1, +1}.
struct Event {
  int x = 0;
  int y = 0;
  std::int64_t t = 0;
  int p = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Time-ordered event sequence of one camera view. Timestamps are
/// non-decreasing and lie within [t_begin, t_end].
struct ViewStream {
  int width = 0;
  int height = 0;
  std::int64_t t_begin = 0;
  std::int64_t t_end = 0;
  std::vector<Event> events;

  friend bool operator==(const ViewStream&, const ViewStream&) = default;
};

/// Events of one of T uniform time windows. Window indices run 1..T.
struct EventPacket {
  int window = 0;
  std::vector<Event> events;
};

/// T signed integer event frames of size Y x X; frame t holds the per-pixel
/// polarity sums of packet t. Frames are row-major (y * X + x).
struct FrameVolume {
  int x = 0;
  int y = 0;
  int t = 0;
  std::vector<std::vector<int>> frames;
};

/// Real-valued volume, values row-major [t][y][x].
struct RealVolume {
  int x = 0;
  int y = 0;
  int t = 0;
  std::vector<double> values;
};

// EVT-CSV on-disk format: UTF-8 text, LF line endings, header line exactly
// "t_us,x,y,p", then one event per line as four comma-separated integers.
// The sensor resolution travels with the recording manifest, not the file,
// so readers receive it as arguments.

/// Parses an EVT-CSV file. Errors carry the offending line number. The
/// returned stream has t_begin = 0 and t_end = the last event timestamp
/// (0 when empty); recording loaders override the bounds from the manifest.
ViewStream read_events(const std::string& path, int width, int height);

/// Writes EVT-CSV such that read_events(write_events(s)) == s for streams
/// with canonical bounds, and re-serialization is byte-identical.
void write_events(const ViewStream& stream, const std::string& path);

/// Splits [t_begin, t_end] into T maximally equal windows
/// [t_begin + floor((i-1)*span/T), t_begin + floor(i*span/T)), the last
/// closed at t_end, and buckets the events. The packets partition the
/// stream. A zero-length span puts every event into window 1.
std::vector<EventPacket> segment(const ViewStream& stream, int T);

/// Signed polarity sum per pixel, row-major Y x X grid.
std::vector<int> render_frame(const EventPacket& packet, int X, int Y);

/// segment + render_frame over all T windows.
FrameVolume render_volume(const ViewStream& stream, int T, int X, int Y);

/// Divides by the volume's maximum absolute value; an all-zero volume is
/// returned unchanged. Output values lie in [-1, 1] with signs preserved.
RealVolume normalize_volume(const FrameVolume& vol);

}  // namespace hypermv
