#include "hypermv/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hypermv {

namespace {

constexpr const char* kHeader = "t_us,x,y,p";

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

// Strict integer field parse: the whole field must be consumed.
std::int64_t parse_int(std::string_view field, const std::string& path, std::size_t line) {
  std::int64_t v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    fail(path, line, "parse error: bad integer field '" + std::string(field) + "'");
  return v;
}

}  // namespace

ViewStream read_events(const std::string& path, int width, int height) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open event file: " + path);
  ViewStream stream;
  stream.width = width;
  stream.height = height;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file (missing header)");
  ++lineno;
  if (line != kHeader)
    fail(path, lineno, "parse error: expected header '" + std::string(kHeader) + "'");
  std::int64_t prev_t = -1;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv(line);
    std::int64_t vals[4];
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = sv.find(',');
      if (f < 3) {
        if (comma == std::string_view::npos)
          fail(path, lineno, "parse error: expected 4 comma-separated fields");
        vals[f] = parse_int(sv.substr(0, comma), path, lineno);
        sv.remove_prefix(comma + 1);
      } else {
        if (comma != std::string_view::npos)
          fail(path, lineno, "parse error: expected 4 comma-separated fields");
        vals[f] = parse_int(sv, path, lineno);
      }
    }
    Event e;
    e.t = vals[0];
    e.x = static_cast<int>(vals[1]);
    e.y = static_cast<int>(vals[2]);
    e.p = static_cast<int>(vals[3]);
    if (e.p != -1 && e.p != 1)
      fail(path, lineno, "polarity error: p must be -1 or +1, got " + std::to_string(e.p));
    if (e.t < 0) fail(path, lineno, "ordering error: negative timestamp");
    if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height)
      fail(path, lineno, "bounds error: pixel (" + std::to_string(e.x) + "," +
                             std::to_string(e.y) + ") outside " + std::to_string(width) + "x" +
                             std::to_string(height));
    if (e.t < prev_t) fail(path, lineno, "ordering error: timestamps must be non-decreasing");
    prev_t = e.t;
    stream.events.push_back(e);
  }
  stream.t_begin = 0;
  stream.t_end = stream.events.empty() ? 0 : stream.events.back().t;
  return stream;
}

void write_events(const ViewStream& stream, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);  // binary keeps LF on all hosts
  if (!os) throw std::runtime_error("cannot open event file for writing: " + path);
  os << kHeader << '\n';
  for (const Event& e : stream.events)
    os << e.t << ',' << e.x << ',' << e.y << ',' << e.p << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<EventPacket> segment(const ViewStream& stream, int T) {
  if (T < 1) throw std::invalid_argument("segment: T must be >= 1");
  std::vector<EventPacket> packets(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) packets[static_cast<std::size_t>(i)].window = i + 1;
  const std::int64_t span = stream.t_end - stream.t_begin;
  // Window i (1-based) is [t_begin + (i-1)*span/T, t_begin + i*span/T) with
  // floor division, the last window closed at t_end.
  std::vector<std::int64_t> upper(static_cast<std::size_t>(T));
  for (int i = 1; i <= T; ++i)
    upper[static_cast<std::size_t>(i - 1)] =
        stream.t_begin + static_cast<std::int64_t>(i) * span / T;
  for (const Event& e : stream.events) {
    int w = 0;
    if (span > 0)
      w = static_cast<int>(std::upper_bound(upper.begin(), upper.end() - 1, e.t) -
                           upper.begin());
    packets[static_cast<std::size_t>(w)].events.push_back(e);
  }
  return packets;
}

std::vector<int> render_frame(const EventPacket& packet, int X, int Y) {
  std::vector<int> grid(static_cast<std::size_t>(X) * static_cast<std::size_t>(Y), 0);
  for (const Event& e : packet.events) {
    if (e.x < 0 || e.x >= X || e.y < 0 || e.y >= Y)
      throw std::out_of_range("render_frame: event outside " + std::to_string(X) + "x" +
                              std::to_string(Y));
    grid[static_cast<std::size_t>(e.y) * X + e.x] += e.p;
  }
  return grid;
}

FrameVolume render_volume(const ViewStream& stream, int T, int X, int Y) {
  FrameVolume vol;
  vol.x = X;
  vol.y = Y;
  vol.t = T;
  vol.frames.reserve(static_cast<std::size_t>(T));
  for (const EventPacket& packet : segment(stream, T))
    vol.frames.push_back(render_frame(packet, X, Y));
  return vol;
}

RealVolume normalize_volume(const FrameVolume& vol) {
  RealVolume out;
  out.x = vol.x;
  out.y = vol.y;
  out.t = vol.t;
  out.values.reserve(static_cast<std::size_t>(vol.t) * vol.y * vol.x);
  int max_abs = 0;
  for (const auto& frame : vol.frames)
    for (int v : frame) max_abs = std::max(max_abs, v < 0 ? -v : v);
  const double inv = max_abs > 0 ? 1.0 / max_abs : 1.0;
  for (const auto& frame : vol.frames)
    for (int v : frame) out.values.push_back(v * inv);
  return out;
}

}  // namespace hypermv
