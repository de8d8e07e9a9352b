#include "hypermv/backbone.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hypermv/rng.hpp"

namespace hypermv {

void validate_backbone_config(const BackboneConfig& cfg) {
  if (cfg.channels.empty()) throw std::invalid_argument("backbone needs at least one block");
  for (int c : cfg.channels)
    if (c < 1) throw std::invalid_argument("backbone channels must be >= 1");
  if (cfg.kernel < 1 || cfg.stride < 1 || cfg.pad < 0)
    throw std::invalid_argument("backbone kernel/stride/pad invalid");
  if (cfg.input_channels < 1) throw std::invalid_argument("backbone input channels must be >= 1");
}

int ParamHandles::at(const std::string& name) const {
  auto it = nodes.find(name);
  if (it == nodes.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

ParamHandles register_params(Tape& tape, const ParamStore& params) {
  ParamHandles handles;
  for (const auto& [name, t] : params) handles.nodes.emplace(name, tape.input(t, true));
  return handles;
}

ParamStore init_backbone(const BackboneConfig& cfg, std::uint64_t seed) {
  validate_backbone_config(cfg);
  std::mt19937_64 gen(rng::mix(seed));
  ParamStore params;
  int cin = cfg.input_channels;
  for (int b = 0; b < cfg.block_count(); ++b) {
    const int cout = cfg.channels[static_cast<std::size_t>(b)];
    Tensor kernel({cout, cin, cfg.kernel, cfg.kernel});
    const double bound = std::sqrt(6.0 / (cin * cfg.kernel * cfg.kernel));
    for (double& v : kernel.values()) v = rng::uniform(gen, -bound, bound);
    const std::string prefix = "backbone.conv" + std::to_string(b);
    params.emplace(prefix + ".kernel", std::move(kernel));
    params.emplace(prefix + ".bias", Tensor({cout}));
    cin = cout;
  }
  return params;
}

int extract(Tape& tape, int frames, const BackboneConfig& cfg, const ParamHandles& handles) {
  validate_backbone_config(cfg);
  const Tensor& x = tape.value(frames);
  if (x.rank() != 4 || x.dim(1) != cfg.input_channels)
    throw std::invalid_argument("extract expects [N," + std::to_string(cfg.input_channels) +
                                ",Y,X] frames, got " + x.shape_str());
  if (x.dim(2) < cfg.min_input_size() || x.dim(3) < cfg.min_input_size())
    throw std::invalid_argument("extract input " + x.shape_str() +
                                " too small for the stride pyramid (needs >= " +
                                std::to_string(cfg.min_input_size()) + " per axis)");
  int node = frames;
  for (int b = 0; b < cfg.block_count(); ++b) {
    const std::string prefix = "backbone.conv" + std::to_string(b);
    node = tape.conv2d(node, handles.at(prefix + ".kernel"), handles.at(prefix + ".bias"),
                       cfg.stride, cfg.pad);
    node = tape.relu(node);
  }
  return tape.global_avg_pool(node);
}

Tensor stack_volumes(const std::vector<RealVolume>& volumes) {
  if (volumes.empty()) throw std::invalid_argument("stack_volumes: no views");
  const int X = volumes.front().x, Y = volumes.front().y, T = volumes.front().t;
  for (const RealVolume& v : volumes)
    if (v.x != X || v.y != Y || v.t != T)
      throw std::invalid_argument("stack_volumes: views disagree on (X, Y, T)");
  const int V = static_cast<int>(volumes.size());
  Tensor out({V * T, 1, Y, X});
  const std::size_t frame_size = static_cast<std::size_t>(Y) * X;
  for (int v = 0; v < V; ++v)
    for (int t = 0; t < T; ++t)
      std::copy_n(volumes[static_cast<std::size_t>(v)].values.data() + t * frame_size,
                  frame_size,
                  out.data() + (static_cast<std::size_t>(v) * T + t) * frame_size);
  return out;
}

Tensor extract(const std::vector<RealVolume>& volumes, const BackboneConfig& cfg,
               const ParamStore& params) {
  Tape tape;
  ParamHandles handles;
  for (const auto& [name, t] : params) handles.nodes.emplace(name, tape.input(t, false));
  const int frames = tape.input(stack_volumes(volumes), false);
  return tape.value(extract(tape, frames, cfg, handles));
}

}  // namespace hypermv
