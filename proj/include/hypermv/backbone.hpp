#pragma once

#include <cstdint>
#include <vector>

#include "hypermv/event_io.hpp"
#include "hypermv/optim.hpp"
#include "hypermv/tape.hpp"

namespace hypermv {

/// Shared convolutional feature extractor: a stack of strided conv+ReLU
/// blocks followed by global average pooling. One set of weights serves
/// every view and time window.
struct BackboneConfig {
  std::vector<int> channels = {8, 16, 32, 64};  // per-block output channels
  int kernel = 3;
  int stride = 2;
  int pad = 1;
  int input_channels = 1;  // signed event frame

  int block_count() const { return static_cast<int>(channels.size()); }
  /// Embedding dimension after global pooling = last block's channels.
  int embed_dim() const { return channels.back(); }
  /// Every block must see at least 2 pixels per axis.
  int min_input_size() const { return 1 << block_count(); }
};

void validate_backbone_config(const BackboneConfig& cfg);

/// Kaiming-uniform fan-in init for conv kernels, zero biases. Parameter
/// names: backbone.conv<i>.kernel / backbone.conv<i>.bias.
ParamStore init_backbone(const BackboneConfig& cfg, std::uint64_t seed);

/// Ties parameter names to tape node ids for one forward build.
struct ParamHandles {
  std::map<std::string, int> nodes;

  int at(const std::string& name) const;
};

/// Registers every parameter on the tape as a gradient-requiring input.
ParamHandles register_params(Tape& tape, const ParamStore& params);

/// Stacks V normalized volumes (all sharing X, Y, T) into a [V*T, 1, Y, X]
/// tensor in v-major row order: row v*T + (t-1) holds view v, window t.
Tensor stack_volumes(const std::vector<RealVolume>& volumes);

/// Tape form of the extractor: frames [N,1,Y,X] -> embeddings [N, d].
int extract(Tape& tape, int frames, const BackboneConfig& cfg, const ParamHandles& handles);

/// Convenience forward without gradients.
Tensor extract(const std::vector<RealVolume>& volumes, const BackboneConfig& cfg,
               const ParamStore& params);

}  // namespace hypermv
