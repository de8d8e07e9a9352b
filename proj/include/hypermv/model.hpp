#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypermv/backbone.hpp"
#include "hypermv/hypergraph.hpp"

namespace hypermv {

enum class Variant { kHyperMV, kHyperMVGnn, kMultiViewBaseline, kSingleViewBaseline };
enum class Strategy { kRule, kKnn, kBoth };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);
std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct ModelConfig {
  int classes = 5;
  int views = 3;  // training-time view count; eval may feed fewer
  int T = 9;
  int k = 3;
  int L = 2;
  BackboneConfig backbone;
  Variant variant = Variant::kHyperMV;
  Strategy strategy = Strategy::kBoth;
  bool attention = true;
};

void validate_model_config(const ModelConfig& cfg);

/// Hyperedge count of the training-time graph shape (0 for baselines).
int edge_count_for_config(const ModelConfig& cfg);

/// Backbone + variant head + propagation parameters. Attention weights
/// start at ones so training begins at the vanilla propagation operator.
ParamStore init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Builds the full forward graph for one recording's views and returns the
/// logits node ([1, classes]). The hypergraph (including KNN edges) is
/// rebuilt from the current embeddings on every call; gradients flow through
/// the weighted aggregation, not the neighbour selection.
///
/// When the view count differs from the training shape (cross-view
/// evaluation of held-out views), the attention weights fall back to ones,
/// since trained per-edge/per-vertex weights have no counterpart in the
/// reshaped graph.
int model_forward(Tape& tape, const ModelConfig& cfg, const ParamHandles& handles,
                  const std::vector<RealVolume>& views);

/// Forward without gradients.
Tensor model_logits(const ModelConfig& cfg, const ParamStore& params,
                    const std::vector<RealVolume>& views);

/// Hypergraph construction exactly as model_forward performs it, for
/// inspection tooling: edges in incidence column order.
std::vector<Hyperedge> build_model_edges(const ModelConfig& cfg, const Tensor& embeddings,
                                         int views);

}  // namespace hypermv
