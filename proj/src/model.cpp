#include "hypermv/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hypermv/rng.hpp"

namespace hypermv {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kHyperMV: return "hypermv";
    case Variant::kHyperMVGnn: return "hypermv-gnn";
    case Variant::kMultiViewBaseline: return "multi-view-baseline";
    case Variant::kSingleViewBaseline: return "single-view-baseline";
  }
  return "unknown";
}

Variant variant_from_name(const std::string& name) {
  if (name == "hypermv") return Variant::kHyperMV;
  if (name == "hypermv-gnn") return Variant::kHyperMVGnn;
  if (name == "multi-view-baseline") return Variant::kMultiViewBaseline;
  if (name == "single-view-baseline") return Variant::kSingleViewBaseline;
  throw std::invalid_argument("unknown model variant: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kRule: return "rule";
    case Strategy::kKnn: return "knn";
    case Strategy::kBoth: return "both";
  }
  return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "rule") return Strategy::kRule;
  if (name == "knn") return Strategy::kKnn;
  if (name == "both") return Strategy::kBoth;
  throw std::invalid_argument("unknown construction strategy: " + name);
}

void validate_model_config(const ModelConfig& cfg) {
  validate_backbone_config(cfg.backbone);
  if (cfg.classes < 2) throw std::invalid_argument("model needs >= 2 classes");
  if (cfg.views < 1 || cfg.T < 1) throw std::invalid_argument("model needs views, T >= 1");
  if (cfg.L < 1) throw std::invalid_argument("model needs L >= 1");
  if (cfg.k < 1) throw std::invalid_argument("model needs k >= 1");
  const bool graphish = cfg.variant == Variant::kHyperMV || cfg.variant == Variant::kHyperMVGnn;
  if (graphish) {
    if (cfg.views * cfg.T < 2)
      throw std::invalid_argument("hypergraph variants need >= 2 vertices");
    if (cfg.strategy != Strategy::kRule && cfg.k >= cfg.views * cfg.T)
      throw std::invalid_argument("model k must be < V*T for KNN construction");
    if (cfg.strategy == Strategy::kRule && cfg.views < 2 && cfg.T < 2)
      throw std::invalid_argument("rule-only construction needs V >= 2 or T >= 2");
  }
  if (cfg.variant == Variant::kSingleViewBaseline && cfg.views != 1)
    throw std::invalid_argument("single-view baseline uses views = 1 (samples are per view)");
}

namespace {

int rule_edge_count(int V, int T) { return (T >= 2 ? V : 0) + (V >= 2 ? T : 0); }

int graph_rule_edge_count(int V, int T) { return V * (T - 1) + T * (V * (V - 1)) / 2; }

std::vector<Hyperedge> build_edges(const ModelConfig& cfg, const Tensor& embeddings, int V) {
  std::vector<Hyperedge> edges;
  if (cfg.variant == Variant::kHyperMV) {
    if (cfg.strategy != Strategy::kKnn) edges = build_rule_hyperedges(V, cfg.T);
    if (cfg.strategy != Strategy::kRule) {
      auto knn = build_knn_hyperedges(embeddings, cfg.k);
      edges.insert(edges.end(), knn.begin(), knn.end());
    }
    return edges;
  }
  // Graph variant: cardinality-2 edges through the same machinery.
  auto all = build_graph_edges(embeddings, cfg.k, V, cfg.T);
  for (auto& e : all) {
    const bool is_knn = e.kind == EdgeKind::kKnn;
    if (is_knn && cfg.strategy == Strategy::kRule) continue;
    if (!is_knn && cfg.strategy == Strategy::kKnn) continue;
    edges.push_back(std::move(e));
  }
  return edges;
}

}  // namespace

int edge_count_for_config(const ModelConfig& cfg) {
  const int N = cfg.views * cfg.T;
  switch (cfg.variant) {
    case Variant::kHyperMV: {
      int m = 0;
      if (cfg.strategy != Strategy::kKnn) m += rule_edge_count(cfg.views, cfg.T);
      if (cfg.strategy != Strategy::kRule) m += N;
      return m;
    }
    case Variant::kHyperMVGnn: {
      int m = 0;
      if (cfg.strategy != Strategy::kKnn) m += graph_rule_edge_count(cfg.views, cfg.T);
      if (cfg.strategy != Strategy::kRule) m += N * cfg.k;
      return m;
    }
    default:
      return 0;
  }
}

ParamStore init_model(const ModelConfig& cfg, std::uint64_t seed) {
  validate_model_config(cfg);
  ParamStore params = init_backbone(cfg.backbone, rng::mix(seed));
  std::mt19937_64 gen(rng::mix(seed ^ 0x68797065726d76ull));  // distinct stream from backbone
  const int d = cfg.backbone.embed_dim();

  auto kaiming_matrix = [&gen](int fan_in, int fan_out) {
    Tensor t({fan_in, fan_out});
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& v : t.values()) v = rng::uniform(gen, -bound, bound);
    return t;
  };

  int head_in = d;
  const bool graphish = cfg.variant == Variant::kHyperMV || cfg.variant == Variant::kHyperMVGnn;
  if (graphish) {
    for (int l = 0; l < cfg.L; ++l)
      params.emplace("prop.theta" + std::to_string(l), kaiming_matrix(d, d));
    if (cfg.attention) {
      params.emplace("prop.we", Tensor::full({edge_count_for_config(cfg)}, 1.0));
      params.emplace("prop.wv", Tensor::full({cfg.views * cfg.T}, 1.0));
    }
  } else if (cfg.variant == Variant::kMultiViewBaseline) {
    head_in = cfg.views * d;
  }
  params.emplace("head.weight", kaiming_matrix(head_in, cfg.classes));
  params.emplace("head.bias", Tensor({1, cfg.classes}));
  return params;
}

std::vector<Hyperedge> build_model_edges(const ModelConfig& cfg, const Tensor& embeddings,
                                         int views) {
  return build_edges(cfg, embeddings, views);
}

int model_forward(Tape& tape, const ModelConfig& cfg, const ParamHandles& handles,
                  const std::vector<RealVolume>& views) {
  const int V = static_cast<int>(views.size());
  if (V < 1) throw std::invalid_argument("model_forward: no views");
  if (cfg.variant == Variant::kSingleViewBaseline && V != 1)
    throw std::invalid_argument("single-view baseline takes one view at a time");
  for (const RealVolume& v : views)
    if (v.t != cfg.T)
      throw std::invalid_argument("volume window count " + std::to_string(v.t) +
                                  " != config T " + std::to_string(cfg.T));

  const int frames = tape.input(stack_volumes(views), false);
  const int embeddings = extract(tape, frames, cfg.backbone, handles);  // [V*T, d]
  const int d = cfg.backbone.embed_dim();
  const int n = V * cfg.T;

  auto head = [&](int xg) {
    return tape.add(tape.matmul(xg, handles.at("head.weight")), handles.at("head.bias"));
  };

  if (cfg.variant == Variant::kMultiViewBaseline) {
    // Temporal mean per view, then concatenation of the V means.
    const int slots = cfg.views;
    Tensor avg({slots, n});
    if (V == cfg.views) {
      for (int v = 0; v < V; ++v)
        for (int t = 0; t < cfg.T; ++t) avg.at(v, v * cfg.T + t) = 1.0 / cfg.T;
    } else if (V == 1) {
      // Held-out single view: replicate its temporal mean into every slot.
      for (int v = 0; v < slots; ++v)
        for (int t = 0; t < cfg.T; ++t) avg.at(v, t) = 1.0 / cfg.T;
    } else {
      throw std::invalid_argument("multi-view baseline expects " + std::to_string(cfg.views) +
                                  " views or a single held-out view, got " + std::to_string(V));
    }
    const int means = tape.matmul(tape.input(std::move(avg), false), embeddings);
    return head(tape.reshape(means, {1, slots * d}));
  }
  if (cfg.variant == Variant::kSingleViewBaseline) {
    Tensor avg({1, n});
    for (int t = 0; t < n; ++t) avg.at(0, t) = 1.0 / n;
    const int mean = tape.matmul(tape.input(std::move(avg), false), embeddings);
    return head(mean);
  }

  // Hypergraph variants.
  const auto edges = build_edges(cfg, tape.value(embeddings), V);
  const IncidenceStructure inc = build_incidence(edges, n);
  PropagationHandles prop;
  for (int l = 0; l < cfg.L; ++l) prop.theta.push_back(handles.at("prop.theta" + std::to_string(l)));
  const bool trained_shape = V == cfg.views && inc.edge_count == edge_count_for_config(cfg);
  if (cfg.attention && trained_shape) {
    prop.edge_weights = handles.at("prop.we");
    prop.vertex_weights = handles.at("prop.wv");
  } else {
    prop.edge_weights = tape.input(Tensor::full({inc.edge_count}, 1.0), false);
    prop.vertex_weights = tape.input(Tensor::full({n}, 1.0), false);
  }
  const int vertex_features = propagate(tape, embeddings, inc, prop);

  int xg;
  if (cfg.attention) {
    xg = tape.readout(vertex_features);
  } else {
    Tensor avg = Tensor::full({1, n}, 1.0 / n);
    xg = tape.matmul(tape.input(std::move(avg), false), vertex_features);
  }
  return head(xg);
}

Tensor model_logits(const ModelConfig& cfg, const ParamStore& params,
                    const std::vector<RealVolume>& views) {
  Tape tape;
  ParamHandles handles;
  for (const auto& [name, t] : params) handles.nodes.emplace(name, tape.input(t, false));
  const Tensor& out = tape.value(model_forward(tape, cfg, handles, views));
  return Tensor({out.cols()}, out.values());
}

}  // namespace hypermv
