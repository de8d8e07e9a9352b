#include "hypermv/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hypermv {

std::vector<Hyperedge> build_rule_hyperedges(int V, int T) {
  if (V < 1 || T < 1) throw std::invalid_argument("build_rule_hyperedges: V, T must be >= 1");
  std::vector<Hyperedge> edges;
  if (T >= 2) {
    for (int v = 0; v < V; ++v) {
      Hyperedge e;
      e.kind = EdgeKind::kTimeConsistent;
      e.anchor = v;
      for (int t = 1; t <= T; ++t) e.members.push_back(VertexId::flat(v, t, T));
      edges.push_back(std::move(e));
    }
  }
  if (V >= 2) {
    for (int t = 1; t <= T; ++t) {
      Hyperedge e;
      e.kind = EdgeKind::kViewConsistent;
      e.anchor = t;
      for (int v = 0; v < V; ++v) e.members.push_back(VertexId::flat(v, t, T));
      edges.push_back(std::move(e));
    }
  }
  return edges;
}

namespace {

// k smallest (squared distance, index) pairs among the other rows.
std::vector<int> nearest_rows(const Tensor& x, int center, int k) {
  const int n = x.rows(), d = x.cols();
  std::vector<std::pair<double, int>> dist;
  dist.reserve(static_cast<std::size_t>(n) - 1);
  const double* cp = x.data() + static_cast<std::size_t>(center) * d;
  for (int i = 0; i < n; ++i) {
    if (i == center) continue;
    const double* ip = x.data() + static_cast<std::size_t>(i) * d;
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = cp[j] - ip[j];
      acc += diff * diff;
    }
    dist.emplace_back(acc, i);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(i)].second;
  return out;
}

}  // namespace

std::vector<Hyperedge> build_knn_hyperedges(const Tensor& embeddings, int k) {
  if (embeddings.rank() != 2)
    throw std::invalid_argument("build_knn_hyperedges expects an N x d matrix");
  const int n = embeddings.rows();
  if (k < 1) throw std::invalid_argument("build_knn_hyperedges: k must be >= 1");
  if (k >= n)
    throw std::invalid_argument("build_knn_hyperedges: k = " + std::to_string(k) +
                                " needs at least k + 1 vertices, have " + std::to_string(n));
  std::vector<Hyperedge> edges;
  edges.reserve(static_cast<std::size_t>(n));
  for (int center = 0; center < n; ++center) {
    Hyperedge e;
    e.kind = EdgeKind::kKnn;
    e.anchor = center;
    e.members = nearest_rows(embeddings, center, k);
    e.members.push_back(center);
    std::sort(e.members.begin(), e.members.end());
    edges.push_back(std::move(e));
  }
  return edges;
}

std::vector<Hyperedge> build_graph_edges(const Tensor& embeddings, int k, int V, int T) {
  if (embeddings.rows() != V * T)
    throw std::invalid_argument("build_graph_edges: embedding rows must equal V*T");
  std::vector<Hyperedge> edges;
  auto pair_edge = [](EdgeKind kind, int anchor, int a, int b) {
    Hyperedge e;
    e.kind = kind;
    e.anchor = anchor;
    e.members = {std::min(a, b), std::max(a, b)};
    return e;
  };
  // Temporal adjacency within each view.
  for (int v = 0; v < V; ++v)
    for (int t = 1; t < T; ++t)
      edges.push_back(pair_edge(EdgeKind::kPairwise, v, VertexId::flat(v, t, T),
                                VertexId::flat(v, t + 1, T)));
  // All cross-view pairs at equal windows.
  for (int t = 1; t <= T; ++t)
    for (int a = 0; a < V; ++a)
      for (int b = a + 1; b < V; ++b)
        edges.push_back(pair_edge(EdgeKind::kPairwise, t, VertexId::flat(a, t, T),
                                  VertexId::flat(b, t, T)));
  // k nearest-neighbour pairs per vertex.
  const int n = V * T;
  if (k >= n)
    throw std::invalid_argument("build_graph_edges: k must be < vertex count");
  for (int center = 0; center < n; ++center)
    for (int nb : nearest_rows(embeddings, center, k))
      edges.push_back(pair_edge(EdgeKind::kKnn, center, center, nb));
  return edges;
}

IncidenceStructure build_incidence(const std::vector<Hyperedge>& edges, int N) {
  const int M = static_cast<int>(edges.size());
  IncidenceStructure inc;
  inc.vertex_count = N;
  inc.edge_count = M;
  inc.h = Tensor({N, M});
  inc.dv.assign(static_cast<std::size_t>(N), 0);
  inc.de.assign(static_cast<std::size_t>(M), 0);
  for (int e = 0; e < M; ++e) {
    const Hyperedge& edge = edges[static_cast<std::size_t>(e)];
    if (edge.members.size() < 2)
      throw std::invalid_argument("hyperedge " + std::to_string(e) + " has cardinality < 2");
    for (int i : edge.members) {
      if (i < 0 || i >= N)
        throw std::out_of_range("hyperedge member " + std::to_string(i) +
                                " outside vertex range [0, " + std::to_string(N) + ")");
      if (inc.h.at(i, e) != 0.0)
        throw std::invalid_argument("hyperedge " + std::to_string(e) + " repeats vertex " +
                                    std::to_string(i));
      inc.h.at(i, e) = 1.0;
      ++inc.dv[static_cast<std::size_t>(i)];
      ++inc.de[static_cast<std::size_t>(e)];
    }
  }
  return inc;
}

int propagate(Tape& tape, int x, const IncidenceStructure& inc,
              const PropagationHandles& params) {
  const int N = inc.vertex_count, M = inc.edge_count;
  if (tape.value(x).rows() != N)
    throw std::invalid_argument("propagate: feature rows != vertex count");
  if (M == 0) throw std::invalid_argument("propagate: hypergraph has no edges");
  if (params.theta.empty()) throw std::invalid_argument("propagate: needs >= 1 layer");
  Tensor dv_inv_sqrt({N});
  for (int i = 0; i < N; ++i) {
    const int deg = inc.dv[static_cast<std::size_t>(i)];
    if (deg == 0)
      throw std::invalid_argument("propagate: isolated vertex " + std::to_string(i) +
                                  " (zero degree)");
    dv_inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(deg));
  }
  Tensor de_inv({M});
  for (int e = 0; e < M; ++e)
    de_inv[static_cast<std::size_t>(e)] = 1.0 / inc.de[static_cast<std::size_t>(e)];

  // Constant structure nodes shared by all layers.
  const int h = tape.input(inc.h, false);
  Tensor ht_t({M, N});
  for (int i = 0; i < N; ++i)
    for (int e = 0; e < M; ++e) ht_t.at(e, i) = inc.h.at(i, e);
  const int ht = tape.input(std::move(ht_t), false);
  const int dv_node = tape.input(std::move(dv_inv_sqrt), false);
  const int de_node = tape.input(std::move(de_inv), false);

  const int L = static_cast<int>(params.theta.size());
  int node = x;
  for (int l = 0; l < L; ++l) {
    int t = tape.row_scale(node, dv_node);           // Dv^-1/2 X
    t = tape.row_scale(t, params.vertex_weights);    // Wv .
    t = tape.matmul(ht, t);                          // H^T .
    t = tape.row_scale(t, de_node);                  // De^-1 .
    t = tape.row_scale(t, params.edge_weights);      // We .
    t = tape.matmul(h, t);                           // H .
    t = tape.row_scale(t, dv_node);                  // Dv^-1/2 .
    t = tape.matmul(t, params.theta[static_cast<std::size_t>(l)]);
    node = (l + 1 < L) ? tape.relu(t) : t;
  }
  return node;
}

Tensor propagate(const Tensor& x, const IncidenceStructure& inc,
                 const PropagationParams& params) {
  Tape tape;
  PropagationHandles handles;
  for (const Tensor& th : params.theta) handles.theta.push_back(tape.input(th, false));
  handles.edge_weights = tape.input(params.edge_weights, false);
  handles.vertex_weights = tape.input(params.vertex_weights, false);
  return tape.value(propagate(tape, tape.input(x, false), inc, handles));
}

Tensor readout(const Tensor& vertex_features) {
  Tape tape;
  const Tensor out = tape.value(tape.readout(tape.input(vertex_features, false)));
  return Tensor({out.cols()}, out.values());
}

Tensor classify(const Tensor& graph_embedding, const Tensor& weight, const Tensor& bias) {
  Tape tape;
  const int d = static_cast<int>(graph_embedding.size());
  const int xg = tape.input(Tensor({1, d}, graph_embedding.values()), false);
  const int logits = tape.add(tape.matmul(xg, tape.input(weight, false)),
                              tape.input(Tensor({1, weight.cols()}, bias.values()), false));
  const Tensor& out = tape.value(logits);
  return Tensor({out.cols()}, out.values());
}

std::string edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kTimeConsistent: return "time-consistent";
    case EdgeKind::kViewConsistent: return "view-consistent";
    case EdgeKind::kKnn: return "knn";
    case EdgeKind::kPairwise: return "pairwise";
  }
  return "unknown";
}

}  // namespace hypermv
