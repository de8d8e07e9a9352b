#pragma once

#include <string>
#include <vector>

#include "hypermv/tape.hpp"
#include "hypermv/tensor.hpp"

namespace hypermv {

/// Hypergraph vertex (v, t): the embedding of view v at time window t.
/// Flat index v * T + (t - 1) matches the embedding matrix row order.
struct VertexId {
  int view = 0;    // 0..V-1
  int window = 1;  // 1..T

  static int flat(int view, int window, int T) { return view * T + (window - 1); }
};

enum class EdgeKind {
  kTimeConsistent,  // one view, all windows
  kViewConsistent,  // one window, all views
  kKnn,             // a vertex plus its k nearest embeddings
  kPairwise,        // graph-variant 2-vertex edge
};

struct Hyperedge {
  EdgeKind kind = EdgeKind::kTimeConsistent;
  int anchor = -1;               // view / window / center flat index, by kind
  std::vector<int> members;      // sorted flat vertex indices, cardinality >= 2
};

/// One time-consistent edge per view (when T >= 2, cardinality T) followed by
/// one view-consistent edge per window (when V >= 2, cardinality V).
/// Degenerate singleton edges are omitted.
std::vector<Hyperedge> build_rule_hyperedges(int V, int T);

/// For each vertex: an edge of the vertex plus its k nearest distinct
/// neighbours under Euclidean distance on embedding rows, ties broken by
/// smaller flat index. N edges, ordered by center flat index.
std::vector<Hyperedge> build_knn_hyperedges(const Tensor& embeddings, int k);

/// Graph-variant edges, all of cardinality 2: temporal adjacency within each
/// view, every cross-view pair at equal windows, then k nearest-neighbour
/// pairs per vertex.
std::vector<Hyperedge> build_graph_edges(const Tensor& embeddings, int k, int V, int T);

/// Binary incidence matrix with vertex/hyperedge degree vectors. Column e
/// follows the order of the input edge list; H(i, e) = 1 iff vertex i
/// belongs to edge e; degrees are the unweighted row/column sums.
struct IncidenceStructure {
  int vertex_count = 0;
  int edge_count = 0;
  Tensor h;             // [N, M]
  std::vector<int> dv;  // vertex degrees, length N
  std::vector<int> de;  // hyperedge degrees, length M
};

IncidenceStructure build_incidence(const std::vector<Hyperedge>& edges, int N);

/// Per-layer feature transforms plus the diagonal hyperedge/vertex attention
/// weights shared across layers.
struct PropagationParams {
  std::vector<Tensor> theta;  // L matrices, [d_l, d_{l+1}]
  Tensor edge_weights;        // [M]
  Tensor vertex_weights;      // [N]
};

/// Handles to the same parameters already registered on a tape.
struct PropagationHandles {
  std::vector<int> theta;
  int edge_weights = -1;
  int vertex_weights = -1;
};

/// One propagation stack: L times
///   X <- sigma(Dv^-1/2 H We De^-1 H^T Wv Dv^-1/2 X Theta_l)
/// with sigma = ReLU on hidden layers and identity on the last. Vertices of
/// degree zero are a structural error.
int propagate(Tape& tape, int x, const IncidenceStructure& inc,
              const PropagationHandles& params);

/// Forward-only convenience wrapper.
Tensor propagate(const Tensor& x, const IncidenceStructure& inc,
                 const PropagationParams& params);

/// L1-attention readout (see Tape::readout), forward-only form returning the
/// graph embedding as a flat d-vector.
Tensor readout(const Tensor& vertex_features);

/// Affine classification head: logits = x_g W + b.
Tensor classify(const Tensor& graph_embedding, const Tensor& weight, const Tensor& bias);

std::string edge_kind_name(EdgeKind kind);

}  // namespace hypermv
