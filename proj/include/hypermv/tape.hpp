#pragma once

#include <array>
#include <vector>

#include "hypermv/tensor.hpp"

namespace hypermv {

/// Reverse-mode autodiff over an eagerly evaluated tape.
///
/// Operations append a node, compute its value immediately, and return the
/// node id. Nodes reference their inputs by id, so the tape is in topological
/// order by construction. backward() walks the tape in reverse and
/// accumulates analytic gradients into every node that requires them; leaves
/// off the loss path keep a zero gradient. All reductions run in a fixed
/// order, so gradients are bit-reproducible.
class Tape {
 public:
  enum class Op {
    kInput,
    kMatmul,
    kAdd,
    kMul,
    kRelu,
    kConv2d,
    kGlobalAvgPool,
    kSoftmax,
    kCrossEntropy,
    kRowScale,
    kReshape,
    kScale,
    kSum,
    kReadout,
  };

  struct Node {
    Op op = Op::kInput;
    Tensor value;
    Tensor grad;
    std::array<int, 3> inputs{-1, -1, -1};
    bool requires_grad = false;
    // op attributes
    int stride = 1;
    int pad = 0;
    double factor = 0.0;        // kScale
    std::vector<int> labels;    // kCrossEntropy
    Tensor aux;                 // cached forward by-product (softmax probs, readout weights)
  };

  int input(Tensor value, bool requires_grad = false);

  int matmul(int a, int b);
  int add(int a, int b);
  int mul(int a, int b);
  int relu(int a);
  /// x: [N,Cin,H,W], kernel: [Cout,Cin,kh,kw], bias: [Cout] (or -1 for none).
  int conv2d(int x, int kernel, int bias, int stride, int pad);
  /// [N,C,H,W] -> [N,C]
  int global_avg_pool(int x);
  /// row-wise softmax of [B,C]
  int softmax(int x);
  /// mean cross-entropy of logits [B,C] against integer labels, scalar output
  int cross_entropy(int logits, std::vector<int> labels);
  /// out[i,j] = x[i,j] * s[i];  x: [N,d], s: [N]
  int row_scale(int x, int s);
  int reshape(int x, std::vector<int> shape);
  int scale(int x, double factor);
  /// sum of all entries, scalar output
  int sum(int x);
  /// L1-attention readout of [N,d] -> [1,d]: x_g = sum_i w_i x_i with
  /// w_i = ||x_i||_1 / sum_j ||x_j||_1 (uniform w when all rows are zero).
  int readout(int x);

  void backward(int loss);

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  int push(Node n);
  Node& at(int id) { return nodes_[static_cast<size_t>(id)]; }
  void backward_node(int id);

  std::vector<Node> nodes_;
};

}  // namespace hypermv
