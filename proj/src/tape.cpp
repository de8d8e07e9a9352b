#include "hypermv/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "hypermv/kernels.hpp"

namespace hypermv {

namespace {

void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("tape: " + msg);
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.rank() == 2 && B.rank() == 2, "matmul expects rank-2 operands");
  check(A.cols() == B.rows(),
        "matmul inner dimensions differ: " + A.shape_str() + " x " + B.shape_str());
  Node n;
  n.op = Op::kMatmul;
  n.inputs = {a, b, -1};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = Tensor({A.rows(), B.cols()});
  kernels::matmul(A.data(), B.data(), n.value.data(), A.rows(), A.cols(), B.cols());
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.same_shape(B), "add shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b, -1};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = A;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += B[i];
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  check(A.same_shape(B), "mul shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b, -1};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.value = A;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= B[i];
  return push(std::move(n));
}

int Tape::relu(int a) {
  Node n;
  n.op = Op::kRelu;
  n.inputs = {a, -1, -1};
  n.requires_grad = node(a).requires_grad;
  n.value = value(a);
  for (double& v : n.value.values())
    if (v < 0.0) v = 0.0;
  return push(std::move(n));
}

int Tape::conv2d(int x, int kernel, int bias, int stride, int pad) {
  const Tensor& X = value(x);
  const Tensor& K = value(kernel);
  check(X.rank() == 4 && K.rank() == 4, "conv2d expects rank-4 input and kernel");
  check(X.dim(1) == K.dim(1), "conv2d channel mismatch: input " + X.shape_str() +
                                  " kernel " + K.shape_str());
  check(stride >= 1 && pad >= 0, "conv2d stride must be >= 1 and pad >= 0");
  kernels::Conv2dDims d{X.dim(0), X.dim(1), K.dim(0), X.dim(2), X.dim(3),
                        K.dim(2), K.dim(3), stride,   pad};
  check(d.out_h() >= 1 && d.out_w() >= 1,
        "conv2d input " + X.shape_str() + " too small for kernel/stride");
  const double* bptr = nullptr;
  if (bias >= 0) {
    const Tensor& B = value(bias);
    check(B.size() == static_cast<std::size_t>(K.dim(0)), "conv2d bias size mismatch");
    bptr = B.data();
  }
  Node n;
  n.op = Op::kConv2d;
  n.inputs = {x, kernel, bias};
  n.requires_grad = node(x).requires_grad || node(kernel).requires_grad ||
                    (bias >= 0 && node(bias).requires_grad);
  n.stride = stride;
  n.pad = pad;
  n.value = Tensor({d.n, d.cout, d.out_h(), d.out_w()});
  kernels::conv2d_forward(X.data(), K.data(), bptr, n.value.data(), d);
  return push(std::move(n));
}

int Tape::global_avg_pool(int x) {
  const Tensor& X = value(x);
  check(X.rank() == 4, "global_avg_pool expects rank-4 input");
  const int N = X.dim(0), C = X.dim(1), HW = X.dim(2) * X.dim(3);
  Node n;
  n.op = Op::kGlobalAvgPool;
  n.inputs = {x, -1, -1};
  n.requires_grad = node(x).requires_grad;
  n.value = Tensor({N, C});
  const double inv = 1.0 / HW;
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < C; ++c) {
      const double* p = X.data() + (static_cast<std::size_t>(i) * C + c) * HW;
      double acc = 0.0;
      for (int j = 0; j < HW; ++j) acc += p[j];
      n.value.at(i, c) = acc * inv;
    }
  }
  return push(std::move(n));
}

int Tape::softmax(int x) {
  const Tensor& X = value(x);
  check(X.rank() == 2, "softmax expects rank-2 input");
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {x, -1, -1};
  n.requires_grad = node(x).requires_grad;
  n.value = X;
  const int B = X.rows(), C = X.cols();
  for (int i = 0; i < B; ++i) {
    double* row = n.value.data() + static_cast<std::size_t>(i) * C;
    double mx = row[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < C; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (int j = 0; j < C; ++j) row[j] /= z;
  }
  return push(std::move(n));
}

int Tape::cross_entropy(int logits, std::vector<int> labels) {
  const Tensor& X = value(logits);
  check(X.rank() == 2, "cross_entropy expects rank-2 logits");
  const int B = X.rows(), C = X.cols();
  check(static_cast<int>(labels.size()) == B, "cross_entropy label count mismatch");
  for (int y : labels)
    check(y >= 0 && y < C, "cross_entropy label outside [0, C)");
  Node n;
  n.op = Op::kCrossEntropy;
  n.inputs = {logits, -1, -1};
  n.requires_grad = node(logits).requires_grad;
  n.labels = std::move(labels);
  n.aux = Tensor({B, C});  // softmax probabilities, reused in backward
  double loss = 0.0;
  for (int i = 0; i < B; ++i) {
    const double* row = X.data() + static_cast<std::size_t>(i) * C;
    double* prow = n.aux.data() + static_cast<std::size_t>(i) * C;
    double mx = row[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < C; ++j) {
      prow[j] = std::exp(row[j] - mx);
      z += prow[j];
    }
    for (int j = 0; j < C; ++j) prow[j] /= z;
    loss += std::log(z) + mx - row[n.labels[static_cast<size_t>(i)]];
  }
  n.value = Tensor::scalar(loss / B);
  return push(std::move(n));
}

int Tape::row_scale(int x, int s) {
  const Tensor& X = value(x);
  const Tensor& S = value(s);
  check(X.rank() == 2, "row_scale expects rank-2 input");
  check(S.size() == static_cast<std::size_t>(X.rows()),
        "row_scale scale length must equal row count");
  Node n;
  n.op = Op::kRowScale;
  n.inputs = {x, s, -1};
  n.requires_grad = node(x).requires_grad || node(s).requires_grad;
  n.value = X;
  const int R = X.rows(), C = X.cols();
  for (int i = 0; i < R; ++i) {
    double* row = n.value.data() + static_cast<std::size_t>(i) * C;
    for (int j = 0; j < C; ++j) row[j] *= S[static_cast<size_t>(i)];
  }
  return push(std::move(n));
}

int Tape::reshape(int x, std::vector<int> shape) {
  const Tensor& X = value(x);
  check(shape_count(shape) == X.size(), "reshape must preserve value count");
  Node n;
  n.op = Op::kReshape;
  n.inputs = {x, -1, -1};
  n.requires_grad = node(x).requires_grad;
  n.value = Tensor(std::move(shape), X.values());
  return push(std::move(n));
}

int Tape::scale(int x, double factor) {
  Node n;
  n.op = Op::kScale;
  n.inputs = {x, -1, -1};
  n.requires_grad = node(x).requires_grad;
  n.factor = factor;
  n.value = value(x);
  for (double& v : n.value.values()) v *= factor;
  return push(std::move(n));
}

int Tape::sum(int x) {
  Node n;
  n.op = Op::kSum;
  n.inputs = {x, -1, -1};
  n.requires_grad = node(x).requires_grad;
  n.value = Tensor::scalar(value(x).sum());
  return push(std::move(n));
}

int Tape::readout(int x) {
  const Tensor& X = value(x);
  check(X.rank() == 2, "readout expects rank-2 input");
  const int N = X.rows(), D = X.cols();
  Node n;
  n.op = Op::kReadout;
  n.inputs = {x, -1, -1};
  n.requires_grad = node(x).requires_grad;
  n.aux = Tensor({N});  // vertex weights
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    double l1 = 0.0;
    const double* row = X.data() + static_cast<std::size_t>(i) * D;
    for (int j = 0; j < D; ++j) l1 += std::fabs(row[j]);
    n.aux[static_cast<size_t>(i)] = l1;
    total += l1;
  }
  if (total > 0.0) {
    for (int i = 0; i < N; ++i) n.aux[static_cast<size_t>(i)] /= total;
  } else {
    for (int i = 0; i < N; ++i) n.aux[static_cast<size_t>(i)] = 1.0 / N;
  }
  n.value = Tensor({1, D});
  for (int i = 0; i < N; ++i) {
    const double w = n.aux[static_cast<size_t>(i)];
    const double* row = X.data() + static_cast<std::size_t>(i) * D;
    for (int j = 0; j < D; ++j) n.value[static_cast<size_t>(j)] += w * row[j];
  }
  return push(std::move(n));
}

void Tape::backward(int loss) {
  check(loss >= 0 && loss < size(), "backward: node id out of range");
  check(value(loss).size() == 1, "backward: loss must be scalar");
  for (Node& n : nodes_) {
    n.grad = Tensor(n.value.shape());  // zero
  }
  at(loss).grad[0] = 1.0;
  for (int id = loss; id >= 0; --id) backward_node(id);
}

void Tape::backward_node(int id) {
  Node& n = at(id);
  if (!n.requires_grad || n.op == Op::kInput) return;
  const Tensor& g = n.grad;
  const int a = n.inputs[0], b = n.inputs[1], c = n.inputs[2];
  switch (n.op) {
    case Op::kInput:
      break;
    case Op::kMatmul: {
      const Tensor& A = value(a);
      const Tensor& B = value(b);
      if (node(a).requires_grad)
        kernels::matmul_acc_a_bt(g.data(), B.data(), at(a).grad.data(), A.rows(), A.cols(),
                                 B.cols());
      if (node(b).requires_grad)
        kernels::matmul_acc_at_b(A.data(), g.data(), at(b).grad.data(), A.rows(), A.cols(),
                                 B.cols());
      break;
    }
    case Op::kAdd: {
      if (node(a).requires_grad) {
        Tensor& ga = at(a).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (node(b).requires_grad) {
        Tensor& gb = at(b).grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
      break;
    }
    case Op::kMul: {
      const Tensor& A = value(a);
      const Tensor& B = value(b);
      if (node(a).requires_grad) {
        Tensor& ga = at(a).grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      }
      if (node(b).requires_grad) {
        Tensor& gb = at(b).grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      }
      break;
    }
    case Op::kRelu: {
      if (node(a).requires_grad) {
        const Tensor& A = value(a);
        Tensor& ga = at(a).grad;
        for (std::size_t i = 0; i < g.size(); ++i)
          if (A[i] > 0.0) ga[i] += g[i];
      }
      break;
    }
    case Op::kConv2d: {
      const Tensor& X = value(a);
      const Tensor& K = value(b);
      kernels::Conv2dDims d{X.dim(0), X.dim(1), K.dim(0), X.dim(2), X.dim(3),
                            K.dim(2), K.dim(3), n.stride, n.pad};
      if (node(a).requires_grad)
        kernels::conv2d_backward_input(g.data(), K.data(), at(a).grad.data(), d);
      if (node(b).requires_grad || (c >= 0 && node(c).requires_grad)) {
        double* dbias = (c >= 0 && node(c).requires_grad) ? at(c).grad.data() : nullptr;
        // backward_kernel fills both; a scratch buffer absorbs the kernel
        // gradient when only the bias is trainable.
        if (node(b).requires_grad) {
          kernels::conv2d_backward_kernel(g.data(), X.data(), at(b).grad.data(), dbias, d);
        } else {
          Tensor scratch(K.shape());
          kernels::conv2d_backward_kernel(g.data(), X.data(), scratch.data(), dbias, d);
        }
      }
      break;
    }
    case Op::kGlobalAvgPool: {
      if (!node(a).requires_grad) break;
      const Tensor& X = value(a);
      const int N = X.dim(0), C = X.dim(1), HW = X.dim(2) * X.dim(3);
      const double inv = 1.0 / HW;
      Tensor& ga = at(a).grad;
      for (int i = 0; i < N; ++i)
        for (int ch = 0; ch < C; ++ch) {
          const double gv = g.at(i, ch) * inv;
          double* p = ga.data() + (static_cast<std::size_t>(i) * C + ch) * HW;
          for (int j = 0; j < HW; ++j) p[j] += gv;
        }
      break;
    }
    case Op::kSoftmax: {
      if (!node(a).requires_grad) break;
      const Tensor& Y = n.value;
      const int B = Y.rows(), C = Y.cols();
      Tensor& ga = at(a).grad;
      for (int i = 0; i < B; ++i) {
        const double* y = Y.data() + static_cast<std::size_t>(i) * C;
        const double* gy = g.data() + static_cast<std::size_t>(i) * C;
        double dot = 0.0;
        for (int j = 0; j < C; ++j) dot += gy[j] * y[j];
        double* gx = ga.data() + static_cast<std::size_t>(i) * C;
        for (int j = 0; j < C; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
      break;
    }
    case Op::kCrossEntropy: {
      if (!node(a).requires_grad) break;
      const int B = n.aux.rows(), C = n.aux.cols();
      const double gv = g[0] / B;
      Tensor& ga = at(a).grad;
      for (int i = 0; i < B; ++i) {
        const double* p = n.aux.data() + static_cast<std::size_t>(i) * C;
        double* gx = ga.data() + static_cast<std::size_t>(i) * C;
        for (int j = 0; j < C; ++j) gx[j] += gv * p[j];
        gx[n.labels[static_cast<size_t>(i)]] -= gv;
      }
      break;
    }
    case Op::kRowScale: {
      const Tensor& X = value(a);
      const Tensor& S = value(b);
      const int R = X.rows(), C = X.cols();
      if (node(a).requires_grad) {
        Tensor& ga = at(a).grad;
        for (int i = 0; i < R; ++i) {
          const double sv = S[static_cast<size_t>(i)];
          const double* gr = g.data() + static_cast<std::size_t>(i) * C;
          double* gx = ga.data() + static_cast<std::size_t>(i) * C;
          for (int j = 0; j < C; ++j) gx[j] += gr[j] * sv;
        }
      }
      if (node(b).requires_grad) {
        Tensor& gs = at(b).grad;
        for (int i = 0; i < R; ++i) {
          const double* gr = g.data() + static_cast<std::size_t>(i) * C;
          const double* xr = X.data() + static_cast<std::size_t>(i) * C;
          double acc = 0.0;
          for (int j = 0; j < C; ++j) acc += gr[j] * xr[j];
          gs[static_cast<size_t>(i)] += acc;
        }
      }
      break;
    }
    case Op::kReshape: {
      if (!node(a).requires_grad) break;
      Tensor& ga = at(a).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      break;
    }
    case Op::kScale: {
      if (!node(a).requires_grad) break;
      Tensor& ga = at(a).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.factor;
      break;
    }
    case Op::kSum: {
      if (!node(a).requires_grad) break;
      Tensor& ga = at(a).grad;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
      break;
    }
    case Op::kReadout: {
      if (!node(a).requires_grad) break;
      const Tensor& X = value(a);
      const int N = X.rows(), D = X.cols();
      Tensor& ga = at(a).grad;
      double total = 0.0;
      for (int i = 0; i < N; ++i) {
        const double* row = X.data() + static_cast<std::size_t>(i) * D;
        for (int j = 0; j < D; ++j) total += std::fabs(row[j]);
      }
      double gdotxg = 0.0;
      for (int j = 0; j < D; ++j) gdotxg += g[static_cast<size_t>(j)] * n.value[static_cast<size_t>(j)];
      for (int i = 0; i < N; ++i) {
        const double w = n.aux[static_cast<size_t>(i)];
        const double* row = X.data() + static_cast<std::size_t>(i) * D;
        double* gx = ga.data() + static_cast<std::size_t>(i) * D;
        double gdotxi = 0.0;
        for (int j = 0; j < D; ++j) gdotxi += g[static_cast<size_t>(j)] * row[j];
        for (int j = 0; j < D; ++j) {
          double dv = g[static_cast<size_t>(j)] * w;
          if (total > 0.0) {
            const double sgn = row[j] > 0.0 ? 1.0 : (row[j] < 0.0 ? -1.0 : 0.0);
            dv += sgn * (gdotxi - gdotxg) / total;
          }
          gx[j] += dv;
        }
      }
      break;
    }
  }
}

}  // namespace hypermv
