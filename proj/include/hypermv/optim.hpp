#pragma once

#include <map>
#include <string>

#include "hypermv/tensor.hpp"

namespace hypermv {

/// Named trainable tensors. std::map keeps a stable name order, which the
/// optimizer and checkpoint code rely on for reproducibility.
using ParamStore = std::map<std::string, Tensor>;

struct AdamConfig {
  double lr0 = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double gamma = 0.5;    // exponential decay factor
  int decay_step = 10;   // epochs per decay application
};

/// Per-parameter first/second moment accumulators plus the shared step count.
class AdamState {
 public:
  explicit AdamState(const ParamStore& params);

  /// One Adam update over every parameter. Gradients must be shaped like
  /// their parameters. Weight decay enters as an additive wd*param term in
  /// the gradient before the moment updates.
  void step(ParamStore& params, const ParamStore& grads, const AdamConfig& cfg, double lr);

  long long steps_taken() const { return step_; }

 private:
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  long long step_ = 0;
};

/// lr0 * gamma^(epoch / decay_step), integer division.
double lr_schedule(const AdamConfig& cfg, int epoch);

}  // namespace hypermv
