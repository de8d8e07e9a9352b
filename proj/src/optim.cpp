#include "hypermv/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace hypermv {

AdamState::AdamState(const ParamStore& params) {
  for (const auto& [name, p] : params) {
    m_.emplace(name, Tensor(p.shape()));
    v_.emplace(name, Tensor(p.shape()));
  }
}

void AdamState::step(ParamStore& params, const ParamStore& grads, const AdamConfig& cfg,
                     double lr) {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) throw std::invalid_argument("adam: missing gradient for " + name);
    const Tensor& g = git->second;
    if (!g.same_shape(p))
      throw std::invalid_argument("adam: gradient shape mismatch for " + name);
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double lr_schedule(const AdamConfig& cfg, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
  const int applications = epoch / cfg.decay_step;
  return cfg.lr0 * std::pow(cfg.gamma, static_cast<double>(applications));
}

}  // namespace hypermv
