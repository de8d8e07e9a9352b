#pragma once

// Test-side reference implementations, kept independent of the library's
// production code paths so they can serve as oracles.

#include <cmath>
#include <random>
#include <vector>

#include "hypermv/rng.hpp"
#include "hypermv/tensor.hpp"

namespace oracles {

inline hypermv::Tensor random_tensor(std::vector<int> shape, std::mt19937_64& gen,
                                     double lo = -1.0, double hi = 1.0) {
  hypermv::Tensor t(std::move(shape));
  for (double& v : t.values()) v = hypermv::rng::uniform(gen, lo, hi);
  return t;
}

/// Central finite difference of f at entry idx of t.
template <typename F>
double central_diff(F&& f, hypermv::Tensor& t, std::size_t idx, double h = 1e-5) {
  const double orig = t[idx];
  t[idx] = orig + h;
  const double fp = f();
  t[idx] = orig - h;
  const double fm = f();
  t[idx] = orig;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  const double scale = std::max({std::fabs(got), std::fabs(want), 1e-8});
  return std::fabs(got - want) / scale;
}

/// Plain triple-loop matrix product, local to the tests.
inline hypermv::Tensor mat_prod(const hypermv::Tensor& a, const hypermv::Tensor& b) {
  hypermv::Tensor c({a.rows(), b.cols()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int p = 0; p < a.cols(); ++p) acc += a.at(i, p) * b.at(p, j);
      c.at(i, j) = acc;
    }
  return c;
}

/// Vanilla HGNN layer from the cited propagation formula, with explicit
/// diagonal matrices: sigma(Dv^-1/2 H W De^-1 H^T Dv^-1/2 X Theta).
inline hypermv::Tensor vanilla_hgnn_layer(const hypermv::Tensor& x, const hypermv::Tensor& h,
                                          const std::vector<double>& edge_w,
                                          const hypermv::Tensor& theta, bool relu) {
  const int n = h.rows(), m = h.cols();
  std::vector<double> dv(static_cast<std::size_t>(n), 0.0), de(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < n; ++i)
    for (int e = 0; e < m; ++e) {
      dv[static_cast<std::size_t>(i)] += h.at(i, e);
      de[static_cast<std::size_t>(e)] += h.at(i, e);
    }
  auto diag = [](const std::vector<double>& d) {
    hypermv::Tensor t({static_cast<int>(d.size()), static_cast<int>(d.size())});
    for (std::size_t i = 0; i < d.size(); ++i) t.at(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return t;
  };
  std::vector<double> dv_is(dv), de_inv(de);
  for (double& v : dv_is) v = 1.0 / std::sqrt(v);
  for (double& v : de_inv) v = 1.0 / v;
  hypermv::Tensor ht({m, n});
  for (int i = 0; i < n; ++i)
    for (int e = 0; e < m; ++e) ht.at(e, i) = h.at(i, e);
  hypermv::Tensor out = mat_prod(diag(dv_is), h);
  out = mat_prod(out, diag(edge_w));
  out = mat_prod(out, diag(de_inv));
  out = mat_prod(out, ht);
  out = mat_prod(out, diag(dv_is));
  out = mat_prod(out, x);
  out = mat_prod(out, theta);
  if (relu)
    for (double& v : out.values()) v = std::max(0.0, v);
  return out;
}

/// Vertex -> hyperedge -> vertex fusion oracle for one propagation layer:
/// gather vertex features into each hyperedge with the vertex weights and
/// Dv^-1/2 scaling and De^-1 averaging, scatter back with the edge weights
/// and Dv^-1/2, then the feature transform and activation.
inline hypermv::Tensor gather_scatter_layer(const hypermv::Tensor& x,
                                            const std::vector<std::vector<int>>& edges,
                                            const std::vector<double>& edge_w,
                                            const std::vector<double>& vertex_w,
                                            const hypermv::Tensor& theta, bool relu) {
  const int n = x.rows(), d = x.cols();
  const int m = static_cast<int>(edges.size());
  std::vector<double> dv(static_cast<std::size_t>(n), 0.0);
  for (const auto& e : edges)
    for (int i : e) dv[static_cast<std::size_t>(i)] += 1.0;
  hypermv::Tensor edge_feat({m, d});
  for (int e = 0; e < m; ++e) {
    for (int i : edges[static_cast<std::size_t>(e)])
      for (int j = 0; j < d; ++j)
        edge_feat.at(e, j) += vertex_w[static_cast<std::size_t>(i)] /
                              std::sqrt(dv[static_cast<std::size_t>(i)]) * x.at(i, j);
    for (int j = 0; j < d; ++j)
      edge_feat.at(e, j) /= static_cast<double>(edges[static_cast<std::size_t>(e)].size());
  }
  hypermv::Tensor vertex_feat({n, d});
  for (int e = 0; e < m; ++e)
    for (int i : edges[static_cast<std::size_t>(e)])
      for (int j = 0; j < d; ++j)
        vertex_feat.at(i, j) += edge_w[static_cast<std::size_t>(e)] * edge_feat.at(e, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) vertex_feat.at(i, j) /= std::sqrt(dv[static_cast<std::size_t>(i)]);
  hypermv::Tensor out = mat_prod(vertex_feat, theta);
  if (relu)
    for (double& v : out.values()) v = std::max(0.0, v);
  return out;
}

}  // namespace oracles
