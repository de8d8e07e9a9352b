#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hypermv/backbone.hpp"
#include "oracles.hpp"

using namespace hypermv;
using oracles::central_diff;
using oracles::rel_err;

namespace {

RealVolume random_volume(std::mt19937_64& gen, int X, int Y, int T) {
  RealVolume v;
  v.x = X;
  v.y = Y;
  v.t = T;
  v.values.resize(static_cast<std::size_t>(X) * Y * T);
  for (double& x : v.values) x = rng::uniform(gen, -1.0, 1.0);
  return v;
}

BackboneConfig small_config() {
  BackboneConfig cfg;
  cfg.channels = {4, 8};
  return cfg;
}

}  // namespace

TEST_CASE("init_backbone: deterministic in the seed, Kaiming fan-in variance") {
  BackboneConfig cfg;
  cfg.channels = {64};  // 64*1*3*3 = 576 draws is too few; use the stats case below
  const ParamStore a = init_backbone(cfg, 5);
  const ParamStore b = init_backbone(cfg, 5);
  const ParamStore c = init_backbone(cfg, 6);
  REQUIRE(a.size() == 2);
  for (const auto& [name, t] : a) {
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == b.at(name)[i]);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.at("backbone.conv0.kernel").size(); ++i)
    differs = differs || a.at("backbone.conv0.kernel")[i] != c.at("backbone.conv0.kernel")[i];
  CHECK(differs);
  for (double v : a.at("backbone.conv0.bias").values()) CHECK(v == 0.0);

  // sample variance over >= 1e4 draws approaches 2 / fan_in
  BackboneConfig big;
  big.channels = {32, 64};  // second conv: 64*32*9 = 18432 draws, fan_in = 288
  const ParamStore p = init_backbone(big, 123);
  const Tensor& k = p.at("backbone.conv1.kernel");
  REQUIRE(k.size() >= 10000);
  double mean = 0.0;
  for (double v : k.values()) mean += v;
  mean /= static_cast<double>(k.size());
  double var = 0.0;
  for (double v : k.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(k.size() - 1);
  const double want = 2.0 / (32 * 9);
  CHECK(rel_err(var, want) < 0.05);
}

TEST_CASE("extract: weight sharing makes identical frames identical rows") {
  std::mt19937_64 gen(2);
  const BackboneConfig cfg = small_config();
  const ParamStore params = init_backbone(cfg, 3);
  RealVolume vol = random_volume(gen, 8, 8, 3);
  const std::vector<RealVolume> views{vol, vol};  // view 1 duplicates view 0
  const Tensor emb = extract(views, cfg, params);
  REQUIRE(emb.shape() == std::vector<int>{6, cfg.embed_dim()});
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < cfg.embed_dim(); ++j)
      CHECK(emb.at(t, j) == emb.at(3 + t, j));
}

TEST_CASE("extract: zero input gives one repeated zero-input response row") {
  const BackboneConfig cfg = small_config();
  const ParamStore params = init_backbone(cfg, 4);
  RealVolume zero;
  zero.x = zero.y = 8;
  zero.t = 4;
  zero.values.assign(8 * 8 * 4, 0.0);
  const Tensor emb = extract({zero, zero, zero}, cfg, params);
  for (int r = 1; r < emb.rows(); ++r)
    for (int j = 0; j < emb.cols(); ++j) CHECK(emb.at(r, j) == emb.at(0, j));
}

TEST_CASE("extract: permuting views permutes row blocks; rows are v-major") {
  std::mt19937_64 gen(5);
  const BackboneConfig cfg = small_config();
  const ParamStore params = init_backbone(cfg, 7);
  const RealVolume a = random_volume(gen, 8, 8, 2);
  const RealVolume b = random_volume(gen, 8, 8, 2);
  const RealVolume c = random_volume(gen, 8, 8, 2);
  const Tensor abc = extract({a, b, c}, cfg, params);
  const Tensor cab = extract({c, a, b}, cfg, params);
  const int T = 2, d = cfg.embed_dim();
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j) {
      CHECK(abc.at(0 * T + t, j) == cab.at(1 * T + t, j));  // a
      CHECK(abc.at(1 * T + t, j) == cab.at(2 * T + t, j));  // b
      CHECK(abc.at(2 * T + t, j) == cab.at(0 * T + t, j));  // c
    }
}

TEST_CASE("extract: rejects frames smaller than the stride pyramid") {
  const BackboneConfig cfg;  // 4 blocks -> needs >= 16 per axis
  const ParamStore params = init_backbone(cfg, 1);
  std::mt19937_64 gen(6);
  const RealVolume tiny = random_volume(gen, 8, 8, 2);
  CHECK_THROWS_AS(extract({tiny}, cfg, params), std::invalid_argument);
  CHECK_THROWS(stack_volumes({}));
  const RealVolume other = random_volume(gen, 10, 8, 2);
  CHECK_THROWS(stack_volumes({tiny, other}));
}

TEST_CASE("extract gradients pass the finite-difference check") {
  std::mt19937_64 gen(8);
  BackboneConfig cfg;
  cfg.channels = {3, 5};
  ParamStore params = init_backbone(cfg, 9);
  const RealVolume vol = random_volume(gen, 8, 8, 2);
  const Tensor frames = stack_volumes({vol});

  auto loss_value = [&]() {
    Tape tape;
    ParamHandles handles;
    for (const auto& [name, t] : params) handles.nodes.emplace(name, tape.input(t, false));
    const int emb = extract(tape, tape.input(frames, false), cfg, handles);
    return tape.value(tape.sum(tape.mul(emb, emb)))[0];
  };

  Tape tape;
  ParamHandles handles = register_params(tape, params);
  const int emb = extract(tape, tape.input(frames, false), cfg, handles);
  tape.backward(tape.sum(tape.mul(emb, emb)));

  for (auto& [name, t] : params) {
    const int node = handles.at(name);
    for (std::size_t i = 0; i < t.size(); i += std::max<std::size_t>(1, t.size() / 17)) {
      const double fd = central_diff(loss_value, t, i);
      CHECK(rel_err(tape.grad(node)[i], fd) < 1e-3);
    }
  }
}
