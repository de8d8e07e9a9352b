#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "hypermv/checkpoint.hpp"
#include "hypermv/kernels.hpp"
#include "hypermv/optim.hpp"
#include "hypermv/tape.hpp"
#include "oracles.hpp"

using namespace hypermv;
using oracles::central_diff;
using oracles::random_tensor;
using oracles::rel_err;

TEST_CASE("matmul against identity and reference") {
  std::mt19937_64 gen(1);
  Tensor a = random_tensor({4, 6}, gen);
  Tensor eye({6, 6});
  for (int i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
  Tape tape;
  const int out = tape.matmul(tape.input(a), tape.input(eye));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(tape.value(out)[i] == a[i]);

  Tensor b = random_tensor({6, 5}, gen);
  Tensor want = oracles::mat_prod(a, b);
  Tape tape2;
  const int out2 = tape2.matmul(tape2.input(a), tape2.input(b));
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(tape2.value(out2)[i] == doctest::Approx(want[i]).epsilon(1e-12));

  CHECK_THROWS(tape2.matmul(tape2.input(a), tape2.input(a)));
}

TEST_CASE("omp kernels match the serial reference") {
  std::mt19937_64 gen(2);
  SUBCASE("matmul") {
    const int m = 33, k = 17, n = 29;
    Tensor a = random_tensor({m, k}, gen), b = random_tensor({k, n}, gen);
    std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
    kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
    kernels::ref::matmul(a.data(), b.data(), c2.data(), m, k, n);
    for (std::size_t i = 0; i < c1.size(); ++i)
      CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
  }
  SUBCASE("conv2d forward/backward") {
    kernels::Conv2dDims d{3, 2, 4, 9, 7, 3, 3, 2, 1};
    Tensor in = random_tensor({d.n, d.cin, d.h, d.w}, gen);
    Tensor kr = random_tensor({d.cout, d.cin, d.kh, d.kw}, gen);
    Tensor bias = random_tensor({d.cout}, gen);
    const std::size_t outn = static_cast<std::size_t>(d.n) * d.cout * d.out_h() * d.out_w();
    std::vector<double> o1(outn), o2(outn);
    kernels::conv2d_forward(in.data(), kr.data(), bias.data(), o1.data(), d);
    kernels::ref::conv2d_forward(in.data(), kr.data(), bias.data(), o2.data(), d);
    for (std::size_t i = 0; i < outn; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-12));

    std::vector<double> di1(in.size()), di2(in.size());
    kernels::conv2d_backward_input(o1.data(), kr.data(), di1.data(), d);
    kernels::ref::conv2d_backward_input(o1.data(), kr.data(), di2.data(), d);
    for (std::size_t i = 0; i < di1.size(); ++i)
      CHECK(di1[i] == doctest::Approx(di2[i]).epsilon(1e-12));

    std::vector<double> dk1(kr.size()), dk2(kr.size()), db1(bias.size()), db2(bias.size());
    kernels::conv2d_backward_kernel(o1.data(), in.data(), dk1.data(), db1.data(), d);
    kernels::ref::conv2d_backward_kernel(o1.data(), in.data(), dk2.data(), db2.data(), d);
    for (std::size_t i = 0; i < dk1.size(); ++i)
      CHECK(dk1[i] == doctest::Approx(dk2[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < db1.size(); ++i)
      CHECK(db1[i] == doctest::Approx(db2[i]).epsilon(1e-12));
  }
}

TEST_CASE("softmax rows sum to one; uniform logits give 1/C and ln C loss") {
  Tape tape;
  const int C = 7;
  const int sm = tape.softmax(tape.input(Tensor::full({3, C}, 0.25)));
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < C; ++j) {
      CHECK(tape.value(sm).at(i, j) == doctest::Approx(1.0 / C).epsilon(1e-12));
      row += tape.value(sm).at(i, j);
    }
    CHECK(std::fabs(row - 1.0) < 1e-12);
  }
  const int ce = tape.cross_entropy(tape.input(Tensor::full({1, C}, 0.25)), {3});
  CHECK(tape.value(ce)[0] == doctest::Approx(std::log(static_cast<double>(C))).epsilon(1e-12));

  std::mt19937_64 gen(3);
  Tensor logits = random_tensor({4, C}, gen, -3.0, 3.0);
  const int sm2 = tape.softmax(tape.input(logits));
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < C; ++j) {
      CHECK(tape.value(sm2).at(i, j) >= 0.0);
      row += tape.value(sm2).at(i, j);
    }
    CHECK(std::fabs(row - 1.0) < 1e-12);
  }
  const int ce2 = tape.cross_entropy(tape.input(logits), {0, 1, 2, 3});
  CHECK(tape.value(ce2)[0] >= 0.0);
  CHECK_THROWS(tape.cross_entropy(tape.input(logits), {0, 1, 2, 7}));
}

TEST_CASE("conv2d of a delta impulse reproduces the kernel") {
  // stride 1, no padding, 3x3 kernel, impulse at (2,2) of a 5x5 input:
  // out(i,j) = K(2-i, 2-j) over the valid 3x3 output.
  Tensor in({1, 1, 5, 5});
  in[2 * 5 + 2] = 1.0;
  std::mt19937_64 gen(4);
  Tensor k = random_tensor({1, 1, 3, 3}, gen);
  Tape tape;
  const int out = tape.conv2d(tape.input(in), tape.input(k), -1, 1, 0);
  REQUIRE(tape.value(out).shape() == std::vector<int>{1, 1, 3, 3});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(tape.value(out)[static_cast<std::size_t>(i) * 3 + j] ==
            k[static_cast<std::size_t>(2 - i) * 3 + (2 - j)]);
}

TEST_CASE("backward: sum and elementwise square") {
  SUBCASE("loss = sum(x) gives all-ones gradient") {
    Tape tape;
    std::mt19937_64 gen(5);
    const int x = tape.input(random_tensor({3, 4}, gen), true);
    tape.backward(tape.sum(x));
    for (std::size_t i = 0; i < tape.grad(x).size(); ++i) CHECK(tape.grad(x)[i] == 1.0);
  }
  SUBCASE("loss = sum(x*x) at x=3 gives gradient 6") {
    Tape tape;
    const int x = tape.input(Tensor::scalar(3.0), true);
    tape.backward(tape.sum(tape.mul(x, x)));
    CHECK(tape.grad(x)[0] == doctest::Approx(6.0).epsilon(1e-12));
  }
  SUBCASE("non-scalar loss rejected") {
    Tape tape;
    const int x = tape.input(Tensor::full({2, 2}, 1.0), true);
    CHECK_THROWS(tape.backward(x));
  }
  SUBCASE("leaf off the loss path keeps zero gradient") {
    Tape tape;
    const int x = tape.input(Tensor::scalar(2.0), true);
    const int y = tape.input(Tensor::scalar(5.0), true);
    tape.backward(tape.sum(tape.mul(x, x)));
    CHECK(tape.grad(y)[0] == 0.0);
  }
}

TEST_CASE("backward: random 3-layer composition matches finite differences") {
  std::mt19937_64 gen(6);
  Tensor x = random_tensor({3, 5}, gen);
  Tensor w1 = random_tensor({5, 4}, gen);
  Tensor w2 = random_tensor({4, 4}, gen);
  Tensor s = random_tensor({3}, gen, 0.5, 1.5);

  auto loss_value = [&]() {
    Tape tape;
    const int xi = tape.input(x);
    const int h1 = tape.relu(tape.matmul(xi, tape.input(w1)));
    const int h2 = tape.row_scale(h1, tape.input(s));
    const int h3 = tape.matmul(h2, tape.input(w2));
    const int sm = tape.softmax(h3);
    return tape.value(tape.sum(tape.mul(sm, sm)))[0];
  };

  Tape tape;
  const int xi = tape.input(x, true);
  const int w1i = tape.input(w1, true);
  const int w2i = tape.input(w2, true);
  const int si = tape.input(s, true);
  const int h1 = tape.relu(tape.matmul(xi, w1i));
  const int h2 = tape.row_scale(h1, si);
  const int h3 = tape.matmul(h2, w2i);
  const int sm = tape.softmax(h3);
  tape.backward(tape.sum(tape.mul(sm, sm)));

  auto check_all = [&](Tensor& t, int node) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double fd = central_diff(loss_value, t, i);
      CHECK(rel_err(tape.grad(node)[i], fd) < 1e-4);
    }
  };
  check_all(x, xi);
  check_all(w1, w1i);
  check_all(w2, w2i);
  check_all(s, si);
}

TEST_CASE("backward: conv / pool / readout / cross-entropy vs finite differences") {
  std::mt19937_64 gen(7);
  Tensor frames = random_tensor({2, 1, 6, 6}, gen);
  Tensor k = random_tensor({3, 1, 3, 3}, gen, -0.5, 0.5);
  Tensor bias = random_tensor({3}, gen, -0.1, 0.1);
  Tensor head = random_tensor({3, 4}, gen);

  auto loss_value = [&]() {
    Tape tape;
    const int c = tape.conv2d(tape.input(frames), tape.input(k), tape.input(bias), 2, 1);
    const int p = tape.global_avg_pool(tape.relu(c));
    const int r = tape.readout(p);
    const int logits = tape.matmul(r, tape.input(head));
    return tape.value(tape.cross_entropy(logits, {2}))[0];
  };

  Tape tape;
  const int fi = tape.input(frames, true);
  const int ki = tape.input(k, true);
  const int bi = tape.input(bias, true);
  const int hi = tape.input(head, true);
  const int c = tape.conv2d(fi, ki, bi, 2, 1);
  const int p = tape.global_avg_pool(tape.relu(c));
  const int r = tape.readout(p);
  tape.backward(tape.cross_entropy(tape.matmul(r, hi), {2}));

  auto check_all = [&](Tensor& t, int node) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double fd = central_diff(loss_value, t, i);
      CHECK(rel_err(tape.grad(node)[i], fd) < 1e-4);
    }
  };
  check_all(frames, fi);
  check_all(k, ki);
  check_all(bias, bi);
  check_all(head, hi);
}

TEST_CASE("adam: zero gradient keeps parameters, unit gradient steps by ~lr") {
  AdamConfig cfg;
  cfg.lr0 = 1e-3;
  cfg.weight_decay = 0.0;
  SUBCASE("zero gradient") {
    ParamStore params{{"w", Tensor::full({2, 2}, 0.5)}};
    ParamStore grads{{"w", Tensor({2, 2})}};
    AdamState adam(params);
    adam.step(params, grads, cfg, cfg.lr0);
    for (std::size_t i = 0; i < params.at("w").size(); ++i) CHECK(params.at("w")[i] == 0.5);
  }
  SUBCASE("first step with g=1 is -lr * 1/(1+eps)") {
    ParamStore params{{"w", Tensor::scalar(0.0)}};
    ParamStore grads{{"w", Tensor::scalar(1.0)}};
    AdamState adam(params);
    adam.step(params, grads, cfg, cfg.lr0);
    // hand evaluation: m_hat = v_hat = 1 after bias correction
    const double expected = -cfg.lr0 * 1.0 / (std::sqrt(1.0) + cfg.eps);
    CHECK(params.at("w")[0] == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("two identical runs give identical trajectories") {
    auto run = [&] {
      ParamStore params{{"w", Tensor::full({3}, 0.7)}};
      AdamState adam(params);
      for (int i = 0; i < 25; ++i) {
        ParamStore grads{{"w", Tensor::full({3}, 0.3 * (i % 5 - 2))}};
        adam.step(params, grads, cfg, cfg.lr0);
      }
      return params.at("w");
    };
    const Tensor a = run(), b = run();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
  SUBCASE("weight decay enters the gradient additively") {
    AdamConfig wd = cfg;
    wd.weight_decay = 0.1;
    ParamStore params{{"w", Tensor::scalar(2.0)}};
    ParamStore grads{{"w", Tensor::scalar(0.0)}};
    AdamState adam(params);
    adam.step(params, grads, wd, wd.lr0);
    // effective gradient 0.1*2.0 = 0.2; first-step update is -lr*sign(g)
    const double expected = 2.0 - wd.lr0 * 1.0 / (1.0 + wd.eps);
    CHECK(params.at("w")[0] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("lr schedule: halves every decay_step epochs") {
  AdamConfig cfg;  // lr0 = 1e-4, gamma = 0.5, step 10
  CHECK(lr_schedule(cfg, 0) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(lr_schedule(cfg, 9) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(lr_schedule(cfg, 10) == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(lr_schedule(cfg, 20) == doctest::Approx(2.5e-5).epsilon(1e-15));
  CHECK_THROWS(lr_schedule(cfg, -1));
}

TEST_CASE("checkpoint: HMV1 round-trip preserves names, shapes, values") {
  std::mt19937_64 gen(8);
  ParamStore params;
  params.emplace("backbone.conv0.kernel", random_tensor({4, 1, 3, 3}, gen));
  params.emplace("head.bias", random_tensor({1, 5}, gen));
  params.emplace("prop.wv", random_tensor({27}, gen));
  const std::string path = "checkpoint_roundtrip.hmv1";
  save_checkpoint(params, path);
  const ParamStore loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == params.size());
  for (const auto& [name, t] : params) {
    REQUIRE(loaded.count(name) == 1);
    REQUIRE(loaded.at(name).shape() == t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(loaded.at(name)[i] == t[i]);
  }
  std::remove(path.c_str());
  CHECK_THROWS(load_checkpoint("does_not_exist.hmv1"));
}
