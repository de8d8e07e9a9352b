// Timing comparison of the OpenMP kernels against the serial reference.
// Usage: kernel_bench [repeats]

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "hypermv/kernels.hpp"
#include "hypermv/rng.hpp"

using hypermv::kernels::Conv2dDims;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& gen) {
  std::vector<double> v(n);
  for (double& x : v) x = hypermv::rng::uniform(gen, -1.0, 1.0);
  return v;
}

template <typename F>
double time_best_of(int repeats, F&& fn) {
  double best = 1e30;
  for (int r = 0; r < repeats; ++r) {
    const double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-24s serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::mt19937_64 gen(7);
  std::printf("threads: %d\n", omp_get_max_threads());

  {
    const int m = 256, k = 256, n = 256;
    const auto a = random_vec(static_cast<std::size_t>(m) * k, gen);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, gen);
    std::vector<double> c(static_cast<std::size_t>(m) * n);
    const double ts = time_best_of(
        repeats, [&] { hypermv::kernels::ref::matmul(a.data(), b.data(), c.data(), m, k, n); });
    const double tp = time_best_of(
        repeats, [&] { hypermv::kernels::matmul(a.data(), b.data(), c.data(), m, k, n); });
    report("matmul 256^3", ts, tp);
  }

  Conv2dDims d{16, 8, 16, 64, 64, 3, 3, 2, 1};
  const auto in = random_vec(static_cast<std::size_t>(d.n) * d.cin * d.h * d.w, gen);
  const auto kernel =
      random_vec(static_cast<std::size_t>(d.cout) * d.cin * d.kh * d.kw, gen);
  const auto bias = random_vec(static_cast<std::size_t>(d.cout), gen);
  const std::size_t out_size =
      static_cast<std::size_t>(d.n) * d.cout * d.out_h() * d.out_w();
  std::vector<double> out(out_size);

  {
    const double ts = time_best_of(repeats, [&] {
      hypermv::kernels::ref::conv2d_forward(in.data(), kernel.data(), bias.data(), out.data(), d);
    });
    const double tp = time_best_of(repeats, [&] {
      hypermv::kernels::conv2d_forward(in.data(), kernel.data(), bias.data(), out.data(), d);
    });
    report("conv2d fwd 16x8x64^2", ts, tp);
  }
  {
    std::vector<double> din(in.size());
    const double ts = time_best_of(repeats, [&] {
      std::fill(din.begin(), din.end(), 0.0);
      hypermv::kernels::ref::conv2d_backward_input(out.data(), kernel.data(), din.data(), d);
    });
    const double tp = time_best_of(repeats, [&] {
      std::fill(din.begin(), din.end(), 0.0);
      hypermv::kernels::conv2d_backward_input(out.data(), kernel.data(), din.data(), d);
    });
    report("conv2d bwd-input", ts, tp);
  }
  {
    std::vector<double> dk(kernel.size()), db(bias.size());
    const double ts = time_best_of(repeats, [&] {
      std::fill(dk.begin(), dk.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);
      hypermv::kernels::ref::conv2d_backward_kernel(out.data(), in.data(), dk.data(), db.data(), d);
    });
    const double tp = time_best_of(repeats, [&] {
      std::fill(dk.begin(), dk.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);
      hypermv::kernels::conv2d_backward_kernel(out.data(), in.data(), dk.data(), db.data(), d);
    });
    report("conv2d bwd-kernel", ts, tp);
  }
  return 0;
}
