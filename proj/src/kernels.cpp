#include "hypermv/kernels.hpp"

#include <cstring>

namespace hypermv::kernels {

namespace {
inline std::size_t idx4(int a, int b, int c, int d, int db, int dc, int dd) {
  return ((static_cast<std::size_t>(a) * db + b) * dc + c) * dd + d;
}
}  // namespace

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 16384)
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_acc_at_b(const double* a, const double* dc, double* db, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 16384)
  for (int p = 0; p < k; ++p) {
    double* dbrow = db + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = a[static_cast<std::size_t>(i) * k + p];
      const double* dcrow = dc + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

void matmul_acc_a_bt(const double* dc, const double* b, double* da, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * n * k > 16384)
  for (int i = 0; i < m; ++i) {
    double* darow = da + static_cast<std::size_t>(i) * k;
    const double* dcrow = dc + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<std::size_t>(p) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[p] += acc;
    }
  }
}

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int co = 0; co < d.cout; ++co) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          double acc = bias ? bias[co] : 0.0;
          for (int ci = 0; ci < d.cin; ++ci) {
            for (int a = 0; a < d.kh; ++a) {
              const int iy = y * d.stride + a - d.pad;
              if (iy < 0 || iy >= d.h) continue;
              for (int b = 0; b < d.kw; ++b) {
                const int ix = x * d.stride + b - d.pad;
                if (ix < 0 || ix >= d.w) continue;
                acc += kernel[idx4(co, ci, a, b, d.cin, d.kh, d.kw)] *
                       in[idx4(n, ci, iy, ix, d.cin, d.h, d.w)];
              }
            }
          }
          out[idx4(n, co, y, x, d.cout, oh, ow)] = acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const double* dout, const double* kernel, double* din,
                           const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  // Gather form: each input element collects every output it contributed to,
  // stepping only over kernel taps aligned with the stride.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int ci = 0; ci < d.cin; ++ci) {
      for (int iy = 0; iy < d.h; ++iy) {
        const int ty = iy + d.pad;
        for (int ix = 0; ix < d.w; ++ix) {
          const int tx = ix + d.pad;
          double acc = 0.0;
          for (int a = ty % d.stride; a < d.kh && a <= ty; a += d.stride) {
            const int y = (ty - a) / d.stride;
            if (y >= oh) continue;
            for (int b = tx % d.stride; b < d.kw && b <= tx; b += d.stride) {
              const int x = (tx - b) / d.stride;
              if (x >= ow) continue;
              for (int co = 0; co < d.cout; ++co)
                acc += kernel[idx4(co, ci, a, b, d.cin, d.kh, d.kw)] *
                       dout[idx4(n, co, y, x, d.cout, oh, ow)];
            }
          }
          din[idx4(n, ci, iy, ix, d.cin, d.h, d.w)] += acc;
        }
      }
    }
  }
}

void conv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                            double* dbias, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < d.cout; ++co) {
    for (int ci = 0; ci < d.cin; ++ci) {
      for (int a = 0; a < d.kh; ++a) {
        for (int b = 0; b < d.kw; ++b) {
          double acc = 0.0;
          for (int n = 0; n < d.n; ++n) {
            for (int y = 0; y < oh; ++y) {
              const int iy = y * d.stride + a - d.pad;
              if (iy < 0 || iy >= d.h) continue;
              for (int x = 0; x < ow; ++x) {
                const int ix = x * d.stride + b - d.pad;
                if (ix < 0 || ix >= d.w) continue;
                acc += dout[idx4(n, co, y, x, d.cout, oh, ow)] *
                       in[idx4(n, ci, iy, ix, d.cin, d.h, d.w)];
              }
            }
          }
          dkernel[idx4(co, ci, a, b, d.cin, d.kh, d.kw)] += acc;
        }
      }
    }
  }
  if (dbias) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < d.cout; ++co) {
      double acc = 0.0;
      for (int n = 0; n < d.n; ++n)
        for (int y = 0; y < oh; ++y)
          for (int x = 0; x < ow; ++x) acc += dout[idx4(n, co, y, x, d.cout, oh, ow)];
      dbias[co] += acc;
    }
  }
}

namespace ref {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p)
        acc += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
}

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  // Scatter form: walk the input and push contributions into the output.
  for (int n = 0; n < d.n; ++n)
    for (int co = 0; co < d.cout; ++co)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
          out[idx4(n, co, y, x, d.cout, oh, ow)] = bias ? bias[co] : 0.0;
  for (int n = 0; n < d.n; ++n) {
    for (int ci = 0; ci < d.cin; ++ci) {
      for (int iy = 0; iy < d.h; ++iy) {
        for (int ix = 0; ix < d.w; ++ix) {
          const double v = in[idx4(n, ci, iy, ix, d.cin, d.h, d.w)];
          for (int a = 0; a < d.kh; ++a) {
            const int ty = iy + d.pad - a;
            if (ty < 0 || ty % d.stride != 0) continue;
            const int y = ty / d.stride;
            if (y >= oh) continue;
            for (int b = 0; b < d.kw; ++b) {
              const int tx = ix + d.pad - b;
              if (tx < 0 || tx % d.stride != 0) continue;
              const int x = tx / d.stride;
              if (x >= ow) continue;
              for (int co = 0; co < d.cout; ++co)
                out[idx4(n, co, y, x, d.cout, oh, ow)] +=
                    v * kernel[idx4(co, ci, a, b, d.cin, d.kh, d.kw)];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const double* dout, const double* kernel, double* din,
                           const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  // Scatter form, transposed from the forward definition.
  for (int n = 0; n < d.n; ++n)
    for (int co = 0; co < d.cout; ++co)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          const double g = dout[idx4(n, co, y, x, d.cout, oh, ow)];
          for (int ci = 0; ci < d.cin; ++ci)
            for (int a = 0; a < d.kh; ++a) {
              const int iy = y * d.stride + a - d.pad;
              if (iy < 0 || iy >= d.h) continue;
              for (int b = 0; b < d.kw; ++b) {
                const int ix = x * d.stride + b - d.pad;
                if (ix < 0 || ix >= d.w) continue;
                din[idx4(n, ci, iy, ix, d.cin, d.h, d.w)] +=
                    g * kernel[idx4(co, ci, a, b, d.cin, d.kh, d.kw)];
              }
            }
        }
}

void conv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                            double* dbias, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  for (int n = 0; n < d.n; ++n)
    for (int co = 0; co < d.cout; ++co)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          const double g = dout[idx4(n, co, y, x, d.cout, oh, ow)];
          if (dbias) dbias[co] += g;
          for (int ci = 0; ci < d.cin; ++ci)
            for (int a = 0; a < d.kh; ++a) {
              const int iy = y * d.stride + a - d.pad;
              if (iy < 0 || iy >= d.h) continue;
              for (int b = 0; b < d.kw; ++b) {
                const int ix = x * d.stride + b - d.pad;
                if (ix < 0 || ix >= d.w) continue;
                dkernel[idx4(co, ci, a, b, d.cin, d.kh, d.kw)] +=
                    g * in[idx4(n, ci, iy, ix, d.cin, d.h, d.w)];
              }
            }
        }
}

}  // namespace ref

}  // namespace hypermv::kernels
