#pragma once

#include <cstddef>

namespace hypermv::kernels {

// OpenMP-parallel dense kernels. Each output element is produced by exactly
// one thread with a fixed inner summation order, so results are identical
// for any thread count (including 1) and match the serial reference up to
// summation-order rounding.

struct Conv2dDims {
  int n;             // batch
  int cin, cout;     // channels
  int h, w;          // input spatial
  int kh, kw;        // kernel spatial
  int stride, pad;   // shared by both axes
  int out_h() const { return (h + 2 * pad - kh) / stride + 1; }
  int out_w() const { return (w + 2 * pad - kw) / stride + 1; }
};

// C[m,n] = A[m,k] * B[k,n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
// C[k,n] += A[m,k]^T * dC[m,n]   (gradient w.r.t. B)
void matmul_acc_at_b(const double* a, const double* dc, double* db, int m, int k, int n);
// C[m,k] += dC[m,n] * B[k,n]^T   (gradient w.r.t. A)
void matmul_acc_a_bt(const double* dc, const double* b, double* da, int m, int k, int n);

// out[n,co,ho,wo] = bias[co] + sum_{ci,a,b} K[co,ci,a,b] * in[n,ci,ho*s+a-p, wo*s+b-p]
void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d);
void conv2d_backward_input(const double* dout, const double* kernel, double* din,
                           const Conv2dDims& d);
void conv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                            double* dbias, const Conv2dDims& d);

namespace ref {

// Serial reference implementations, written as directly as possible from the
// operation definitions. Kept for unit tests and the kernel benchmark.

void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, const Conv2dDims& d);
void conv2d_backward_input(const double* dout, const double* kernel, double* din,
                           const Conv2dDims& d);
void conv2d_backward_kernel(const double* dout, const double* in, double* dkernel,
                            double* dbias, const Conv2dDims& d);

}  // namespace ref

}  // namespace hypermv::kernels
