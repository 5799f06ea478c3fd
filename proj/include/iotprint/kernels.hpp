#pragma once

#include <cstddef>

namespace iotprint::kern {

// Data-parallel inner loops of the network engine, double precision.
// Two implementations share this table: a scalar reference and an AVX2/FMA
// variant compiled only where the flags exist. active() picks one at startup
// from CPU features; IOTPRINT_KERNEL=scalar|avx2 overrides the choice.
//
// All gemm variants overwrite C. Accumulation over k runs in ascending order
// in every implementation, so scalar and AVX2 results differ only by FMA
// rounding (equivalence-tested in kernels_test).
struct Kernels {
  const char* name;

  // C (m x n) = A (m x k) * B (k x n), row-major.
  void (*gemm)(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
  // C (m x n) = A^T * B where A is (k x m), B is (k x n).
  void (*gemm_at_b)(const double* a, const double* b, double* c, size_t k, size_t m, size_t n);
  // C (m x n) = A * B^T where A is (m x k), B is (n x k).
  void (*gemm_a_bt)(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);

  // X[r, :] += bias for every row.
  void (*add_bias)(double* x, const double* bias, size_t rows, size_t cols);
  // x = max(x, 0)
  void (*relu)(double* x, size_t n);
  // grad[i] = pre[i] > 0 ? grad[i] : 0
  void (*relu_backward)(const double* pre, double* grad, size_t n);
  // out[c] = sum over rows of X[r, c]
  void (*col_sums)(const double* x, double* out, size_t rows, size_t cols);

  // Adam with bias correction: m and v are running moments, one_minus_b1t =
  // 1 - beta1^t, one_minus_b2t = 1 - beta2^t for the current step t.
  void (*adam_update)(double* param, double* m, double* v, const double* grad, size_t n,
                      double lr, double beta1, double beta2, double eps, double one_minus_b1t,
                      double one_minus_b2t);
};

const Kernels& scalar_kernels();
bool avx2_supported();          // compiled in and the CPU reports AVX2+FMA
const Kernels& avx2_kernels();  // valid only when avx2_supported()

// Selected once per process.
const Kernels& active();

}  // namespace iotprint::kern
