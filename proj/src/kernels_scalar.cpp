#include <cmath>
#include <cstring>

#include "iotprint/kernels.hpp"

namespace iotprint::kern {
namespace scalar {

void gemm(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    double* c_row = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double av = a_row[p];
      const double* b_row = b + p * n;
      for (size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  }
}

void gemm_at_b(const double* a, const double* b, double* c, size_t k, size_t m, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (size_t p = 0; p < k; ++p) {
    const double* a_row = a + p * m;
    const double* b_row = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const double av = a_row[i];
      double* c_row = c + i * n;
      for (size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
  }
}

void gemm_a_bt(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    double* c_row = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* b_row = b + j * k;
      double acc = 0.0;
      for (size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      c_row[j] = acc;
    }
  }
}

void add_bias(double* x, const double* bias, size_t rows, size_t cols) {
  for (size_t r = 0; r < rows; ++r) {
    double* row = x + r * cols;
    for (size_t c = 0; c < cols; ++c) row[c] += bias[c];
  }
}

void relu(double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* pre, double* grad, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (pre[i] <= 0.0) grad[i] = 0.0;
  }
}

void col_sums(const double* x, double* out, size_t rows, size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  for (size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    for (size_t c = 0; c < cols; ++c) out[c] += row[c];
  }
}

void adam_update(double* param, double* m, double* v, const double* grad, size_t n, double lr,
                 double beta1, double beta2, double eps, double one_minus_b1t,
                 double one_minus_b2t) {
  for (size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double m_hat = m[i] / one_minus_b1t;
    const double v_hat = v[i] / one_minus_b2t;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace scalar

const Kernels& scalar_kernels() {
  static const Kernels k = {
      "scalar",         scalar::gemm,      scalar::gemm_at_b, scalar::gemm_a_bt,
      scalar::add_bias, scalar::relu,      scalar::relu_backward,
      scalar::col_sums, scalar::adam_update,
  };
  return k;
}

}  // namespace iotprint::kern
