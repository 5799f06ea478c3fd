// AVX2/FMA variants of the network kernels. This translation unit is compiled
// with -mavx2 -mfma; nothing here may run unless avx2_supported() is true.

#include "iotprint/kernels.hpp"

#if defined(IOTPRINT_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace iotprint::kern {
namespace avx2 {

void gemm(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  const size_t n4 = n & ~size_t(3);
  for (size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    double* c_row = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(a_row[p]);
      const double* b_row = b + p * n;
      size_t j = 0;
      for (; j < n4; j += 4) {
        const __m256d bv = _mm256_loadu_pd(b_row + j);
        const __m256d cv = _mm256_loadu_pd(c_row + j);
        _mm256_storeu_pd(c_row + j, _mm256_fmadd_pd(av, bv, cv));
      }
      const double as = a_row[p];
      for (; j < n; ++j) c_row[j] = std::fma(as, b_row[j], c_row[j]);
    }
  }
}

void gemm_at_b(const double* a, const double* b, double* c, size_t k, size_t m, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  const size_t n4 = n & ~size_t(3);
  for (size_t p = 0; p < k; ++p) {
    const double* a_row = a + p * m;
    const double* b_row = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const __m256d av = _mm256_set1_pd(a_row[i]);
      double* c_row = c + i * n;
      size_t j = 0;
      for (; j < n4; j += 4) {
        const __m256d bv = _mm256_loadu_pd(b_row + j);
        const __m256d cv = _mm256_loadu_pd(c_row + j);
        _mm256_storeu_pd(c_row + j, _mm256_fmadd_pd(av, bv, cv));
      }
      const double as = a_row[i];
      for (; j < n; ++j) c_row[j] = std::fma(as, b_row[j], c_row[j]);
    }
  }
}

void gemm_a_bt(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  const size_t k4 = k & ~size_t(3);
  for (size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    double* c_row = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* b_row = b + j * k;
      __m256d acc = _mm256_setzero_pd();
      size_t p = 0;
      for (; p < k4; p += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a_row + p), _mm256_loadu_pd(b_row + p), acc);
      }
      __m128d lo = _mm256_castpd256_pd128(acc);
      __m128d hi = _mm256_extractf128_pd(acc, 1);
      lo = _mm_add_pd(lo, hi);
      double sum = _mm_cvtsd_f64(_mm_hadd_pd(lo, lo));
      for (; p < k; ++p) sum = std::fma(a_row[p], b_row[p], sum);
      c_row[j] = sum;
    }
  }
}

void add_bias(double* x, const double* bias, size_t rows, size_t cols) {
  const size_t c4 = cols & ~size_t(3);
  for (size_t r = 0; r < rows; ++r) {
    double* row = x + r * cols;
    size_t c = 0;
    for (; c < c4; c += 4) {
      _mm256_storeu_pd(row + c, _mm256_add_pd(_mm256_loadu_pd(row + c), _mm256_loadu_pd(bias + c)));
    }
    for (; c < cols; ++c) row[c] += bias[c];
  }
}

void relu(double* x, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const size_t n4 = n & ~size_t(3);
  size_t i = 0;
  for (; i < n4; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* pre, double* grad, size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const size_t n4 = n & ~size_t(3);
  size_t i = 0;
  for (; i < n4; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(grad + i, _mm256_and_pd(_mm256_loadu_pd(grad + i), mask));
  }
  for (; i < n; ++i) {
    if (pre[i] <= 0.0) grad[i] = 0.0;
  }
}

void col_sums(const double* x, double* out, size_t rows, size_t cols) {
  std::memset(out, 0, cols * sizeof(double));
  const size_t c4 = cols & ~size_t(3);
  for (size_t r = 0; r < rows; ++r) {
    const double* row = x + r * cols;
    size_t c = 0;
    for (; c < c4; c += 4) {
      _mm256_storeu_pd(out + c, _mm256_add_pd(_mm256_loadu_pd(out + c), _mm256_loadu_pd(row + c)));
    }
    for (; c < cols; ++c) out[c] += row[c];
  }
}

void adam_update(double* param, double* m, double* v, const double* grad, size_t n, double lr,
                 double beta1, double beta2, double eps, double one_minus_b1t,
                 double one_minus_b2t) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d v1mb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d v1mb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vc1 = _mm256_set1_pd(one_minus_b1t);
  const __m256d vc2 = _mm256_set1_pd(one_minus_b2t);
  const size_t n4 = n & ~size_t(3);
  size_t i = 0;
  for (; i < n4; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_fmadd_pd(vb1, _mm256_loadu_pd(m + i), _mm256_mul_pd(v1mb1, g));
    const __m256d vi =
        _mm256_fmadd_pd(vb2, _mm256_loadu_pd(v + i), _mm256_mul_pd(v1mb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, vc1);
    const __m256d v_hat = _mm256_div_pd(vi, vc2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, m_hat), denom);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double m_hat = m[i] / one_minus_b1t;
    const double v_hat = v[i] / one_minus_b2t;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace avx2

const Kernels& avx2_kernels() {
  static const Kernels k = {
      "avx2",         avx2::gemm,      avx2::gemm_at_b, avx2::gemm_a_bt,
      avx2::add_bias, avx2::relu,      avx2::relu_backward,
      avx2::col_sums, avx2::adam_update,
  };
  return k;
}

}  // namespace iotprint::kern

#endif  // IOTPRINT_HAVE_AVX2
