// Compiled with -mavx2. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "mtrd/simd/kernels.hpp"

namespace mtrd::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  double acc = 0.0;
  if (n >= 8) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
      a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
      a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    }
    acc = hsum(_mm256_add_pd(a0, a1));
  }
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  double acc = 0.0;
  if (n >= 4) {
    __m256d a = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
      a = _mm256_add_pd(a, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    acc = hsum(a);
  }
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double max_abs_diff_avx2(const double* x, const double* y, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    m = _mm256_max_pd(m, _mm256_andnot_pd(sign, d));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = 0.0;
  for (double v : lanes) r = v > r ? v : r;
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > r) r = d;
  }
  return r;
}

void multiply_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_avx2(const double* x, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
  }
  for (; i < n; ++i) out[i] = x[i] * s;
}

constexpr KernelTable kAvx2{Isa::Avx2,         sum_avx2,      dot_avx2,
                            max_abs_diff_avx2, multiply_avx2, scale_avx2};

}  // namespace

const KernelTable& avx2_kernels_table() { return kAvx2; }

}  // namespace mtrd::simd
