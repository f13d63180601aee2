// AArch64 only; NEON is part of the base ISA there.

#include <arm_neon.h>

#include <cmath>

#include "mtrd/simd/kernels.hpp"

namespace mtrd::simd {
namespace {

double sum_neon(const double* x, std::size_t n) {
  std::size_t i = 0;
  double acc = 0.0;
  if (n >= 4) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    for (; i + 4 <= n; i += 4) {
      a0 = vaddq_f64(a0, vld1q_f64(x + i));
      a1 = vaddq_f64(a1, vld1q_f64(x + i + 2));
    }
    acc = vaddvq_f64(vaddq_f64(a0, a1));
  }
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  double acc = 0.0;
  if (n >= 2) {
    float64x2_t a = vdupq_n_f64(0.0);
    for (; i + 2 <= n; i += 2) a = vaddq_f64(a, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    acc = vaddvq_f64(a);
  }
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double max_abs_diff_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabdq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > r) r = d;
  }
  return r;
}

void multiply_neon(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_neon(const double* x, double s, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_n_f64(vld1q_f64(x + i), s));
  for (; i < n; ++i) out[i] = x[i] * s;
}

constexpr KernelTable kNeon{Isa::Neon,         sum_neon,      dot_neon,
                            max_abs_diff_neon, multiply_neon, scale_neon};

}  // namespace

const KernelTable& neon_kernels_table() { return kNeon; }

}  // namespace mtrd::simd
