#include <cmath>

#include "mtrd/simd/kernels.hpp"

namespace mtrd::simd {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double max_abs_diff_scalar(const double* x, const double* y, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > m) m = d;
  }
  return m;
}

void multiply_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_scalar(const double* x, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * s;
}

constexpr KernelTable kScalar{Isa::Scalar,         sum_scalar,      dot_scalar,
                              max_abs_diff_scalar, multiply_scalar, scale_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace mtrd::simd
