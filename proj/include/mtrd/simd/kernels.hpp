#pragma once

// Dense double-precision kernels used by the probability calculus.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2 on
// x86-64, NEON on AArch64) are compiled in separate translation units and
// selected once at runtime; set MTRD_SIMD=scalar to force the reference path.
// Reductions may differ from the scalar path by rounding only; elementwise
// kernels are bit-identical across variants.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mtrd::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*max_abs_diff)(const double* x, const double* y, std::size_t n);
  void (*multiply)(const double* x, const double* y, double* out, std::size_t n);
  void (*scale)(const double* x, double s, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

// Variants compiled into this build whose ISA the running CPU supports.
// The scalar table is always first.
std::vector<const KernelTable*> available_kernels();

// Table used by the library; resolved on first call.
const KernelTable& active_kernels();

inline double sum(std::span<const double> x) {
  return active_kernels().sum(x.data(), x.size());
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active_kernels().dot(x.data(), y.data(), x.size());
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  return active_kernels().max_abs_diff(x.data(), y.data(), x.size());
}

inline void multiply(std::span<const double> x, std::span<const double> y,
                     std::span<double> out) {
  active_kernels().multiply(x.data(), y.data(), out.data(), out.size());
}

inline void scale(std::span<const double> x, double s, std::span<double> out) {
  active_kernels().scale(x.data(), s, out.data(), out.size());
}

}  // namespace mtrd::simd
