#include <cstdlib>
#include <string>

#include "mtrd/simd/kernels.hpp"

namespace mtrd::simd {

#if defined(MTRD_HAVE_AVX2)
const KernelTable& avx2_kernels_table();
#endif
#if defined(MTRD_HAVE_NEON)
const KernelTable& neon_kernels_table();
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(MTRD_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) out.push_back(&avx2_kernels_table());
#endif
#if defined(MTRD_HAVE_NEON)
  out.push_back(&neon_kernels_table());
#endif
  return out;
}

namespace {

const KernelTable& resolve() {
  const char* forced = std::getenv("MTRD_SIMD");
  const auto tables = available_kernels();
  if (forced != nullptr) {
    const std::string want(forced);
    for (const KernelTable* t : tables) {
      if (isa_name(t->isa) == want) return *t;
    }
    return scalar_kernels();
  }
  return *tables.back();
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace mtrd::simd
