#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace mtrd {

// FNV-1a over raw bytes; stable across runs and platforms with IEEE doubles.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void doubles(std::span<const double> xs) {
    for (double x : xs) {
      if (x == 0.0) x = 0.0;  // fold -0.0
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      bytes(&bits, sizeof bits);
    }
  }
  void u64(std::uint64_t x) { bytes(&x, sizeof x); }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

}  // namespace mtrd
