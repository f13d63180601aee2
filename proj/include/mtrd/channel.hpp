#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mtrd/probkit.hpp"

namespace mtrd {

struct ChannelSizes {
  std::size_t u = 0;
  std::size_t v = 0;
  std::size_t x1 = 0;
  std::size_t x2 = 0;

  std::size_t slice_size() const { return x1 * x2; }
  std::size_t total() const { return u * v * x1 * x2; }
  bool operator==(const ChannelSizes&) const = default;
};

// Auxiliary test channel p(x1, x2 | u, v), stored as [u][v][x1][x2].
class AuxChannel {
 public:
  // Every (u, v) slice must be nonnegative and sum to 1 within `tolerance`.
  AuxChannel(ChannelSizes sizes, std::vector<double> values,
             double tolerance = kConstructionTolerance);

  // p(x1, x2 | u, v) = a(x1 | u) b(x2 | v); a is [u][x1], b is [v][x2].
  static AuxChannel product(ChannelSizes sizes, std::span<const double> a, std::span<const double> b);

  // Renormalizes each slice before validation; for values produced by
  // arithmetic that preserves slice sums only up to rounding.
  static AuxChannel normalized(ChannelSizes sizes, std::vector<double> values);

  static AuxChannel from_kernel(const Kernel& k);
  Kernel as_kernel() const;

  const ChannelSizes& sizes() const { return sizes_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> slice(std::size_t u, std::size_t v) const {
    return std::span<const double>(values_).subspan((u * sizes_.v + v) * sizes_.slice_size(),
                                                    sizes_.slice_size());
  }
  double operator()(std::size_t u, std::size_t v, std::size_t x1, std::size_t x2) const {
    return values_[((u * sizes_.v + v) * sizes_.x1 + x1) * sizes_.x2 + x2];
  }

  std::uint64_t fingerprint() const;

 private:
  ChannelSizes sizes_;
  std::vector<double> values_;
};

}  // namespace mtrd
