#pragma once

// Small random-instance generators for property tests. Everything is driven
// by an explicit std::mt19937_64 so failures can be replayed from the seed.

#include <random>
#include <string>
#include <vector>

#include "mtrd/channel.hpp"
#include "mtrd/probkit.hpp"

namespace gen {

inline std::vector<double> simplex(std::size_t n, std::mt19937_64& rng, double zero_prob = 0.0) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution drop(zero_prob);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) total += x = drop(rng) ? 0.0 : e(rng);
  if (total == 0.0) {
    p[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

inline std::size_t size_in(std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline mtrd::ProbTensor joint(const mtrd::AxisList& axes, const std::vector<std::size_t>& sizes,
                              std::mt19937_64& rng, double zero_prob = 0.0) {
  std::size_t n = 1;
  for (auto s : sizes) n *= s;
  return mtrd::ProbTensor(axes, sizes, simplex(n, rng, zero_prob), 1e-9);
}

// Row-stochastic matrix [rows][cols].
inline std::vector<double> kernel(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double zero_prob = 0.0) {
  std::vector<double> k;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = simplex(cols, rng, zero_prob);
    k.insert(k.end(), row.begin(), row.end());
  }
  return k;
}

// p(x) p(y|x) p(z|y) over axes (X, Y, Z).
inline mtrd::ProbTensor markov_triple(std::size_t nx, std::size_t ny, std::size_t nz, std::mt19937_64& rng,
                                      double zero_prob = 0.0) {
  const auto px = simplex(nx, rng, zero_prob);
  const auto pyx = kernel(nx, ny, rng, zero_prob);
  const auto pzy = kernel(ny, nz, rng, zero_prob);
  std::vector<double> v(nx * ny * nz);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) v[(x * ny + y) * nz + z] = px[x] * pyx[x * ny + y] * pzy[y * nz + z];
  return mtrd::ProbTensor({"X", "Y", "Z"}, {nx, ny, nz}, std::move(v), 1e-9);
}

inline mtrd::AuxChannel product_channel(mtrd::ChannelSizes s, std::mt19937_64& rng, double zero_prob = 0.0) {
  const auto a = kernel(s.u, s.x1, rng, zero_prob);
  const auto b = kernel(s.v, s.x2, rng, zero_prob);
  return mtrd::AuxChannel::product(s, a, b);
}

inline mtrd::AuxChannel free_channel(mtrd::ChannelSizes s, std::mt19937_64& rng, double zero_prob = 0.0) {
  return mtrd::AuxChannel(s, kernel(s.u * s.v, s.slice_size(), rng, zero_prob), 1e-9);
}

// Source with Hamming distortion on random alphabets.
inline mtrd::SourceModel source(std::size_t nu, std::size_t nv, std::mt19937_64& rng, double zero_prob = 0.0) {
  return mtrd::SourceModel(joint({"U", "V"}, {nu, nv}, rng, zero_prob), mtrd::hamming_distortion(nu, nu),
                           mtrd::hamming_distortion(nv, nv));
}

// Fixed asymmetric 3x3 source used across suites.
inline mtrd::SourceModel asymmetric3() {
  std::vector<double> p{0.20, 0.05, 0.03, 0.04, 0.25, 0.06, 0.02, 0.10, 0.25};
  return mtrd::SourceModel(mtrd::ProbTensor({"U", "V"}, {3, 3}, p), mtrd::hamming_distortion(3, 3),
                           mtrd::hamming_distortion(3, 3));
}

}  // namespace gen
