#include "mtrd/feasibility.hpp"

#include <algorithm>
#include <cmath>

#include "mtrd/error.hpp"
#include "mtrd/simd/kernels.hpp"
#include "mtrd/spectral.hpp"

namespace mtrd {
namespace {

// Worst lambda_i over i = 2..min(|X1|, |X2|) of an unnormalized x1-by-x2 block.
double worst_lambda(const Eigen::MatrixXd& block, std::size_t i_max) {
  if (i_max < 2) return 0.0;
  const Spectrum s = singular_spectrum(tilde(block));
  // Spectrum is descending, so lambda_2 dominates every later index.
  return s.lambda(2);
}

Eigen::MatrixXd block_from(std::span<const double> flat, std::size_t rows, std::size_t cols) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(flat.data(), static_cast<Eigen::Index>(rows),
                                    static_cast<Eigen::Index>(cols));
}

}  // namespace

std::string_view set_name(SetId id) {
  switch (id) {
    case SetId::In: return "in";
    case SetId::Out1: return "out1";
    case SetId::Out3: return "out3";
    case SetId::Cap13: return "cap13";
  }
  return "?";
}

SetId parse_set(std::string_view name) {
  if (name == "in") return SetId::In;
  if (name == "out1") return SetId::Out1;
  if (name == "out3") return SetId::Out3;
  if (name == "cap13") return SetId::Cap13;
  throw Error("unknown set id '" + std::string(name) + "' (expected in, out1, out3 or cap13)");
}

double SpectralMargins::worst() const {
  return std::min({unconditional, given_u, given_v, given_uv});
}

double markov_defect(const ProbTensor& t, const AxisList& a, const AxisList& b, const AxisList& c) {
  const Kernel c_given_ab = conditional(t, c, [&] {
    AxisList ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    return ab;
  }());
  const Kernel c_given_b = conditional(t, c, b);
  const std::size_t b_count = c_given_b.given_count();
  double defect = 0.0;
  const ProbTensor ab_marg = [&] {
    AxisList ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    return marginal(t, ab);
  }();
  for (std::size_t g = 0; g < c_given_ab.given_count(); ++g) {
    if (ab_marg.values()[g] <= kSliceMassFloor) continue;
    const std::size_t bi = g % b_count;
    defect = std::max(defect, simd::max_abs_diff(c_given_ab.slice(g), c_given_b.slice(bi)));
  }
  return defect;
}

MembershipReport in_S_in(const AuxChannel& ch, double tolerance) {
  const ChannelSizes& s = ch.sizes();
  // Source-free factorization target: v-averaged p(x1|u,v) and u-averaged p(x2|u,v).
  std::vector<double> a(s.u * s.x1, 0.0), b(s.v * s.x2, 0.0);
  for (std::size_t u = 0; u < s.u; ++u) {
    for (std::size_t v = 0; v < s.v; ++v) {
      for (std::size_t i = 0; i < s.x1; ++i) {
        for (std::size_t j = 0; j < s.x2; ++j) {
          const double p = ch(u, v, i, j);
          a[u * s.x1 + i] += p / static_cast<double>(s.v);
          b[v * s.x2 + j] += p / static_cast<double>(s.u);
        }
      }
    }
  }
  std::vector<double> prod(s.slice_size());
  double defect = 0.0;
  for (std::size_t u = 0; u < s.u; ++u) {
    for (std::size_t v = 0; v < s.v; ++v) {
      for (std::size_t i = 0; i < s.x1; ++i) {
        simd::scale(std::span<const double>(b).subspan(v * s.x2, s.x2), a[u * s.x1 + i],
                    std::span<double>(prod).subspan(i * s.x2, s.x2));
      }
      defect = std::max(defect, simd::max_abs_diff(ch.slice(u, v), prod));
    }
  }
  return {SetId::In, defect <= tolerance, defect, tolerance, std::nullopt};
}

MembershipReport in_S_out1(const AuxChannel& ch, double tolerance) {
  const ChannelSizes& s = ch.sizes();
  // x1_marg[u][v][x1] = p(x1|u,v); x2_marg[u][v][x2] = p(x2|u,v).
  std::vector<double> x1_marg(s.u * s.v * s.x1, 0.0), x2_marg(s.u * s.v * s.x2, 0.0);
  for (std::size_t u = 0; u < s.u; ++u) {
    for (std::size_t v = 0; v < s.v; ++v) {
      for (std::size_t i = 0; i < s.x1; ++i) {
        for (std::size_t j = 0; j < s.x2; ++j) {
          const double p = ch(u, v, i, j);
          x1_marg[(u * s.v + v) * s.x1 + i] += p;
          x2_marg[(u * s.v + v) * s.x2 + j] += p;
        }
      }
    }
  }
  double defect = 0.0;
  // p(x1|u,v) must not depend on v.
  for (std::size_t u = 0; u < s.u; ++u) {
    for (std::size_t v = 1; v < s.v; ++v) {
      for (std::size_t w = 0; w < v; ++w) {
        defect = std::max(defect, simd::max_abs_diff(
                                      std::span<const double>(x1_marg).subspan((u * s.v + v) * s.x1, s.x1),
                                      std::span<const double>(x1_marg).subspan((u * s.v + w) * s.x1, s.x1)));
      }
    }
  }
  // p(x2|u,v) must not depend on u.
  for (std::size_t v = 0; v < s.v; ++v) {
    for (std::size_t u = 1; u < s.u; ++u) {
      for (std::size_t w = 0; w < u; ++w) {
        defect = std::max(defect, simd::max_abs_diff(
                                      std::span<const double>(x2_marg).subspan((u * s.v + v) * s.x2, s.x2),
                                      std::span<const double>(x2_marg).subspan((w * s.v + v) * s.x2, s.x2)));
      }
    }
  }
  return {SetId::Out1, defect <= tolerance, defect, tolerance, std::nullopt};
}

SpectralMargins spectral_margins(const AuxChannel& ch, const SourceModel& src) {
  const ChannelSizes& s = ch.sizes();
  const ProbTensor joint = join(src.joint, ch);
  const std::span<const double> p = joint.values();  // [u][v][x1][x2]
  const std::size_t block = s.slice_size();
  const std::size_t i_max = std::min(s.x1, s.x2);

  SpectralMargins m;
  m.lambda2_uv = maximal_correlation(src.joint);

  std::vector<double> acc(block, 0.0);
  std::vector<double> per_u(s.u * block, 0.0), per_v(s.v * block, 0.0);
  for (std::size_t u = 0; u < s.u; ++u) {
    for (std::size_t v = 0; v < s.v; ++v) {
      const auto cell = p.subspan((u * s.v + v) * block, block);
      for (std::size_t k = 0; k < block; ++k) {
        acc[k] += cell[k];
        per_u[u * block + k] += cell[k];
        per_v[v * block + k] += cell[k];
      }
    }
  }

  m.unconditional = m.lambda2_uv - worst_lambda(block_from(acc, s.x1, s.x2), i_max);

  double worst = 0.0;
  for (std::size_t u = 0; u < s.u; ++u) {
    const auto slice = std::span<const double>(per_u).subspan(u * block, block);
    if (simd::sum(slice) < kSliceMassFloor) {
      ++m.skipped_slices;
      continue;
    }
    worst = std::max(worst, worst_lambda(block_from(slice, s.x1, s.x2), i_max));
  }
  m.given_u = m.lambda2_uv - worst;

  worst = 0.0;
  for (std::size_t v = 0; v < s.v; ++v) {
    const auto slice = std::span<const double>(per_v).subspan(v * block, block);
    if (simd::sum(slice) < kSliceMassFloor) {
      ++m.skipped_slices;
      continue;
    }
    worst = std::max(worst, worst_lambda(block_from(slice, s.x1, s.x2), i_max));
  }
  m.given_v = m.lambda2_uv - worst;

  worst = 0.0;
  for (std::size_t uv = 0; uv < s.u * s.v; ++uv) {
    if (src.joint.values()[uv] < kSliceMassFloor) {
      ++m.skipped_slices;
      continue;
    }
    worst = std::max(worst, worst_lambda(block_from(ch.values().subspan(uv * block, block), s.x1, s.x2),
                                         i_max));
  }
  m.given_uv = m.lambda2_uv - worst;
  return m;
}

MembershipReport in_S_out3(const AuxChannel& ch, const SourceModel& src, double tolerance) {
  if (ch.sizes().u != src.u_size() || ch.sizes().v != src.v_size()) {
    throw Error("channel and source alphabet sizes differ");
  }
  const SpectralMargins m = spectral_margins(ch, src);
  const double defect = std::max(0.0, -m.worst());
  return {SetId::Out3, defect <= tolerance, defect, tolerance, m};
}

MembershipReport in_intersection(const AuxChannel& ch, const SourceModel& src, double tolerance) {
  const MembershipReport markov = in_S_out1(ch, tolerance);
  MembershipReport spectral = in_S_out3(ch, src, tolerance);
  spectral.set = SetId::Cap13;
  spectral.defect = std::max(markov.defect, spectral.defect);
  spectral.accepted = markov.accepted && spectral.accepted;
  return spectral;
}

MembershipReport check_membership(SetId set, const AuxChannel& ch, const SourceModel& src,
                                  double tolerance) {
  switch (set) {
    case SetId::In: return in_S_in(ch, tolerance);
    case SetId::Out1: return in_S_out1(ch, tolerance);
    case SetId::Out3: return in_S_out3(ch, src, tolerance);
    case SetId::Cap13: return in_intersection(ch, src, tolerance);
  }
  throw Error("unknown set id");
}

}  // namespace mtrd
