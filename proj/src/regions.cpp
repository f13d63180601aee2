#include "mtrd/regions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mtrd/error.hpp"
#include "mtrd/hash.hpp"
#include "mtrd/lp.hpp"
#include "mtrd/parallel.hpp"
#include "mtrd/simd/kernels.hpp"

namespace mtrd {

const char* const kCardinalityCaveat =
    "Outer-bound regions (out1, out3, cap13) are computed over auxiliary alphabets of the listed "
    "sizes only. No cardinality bound is known for these sets, so the reported regions are "
    "heuristic under-approximations of the true outer bounds.";

namespace {

constexpr int kIpfMaxIterations = 500;
constexpr double kIpfTolerance = 1e-12;
constexpr int kSpectralAttempts = 64;
constexpr double kInitialStep = 0.25;
constexpr int kFailuresBeforeShrink = 25;

void fill_dirichlet(std::span<double> out, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  double total = 0.0;
  for (double& x : out) {
    x = exp1(rng);
    total += x;
  }
  if (!(total > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return;
  }
  simd::scale(out, 1.0 / total, out);
}

std::size_t pick(std::size_t n, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Two distinct indices in [0, n); requires n >= 2.
std::pair<std::size_t, std::size_t> pick_pair(std::size_t n, std::mt19937_64& rng) {
  const std::size_t i = pick(n, rng);
  std::size_t k = pick(n - 1, rng);
  if (k >= i) ++k;
  return {i, k};
}

bool needs_spectral_check(SetId set) { return set == SetId::Out3 || set == SetId::Cap13; }

// Scales a nonnegative x1-by-x2 block so its row sums equal `rows` and its
// column sums equal `cols`.
bool ipf_couple(std::span<double> block, std::span<const double> rows, std::span<const double> cols) {
  const std::size_t nr = rows.size();
  const std::size_t nc = cols.size();
  for (int it = 0; it < kIpfMaxIterations; ++it) {
    for (std::size_t j = 0; j < nc; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < nr; ++i) s += block[i * nc + j];
      if (s > 0.0) {
        const double f = cols[j] / s;
        for (std::size_t i = 0; i < nr; ++i) block[i * nc + j] *= f;
      } else if (cols[j] > 0.0) {
        return false;
      }
    }
    for (std::size_t i = 0; i < nr; ++i) {
      std::span<double> row = block.subspan(i * nc, nc);
      const double s = simd::sum(row);
      if (s > 0.0) {
        simd::scale(row, rows[i] / s, row);
      } else if (rows[i] > 0.0) {
        return false;
      }
    }
    double err = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < nr; ++i) s += block[i * nc + j];
      err = std::max(err, std::fabs(s - cols[j]));
    }
    if (err <= kIpfTolerance) return true;
  }
  return false;
}

enum class Param { Product, Coupled, Free };

// Search-space coordinates for one set. Product: a(x1|u), b(x2|v).
// Coupled: a, b plus per-(u,v) couplings with those marginals. Free: the
// slices alone.
struct ChannelState {
  Param param = Param::Product;
  ChannelSizes sizes;
  std::vector<double> a;       // [u][x1]
  std::vector<double> b;       // [v][x2]
  std::vector<double> slices;  // [u][v][x1][x2]

  AuxChannel channel() const {
    if (param == Param::Product) {
      auto na = a;
      auto nb = b;
      for (std::size_t u = 0; u < sizes.u; ++u) {
        std::span<double> r(na.data() + u * sizes.x1, sizes.x1);
        simd::scale(r, 1.0 / simd::sum(r), r);
      }
      for (std::size_t v = 0; v < sizes.v; ++v) {
        std::span<double> r(nb.data() + v * sizes.x2, sizes.x2);
        simd::scale(r, 1.0 / simd::sum(r), r);
      }
      return AuxChannel::product(sizes, na, nb);
    }
    return AuxChannel::normalized(sizes, slices);
  }

  std::span<double> slice(std::size_t u, std::size_t v) {
    return std::span<double>(slices).subspan((u * sizes.v + v) * sizes.slice_size(), sizes.slice_size());
  }
};

Param param_for(SetId set) {
  switch (set) {
    case SetId::In: return Param::Product;
    case SetId::Out1:
    case SetId::Cap13: return Param::Coupled;
    case SetId::Out3: return Param::Free;
  }
  return Param::Free;
}

ChannelState state_from_channel(SetId set, const AuxChannel& ch) {
  ChannelState st;
  st.param = param_for(set);
  st.sizes = ch.sizes();
  const ChannelSizes& s = st.sizes;
  st.a.assign(s.u * s.x1, 0.0);
  st.b.assign(s.v * s.x2, 0.0);
  for (std::size_t u = 0; u < s.u; ++u) {
    for (std::size_t v = 0; v < s.v; ++v) {
      for (std::size_t i = 0; i < s.x1; ++i) {
        for (std::size_t j = 0; j < s.x2; ++j) {
          const double p = ch(u, v, i, j);
          st.a[u * s.x1 + i] += p / static_cast<double>(s.v);
          st.b[v * s.x2 + j] += p / static_cast<double>(s.u);
        }
      }
    }
  }
  if (st.param != Param::Product) st.slices.assign(ch.values().begin(), ch.values().end());
  return st;
}

ChannelState sample_product_state(ChannelSizes s, std::mt19937_64& rng) {
  ChannelState st;
  st.param = Param::Product;
  st.sizes = s;
  st.a.resize(s.u * s.x1);
  st.b.resize(s.v * s.x2);
  for (std::size_t u = 0; u < s.u; ++u) fill_dirichlet(std::span<double>(st.a).subspan(u * s.x1, s.x1), rng);
  for (std::size_t v = 0; v < s.v; ++v) fill_dirichlet(std::span<double>(st.b).subspan(v * s.x2, s.x2), rng);
  return st;
}

ChannelState sample_coupled_state(ChannelSizes s, std::mt19937_64& rng, SamplerStats* stats) {
  for (;;) {
    ChannelState st = sample_product_state(s, rng);
    st.param = Param::Coupled;
    st.slices.resize(s.total());
    bool ok = true;
    for (std::size_t u = 0; u < s.u && ok; ++u) {
      for (std::size_t v = 0; v < s.v && ok; ++v) {
        std::span<double> block = st.slice(u, v);
        fill_dirichlet(block, rng);
        ok = ipf_couple(block, std::span<const double>(st.a).subspan(u * s.x1, s.x1),
                        std::span<const double>(st.b).subspan(v * s.x2, s.x2));
      }
    }
    if (ok) return st;
    if (stats) ++stats->ipf_resamples;
  }
}

ChannelState sample_free_state(ChannelSizes s, std::mt19937_64& rng) {
  ChannelState st;
  st.param = Param::Free;
  st.sizes = s;
  st.slices.resize(s.total());
  for (std::size_t uv = 0; uv < s.u * s.v; ++uv) {
    fill_dirichlet(std::span<double>(st.slices).subspan(uv * s.slice_size(), s.slice_size()), rng);
  }
  return st;
}

ChannelState as_param(ChannelState st, Param p) {
  if (st.param == p) return st;
  if (st.param == Param::Product) {
    st.slices.assign(st.channel().values().begin(), st.channel().values().end());
  }
  st.param = p;
  return st;
}

ChannelState sample_state(SetId set, const SourceModel& src, ChannelSizes s, std::mt19937_64& rng,
                          double tolerance, SamplerStats* stats) {
  switch (set) {
    case SetId::In: return sample_product_state(s, rng);
    case SetId::Out1: return sample_coupled_state(s, rng, stats);
    case SetId::Out3:
    case SetId::Cap13: {
      for (int attempt = 0; attempt < kSpectralAttempts; ++attempt) {
        ChannelState st = (set == SetId::Out3 && std::bernoulli_distribution(0.5)(rng))
                              ? sample_free_state(s, rng)
                              : sample_coupled_state(s, rng, stats);
        st = as_param(std::move(st), param_for(set));
        if (in_S_out3(st.channel(), src, tolerance).accepted) return st;
        if (stats) ++stats->spectral_rejections;
      }
      // Product channels satisfy the spectral conditions; fall back to one.
      if (stats) ++stats->fallbacks;
      for (int attempt = 0; attempt < kSpectralAttempts; ++attempt) {
        ChannelState st = as_param(sample_product_state(s, rng), param_for(set));
        if (in_S_out3(st.channel(), src, tolerance).accepted) return st;
      }
      ChannelState trivial;
      trivial.sizes = s;
      trivial.a.assign(s.u * s.x1, 0.0);
      trivial.b.assign(s.v * s.x2, 0.0);
      for (std::size_t u = 0; u < s.u; ++u) trivial.a[u * s.x1] = 1.0;
      for (std::size_t v = 0; v < s.v; ++v) trivial.b[v * s.x2] = 1.0;
      return as_param(std::move(trivial), param_for(set));
    }
  }
  throw Error("unknown set id");
}

// One random coordinate move that keeps the state inside its parameterization.
bool perturb(ChannelState& st, double step, std::mt19937_64& rng) {
  const ChannelSizes& s = st.sizes;
  const double amount = step * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (!(amount > 0.0)) return false;

  auto shift = [&](std::span<double> row) {
    if (row.size() < 2) return false;
    const auto [i, k] = pick_pair(row.size(), rng);
    const double moved = std::min(amount, row[i]);
    if (!(moved > 0.0)) return false;
    row[k] += moved;
    row[i] = moved == row[i] ? 0.0 : row[i] - moved;
    return true;
  };

  switch (st.param) {
    case Param::Product: {
      const std::size_t na = s.x1 >= 2 ? s.u : 0;
      const std::size_t nb = s.x2 >= 2 ? s.v : 0;
      if (na + nb == 0) return false;
      const std::size_t r = pick(na + nb, rng);
      if (r < na) return shift(std::span<double>(st.a).subspan(r * s.x1, s.x1));
      return shift(std::span<double>(st.b).subspan((r - na) * s.x2, s.x2));
    }
    case Param::Free: {
      if (s.slice_size() < 2) return false;
      return shift(st.slice(pick(s.u, rng), pick(s.v, rng)));
    }
    case Param::Coupled: {
      const int kind = static_cast<int>(pick(3, rng));
      if (kind == 0 && s.x1 >= 2) {
        // Move X1 mass i -> k for one u, carrying every coupling row along.
        const std::size_t u = pick(s.u, rng);
        const auto [i, k] = pick_pair(s.x1, rng);
        double& ai = st.a[u * s.x1 + i];
        const double moved = std::min(amount, ai);
        if (!(moved > 0.0)) return false;
        const double f = moved / ai;
        for (std::size_t v = 0; v < s.v; ++v) {
          std::span<double> block = st.slice(u, v);
          for (std::size_t j = 0; j < s.x2; ++j) {
            double& from = block[i * s.x2 + j];
            const double t = f >= 1.0 ? from : f * from;
            block[k * s.x2 + j] += t;
            from = f >= 1.0 ? 0.0 : from - t;
          }
        }
        st.a[u * s.x1 + k] += moved;
        ai = moved == ai ? 0.0 : ai - moved;
        return true;
      }
      if (kind == 1 && s.x2 >= 2) {
        const std::size_t v = pick(s.v, rng);
        const auto [j, l] = pick_pair(s.x2, rng);
        double& bj = st.b[v * s.x2 + j];
        const double moved = std::min(amount, bj);
        if (!(moved > 0.0)) return false;
        const double f = moved / bj;
        for (std::size_t u = 0; u < s.u; ++u) {
          std::span<double> block = st.slice(u, v);
          for (std::size_t i = 0; i < s.x1; ++i) {
            double& from = block[i * s.x2 + j];
            const double t = f >= 1.0 ? from : f * from;
            block[i * s.x2 + l] += t;
            from = f >= 1.0 ? 0.0 : from - t;
          }
        }
        st.b[v * s.x2 + l] += moved;
        bj = moved == bj ? 0.0 : bj - moved;
        return true;
      }
      if (s.x1 < 2 || s.x2 < 2) return false;
      // Marginal-preserving 2x2 swap inside one coupling.
      std::span<double> block = st.slice(pick(s.u, rng), pick(s.v, rng));
      auto [i, k] = pick_pair(s.x1, rng);
      const auto [j, l] = pick_pair(s.x2, rng);
      if (std::bernoulli_distribution(0.5)(rng)) std::swap(i, k);
      double& up1 = block[i * s.x2 + j];
      double& up2 = block[k * s.x2 + l];
      double& dn1 = block[i * s.x2 + l];
      double& dn2 = block[k * s.x2 + j];
      const double moved = std::min({amount, dn1, dn2});
      if (!(moved > 0.0)) return false;
      up1 += moved;
      up2 += moved;
      dn1 = moved == dn1 ? 0.0 : dn1 - moved;
      dn2 = moved == dn2 ? 0.0 : dn2 - moved;
      return true;
    }
  }
  return false;
}

bool weakly_dominates(const OperatingPoint& q, const OperatingPoint& p) {
  return q.r1 <= p.r1 && q.r2 <= p.r2 && q.ed1 <= p.ed1 && q.ed2 <= p.ed2;
}

// Nondominated set in (R1, R2, Ed1, Ed2); the first of equal points is kept.
template <class Entry>
class ParetoArchive {
 public:
  explicit ParetoArchive(const OperatingPoint Entry::*field) : field_(field) {}

  void add(Entry e) {
    const OperatingPoint& p = e.*field_;
    for (const Entry& q : entries_) {
      if (weakly_dominates(q.*field_, p)) return;
    }
    std::erase_if(entries_, [&](const Entry& q) { return weakly_dominates(p, q.*field_); });
    entries_.push_back(std::move(e));
  }

  std::vector<Entry>& entries() { return entries_; }

 private:
  const OperatingPoint Entry::*field_;
  std::vector<Entry> entries_;
};

std::vector<AuxChannel> deterministic_products(ChannelSizes s, std::size_t cap, std::mt19937_64& rng) {
  // Count x1^u * x2^v without overflow past the cap.
  std::size_t count = 1;
  bool over = false;
  for (std::size_t i = 0; i < s.u && !over; ++i) over = (count *= s.x1) > cap;
  for (std::size_t i = 0; i < s.v && !over; ++i) over = (count *= s.x2) > cap;

  std::vector<AuxChannel> out;
  std::vector<std::size_t> f1(s.u, 0), f2(s.v, 0);
  auto build = [&] {
    std::vector<double> a(s.u * s.x1, 0.0), b(s.v * s.x2, 0.0);
    for (std::size_t u = 0; u < s.u; ++u) a[u * s.x1 + f1[u]] = 1.0;
    for (std::size_t v = 0; v < s.v; ++v) b[v * s.x2 + f2[v]] = 1.0;
    out.push_back(AuxChannel::product(s, a, b));
  };
  if (over) {
    for (std::size_t n = 0; n < cap; ++n) {
      for (auto& x : f1) x = pick(s.x1, rng);
      for (auto& x : f2) x = pick(s.x2, rng);
      build();
    }
    return out;
  }
  // Odometer over (f1, f2), f2's last entry fastest.
  for (std::size_t n = 0; n < count; ++n) {
    build();
    for (std::size_t pos = s.u + s.v; pos-- > 0;) {
      std::size_t& digit = pos < s.u ? f1[pos] : f2[pos - s.u];
      const std::size_t base = pos < s.u ? s.x1 : s.x2;
      if (++digit < base) break;
      digit = 0;
    }
  }
  return out;
}

OperatingPoint mixture_point(const std::vector<OperatingPoint>& pts, const std::vector<std::size_t>& idx,
                             const std::vector<double>& lambda) {
  OperatingPoint m;
  std::size_t support = 0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (lambda[j] <= 1e-12) continue;
    const OperatingPoint& p = pts[idx[j]];
    m.r1 += lambda[j] * p.r1;
    m.r2 += lambda[j] * p.r2;
    m.ed1 += lambda[j] * p.ed1;
    m.ed2 += lambda[j] * p.ed2;
    ++support;
    last = idx[j];
  }
  if (support == 1) {
    m = pts[last];
  } else {
    m.vertex = 0;
    m.fingerprint = 0;
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

DecoderResult optimal_decoders(const ProbTensor& joint, const SourceModel& src) {
  const ProbTensor q1 = marginal(joint, {"X1", "X2", "U"});
  const ProbTensor q2 = marginal(joint, {"X1", "X2", "V"});
  const std::size_t nu = q1.sizes()[2];
  const std::size_t nv = q2.sizes()[2];
  if (nu != src.u_size() || nv != src.v_size()) throw Error("optimal_decoders: alphabet mismatch");

  DecoderResult out;
  out.decoders.x1_size = q1.sizes()[0];
  out.decoders.x2_size = q1.sizes()[1];
  const std::size_t cells = out.decoders.x1_size * out.decoders.x2_size;
  out.decoders.u_hat.assign(cells, 0);
  out.decoders.v_hat.assign(cells, 0);

  // Columns of d as contiguous rows: dT[uhat][u].
  const Eigen::MatrixXd d1t = src.d1.transpose();
  const Eigen::MatrixXd d2t = src.d2.transpose();
  std::vector<double> d1_rows(d1t.size()), d2_rows(d2t.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      d1_rows.data(), d1t.rows(), d1t.cols()) = d1t;
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      d2_rows.data(), d2t.rows(), d2t.cols()) = d2t;

  auto decode = [&](std::span<const double> q, std::size_t n, const std::vector<double>& rows,
                    std::size_t n_hat, std::vector<std::size_t>& map) {
    double total = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      const auto mass = q.subspan(c * n, n);
      double best = 0.0;
      std::size_t arg = 0;
      for (std::size_t h = 0; h < n_hat; ++h) {
        // Plain left-to-right sum so totals agree bit-for-bit with enumeration.
        double cost = 0.0;
        for (std::size_t u = 0; u < n; ++u) cost += mass[u] * rows[h * n + u];
        if (h == 0 || cost < best) {
          best = cost;
          arg = h;
        }
      }
      map[c] = arg;
      total += best;
    }
    return total;
  };
  out.ed1 = decode(q1.values(), nu, d1_rows, src.u_hat_size(), out.decoders.u_hat);
  out.ed2 = decode(q2.values(), nv, d2_rows, src.v_hat_size(), out.decoders.v_hat);
  return out;
}

RateVertices rate_vertices(const ProbTensor& joint) {
  const AxisList uv{"U", "V"};
  const AxisList q = joint.has_axis("Q") ? AxisList{"Q"} : AxisList{};
  auto with_q = [&](AxisList l) {
    l.insert(l.end(), q.begin(), q.end());
    return l;
  };
  RateVertices rv;
  rv.first = {mutual_information(joint, uv, {"X1"}, q), mutual_information(joint, uv, {"X2"}, with_q({"X1"}))};
  rv.second = {mutual_information(joint, uv, {"X1"}, with_q({"X2"})), mutual_information(joint, uv, {"X2"}, q)};
  rv.sum_rate = mutual_information(joint, uv, {"X1", "X2"}, q);
  return rv;
}

AuxChannel sample_channel(SetId set, const SourceModel& src, ChannelSizes sizes, std::mt19937_64& rng,
                          double tolerance, SamplerStats* stats) {
  if (sizes.u != src.u_size() || sizes.v != src.v_size()) throw Error("sample_channel: size mismatch");
  if (sizes.x1 == 0 || sizes.x2 == 0) throw Error("sample_channel: auxiliary sizes must be >= 1");
  return sample_state(set, src, sizes, rng, tolerance, stats).channel();
}

ChannelEvaluation evaluate_channel(const AuxChannel& ch, const SourceModel& src, const DistortionPair& d,
                                   const WeightPair& w) {
  const ProbTensor joint = join(src.joint, ch);
  const DecoderResult dec = optimal_decoders(joint, src);
  const RateVertices rv = rate_vertices(joint);
  const std::uint64_t fp = ch.fingerprint();

  ChannelEvaluation e;
  e.vertices[0] = {rv.first[0], rv.first[1], dec.ed1, dec.ed2, 1, fp};
  e.vertices[1] = {rv.second[0], rv.second[1], dec.ed1, dec.ed2, 2, fp};
  e.meets_distortion = e.vertices[0].meets(d);
  const double o1 = e.vertices[0].weighted(w);
  const double o2 = e.vertices[1].weighted(w);
  e.best_vertex = o2 < o1 ? 2 : 1;
  e.objective = std::min(o1, o2);
  return e;
}

WeightedRateResult minimize_weighted_rate(SetId set, const SourceModel& src, const DistortionPair& d,
                                          ChannelSizes sizes, const WeightPair& w, std::size_t budget,
                                          std::uint64_t seed, const OptimizerOptions& options) {
  if (!(w.w1 >= 0.0 && w.w2 >= 0.0) || (w.w1 == 0.0 && w.w2 == 0.0)) {
    throw Error("weights must be nonnegative and not both zero");
  }
  if (budget < 1) throw Error("budget must be >= 1");
  if (sizes.u != src.u_size() || sizes.v != src.v_size()) throw Error("channel sizes do not match the source");
  if (sizes.x1 == 0 || sizes.x2 == 0) throw Error("auxiliary sizes must be >= 1");

  const double tol = options.membership_tolerance;
  WeightedRateResult res;
  ParetoArchive<ArchivedPoint> archive(&ArchivedPoint::point);

  struct Candidate {
    double objective;
    std::shared_ptr<const AuxChannel> channel;
  };
  std::vector<Candidate> top;
  bool have_best = false;

  auto record = [&](std::shared_ptr<const AuxChannel> ch) {
    const ChannelEvaluation e = evaluate_channel(*ch, src, d, w);
    ++res.evaluations;
    if (options.keep_archive) {
      archive.add({e.vertices[0], ch});
      archive.add({e.vertices[1], ch});
    }
    if (!e.meets_distortion) return e;
    if (!have_best || e.objective < res.value) {
      have_best = true;
      res.value = e.objective;
      res.point = e.vertices[static_cast<std::size_t>(e.best_vertex - 1)];
      res.channel = *ch;
    }
    const std::uint64_t fp = e.vertices[0].fingerprint;
    const bool duplicate = std::any_of(top.begin(), top.end(), [&](const Candidate& c) {
      return c.channel->fingerprint() == fp;
    });
    if (!duplicate && options.refine_starts > 0) {
      auto pos = std::find_if(top.begin(), top.end(), [&](const Candidate& c) { return e.objective < c.objective; });
      top.insert(pos, {e.objective, ch});
      if (top.size() > options.refine_starts) top.pop_back();
    }
    return e;
  };

  auto in_set = [&](const AuxChannel& ch) { return check_membership(set, ch, src, tol).accepted; };

  std::mt19937_64 det_rng(derive_seed(seed, options.stream, ~std::uint64_t{0}));
  for (auto& ch : deterministic_products(sizes, options.deterministic_cap, det_rng)) {
    if (needs_spectral_check(set) && !in_set(ch)) continue;
    record(std::make_shared<const AuxChannel>(std::move(ch)));
  }
  for (const AuxChannel& ch : options.extra_starts) {
    if (ch.sizes() != sizes || !in_set(ch)) continue;
    record(std::make_shared<const AuxChannel>(ch));
  }
  for (std::size_t r = 0; r < budget; ++r) {
    std::mt19937_64 rng(derive_seed(seed, options.stream, r));
    record(std::make_shared<const AuxChannel>(sample_channel(set, src, sizes, rng, tol, &res.sampler)));
  }

  const std::size_t iterations = options.refine_iterations == 0 ? budget : options.refine_iterations;
  const std::vector<Candidate> starts = top;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    std::mt19937_64 rng(derive_seed(seed, options.stream, budget + k));
    ChannelState state = state_from_channel(set, *starts[k].channel);
    double current = starts[k].objective;
    double step = kInitialStep;
    int failures = 0;
    const std::size_t per_start = std::max<std::size_t>(1, iterations / starts.size());
    for (std::size_t it = 0; it < per_start; ++it) {
      ChannelState cand = state;
      bool improved = false;
      if (perturb(cand, step, rng)) {
        auto ch = std::make_shared<const AuxChannel>(cand.channel());
        if (!needs_spectral_check(set) || in_S_out3(*ch, src, tol).accepted) {
          const ChannelEvaluation e = record(ch);
          if (e.meets_distortion && e.objective < current) {
            state = std::move(cand);
            current = e.objective;
            improved = true;
          }
        }
      }
      if (improved) {
        failures = 0;
      } else if (++failures >= kFailuresBeforeShrink) {
        failures = 0;
        step *= 0.5;
        if (step < 1e-7) step = kInitialStep;
      }
    }
  }

  res.status = have_best ? OptimizeStatus::Feasible : OptimizeStatus::InfeasibleAtBudget;
  if (options.keep_archive) res.archive = std::move(archive.entries());
  return res;
}

// ---------------------------------------------------------------------------

double sweep_theta(std::size_t index, std::size_t weight_count) {
  if (weight_count < 2) throw Error("weight count must be >= 2");
  return std::numbers::pi / 2.0 * static_cast<double>(index) / static_cast<double>(weight_count - 1);
}

std::vector<std::size_t> lower_hull_vertices(const std::vector<OperatingPoint>& points) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  auto coords = [&](std::size_t i) {
    const OperatingPoint& p = points[i];
    return std::array<double, 4>{p.r1, p.r2, p.ed1, p.ed2};
  };
  // Minimizer of c . x, ties broken by coordinate sum and then
  // lexicographically: always a vertex of conv(points) + R^4_+.
  auto argmin = [&](const std::array<double, 4>& c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const auto x = coords(i);
      const auto y = coords(best);
      const double cx = c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3];
      const double cy = c[0] * y[0] + c[1] * y[1] + c[2] * y[2] + c[3] * y[3];
      if (cx != cy) {
        if (cx < cy) best = i;
        continue;
      }
      const double sx = x[0] + x[1] + x[2] + x[3];
      const double sy = y[0] + y[1] + y[2] + y[3];
      if (sx != sy) {
        if (sx < sy) best = i;
        continue;
      }
      if (x < y) best = i;
    }
    return best;
  };

  std::vector<bool> is_vertex(n, false);
  std::vector<std::size_t> working;
  auto add = [&](std::size_t i) {
    if (!is_vertex[i]) {
      is_vertex[i] = true;
      working.push_back(i);
    }
  };
  for (int k = 0; k < 4; ++k) {
    std::array<double, 4> c{};
    c[static_cast<std::size_t>(k)] = 1.0;
    add(argmin(c));
  }
  add(argmin({1.0, 1.0, 1.0, 1.0}));

  // Clarkson-style extreme point search: a point dominated by a mixture of
  // known vertices is not a vertex; otherwise the Farkas direction exposes a
  // new vertex.
  for (std::size_t p = 0; p < n; ++p) {
    if (is_vertex[p]) continue;
    const auto target = coords(p);
    for (;;) {
      lp::Problem prob;
      prob.cost.assign(working.size(), 0.0);
      for (std::size_t k = 0; k < 4; ++k) {
        lp::Row row;
        row.kind = lp::RowKind::LessEqual;
        row.rhs = target[k] + 1e-12;
        for (std::size_t j : working) row.coefficients.push_back(coords(j)[k]);
        prob.rows.push_back(std::move(row));
      }
      prob.rows.push_back({std::vector<double>(working.size(), 1.0), lp::RowKind::Equal, 1.0});
      const lp::Solution sol = lp::solve(prob);
      if (sol.status == lp::Status::Optimal) break;

      std::array<double, 4> c{};
      double norm = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        c[k] = std::max(0.0, -sol.farkas[k]);
        norm += c[k];
      }
      if (!(norm > 0.0)) break;
      const std::size_t q = argmin(c);
      if (is_vertex[q]) {
        if (q != p) break;  // numerically inconsistent certificate; treat p as interior
      }
      add(q);
      if (q == p) break;
    }
  }
  std::sort(working.begin(), working.end());
  return working;
}

namespace {

RegionBoundary trace_single(SetId set, const SourceModel& src, const DistortionPair& d, ChannelSizes sizes,
                            std::size_t weight_count, std::size_t budget, std::uint64_t seed,
                            const TraceOptions& options, const std::vector<AuxChannel>& injected) {
  if (weight_count < 2) throw Error("weight count must be >= 2");
  RegionBoundary out;
  out.meta = {set, d, sizes, src.u_hat_size(), src.v_hat_size(), seed, budget, weight_count, src.fingerprint()};

  std::vector<WeightedRateResult> results(weight_count);
  parallel_for(weight_count, [&](std::size_t k) {
    const double theta = sweep_theta(k, weight_count);
    OptimizerOptions opts = options.optimizer;
    opts.stream = k;
    opts.keep_archive = true;
    opts.extra_starts.insert(opts.extra_starts.end(), injected.begin(), injected.end());
    results[k] = minimize_weighted_rate(set, src, d, sizes, {std::cos(theta), std::sin(theta)}, budget, seed, opts);
  });

  ParetoArchive<TaggedPoint> merged(&TaggedPoint::point);
  for (std::size_t k = 0; k < weight_count; ++k) {
    for (auto& a : results[k].archive) merged.add({a.point, k, a.channel});
  }
  out.points = std::move(merged.entries());

  std::vector<OperatingPoint> plain;
  plain.reserve(out.points.size());
  for (const auto& t : out.points) plain.push_back(t.point);
  out.hull = lower_hull_vertices(plain);

  for (std::size_t k = 0; k < weight_count; ++k) {
    SweepEntry e;
    e.theta = sweep_theta(k, weight_count);
    e.weight = {std::cos(e.theta), std::sin(e.theta)};
    for (const auto& t : out.points) {
      if (!t.point.meets(d)) continue;
      const double v = t.point.weighted(e.weight);
      if (!e.feasible || v < e.value) {
        e.feasible = true;
        e.value = v;
        e.best = t.point;
        e.channel = t.channel;
      }
    }

    lp::Problem prob;
    for (std::size_t j : out.hull) prob.cost.push_back(plain[j].weighted(e.weight));
    lp::Row r1{{}, lp::RowKind::LessEqual, d.d1 + kDistortionSlack};
    lp::Row r2{{}, lp::RowKind::LessEqual, d.d2 + kDistortionSlack};
    for (std::size_t j : out.hull) {
      r1.coefficients.push_back(plain[j].ed1);
      r2.coefficients.push_back(plain[j].ed2);
    }
    prob.rows = {std::move(r1), std::move(r2), {std::vector<double>(out.hull.size(), 1.0), lp::RowKind::Equal, 1.0}};
    const lp::Solution sol = lp::solve(prob);
    if (sol.status == lp::Status::Optimal) {
      e.time_shared_feasible = true;
      e.time_shared_value = sol.objective;
      out.frontier.push_back({mixture_point(plain, out.hull, sol.x), k, nullptr});
      if (out.frontier.back().point.vertex != 0) {
        // Single supporting point: keep its channel.
        for (std::size_t j = 0; j < out.hull.size(); ++j) {
          if (sol.x[j] > 1e-12) out.frontier.back().channel = out.points[out.hull[j]].channel;
        }
      }
    }
    out.sweep.push_back(std::move(e));
  }

  // Lower-left frontier in (R1, R2): sorted by R1 with strictly falling R2.
  std::stable_sort(out.frontier.begin(), out.frontier.end(), [](const TaggedPoint& a, const TaggedPoint& b) {
    if (a.point.r1 != b.point.r1) return a.point.r1 < b.point.r1;
    return a.point.r2 < b.point.r2;
  });
  std::vector<TaggedPoint> kept;
  for (auto& f : out.frontier) {
    if (kept.empty() || f.point.r2 < kept.back().point.r2 - 1e-12) kept.push_back(std::move(f));
  }
  out.frontier = std::move(kept);
  return out;
}

bool is_subset(SetId smaller, SetId larger) {
  if (smaller == larger) return false;
  if (smaller == SetId::In) return true;
  return smaller == SetId::Cap13 && (larger == SetId::Out1 || larger == SetId::Out3);
}

}  // namespace

RegionBoundary trace_region(SetId set, const SourceModel& src, const DistortionPair& d, ChannelSizes sizes,
                            std::size_t weight_count, std::size_t budget, std::uint64_t seed,
                            const TraceOptions& options) {
  return trace_single(set, src, d, sizes, weight_count, budget, seed, options, {});
}

std::vector<RegionBoundary> trace_regions(const std::vector<SetId>& sets, const SourceModel& src,
                                          const DistortionPair& d, ChannelSizes sizes,
                                          std::size_t weight_count, std::size_t budget, std::uint64_t seed,
                                          const TraceOptions& options) {
  const SetId order[] = {SetId::In, SetId::Cap13, SetId::Out1, SetId::Out3};
  std::vector<std::optional<RegionBoundary>> done(4);
  for (std::size_t oi = 0; oi < 4; ++oi) {
    const SetId set = order[oi];
    if (std::find(sets.begin(), sets.end(), set) == sets.end()) continue;
    std::vector<AuxChannel> injected;
    std::vector<std::uint64_t> seen;
    for (std::size_t pj = 0; pj < oi; ++pj) {
      if (!done[pj] || !is_subset(order[pj], set)) continue;
      for (const auto& e : done[pj]->sweep) {
        if (!e.channel) continue;
        const std::uint64_t fp = e.channel->fingerprint();
        if (std::find(seen.begin(), seen.end(), fp) != seen.end()) continue;
        seen.push_back(fp);
        injected.push_back(*e.channel);
      }
    }
    done[oi] = trace_single(set, src, d, sizes, weight_count, budget, seed, options, injected);
  }
  std::vector<RegionBoundary> out;
  std::vector<SetId> emitted;
  for (SetId s : sets) {
    if (std::find(emitted.begin(), emitted.end(), s) != emitted.end()) continue;
    emitted.push_back(s);
    const std::size_t oi = static_cast<std::size_t>(std::find(std::begin(order), std::end(order), s) - std::begin(order));
    out.push_back(*done[oi]);
  }
  return out;
}

NestingReport compare_regions(const std::vector<RegionBoundary>& boundaries, double epsilon) {
  NestingReport report;
  report.epsilon = epsilon;
  if (boundaries.empty()) return report;
  const RegionMetadata& m0 = boundaries.front().meta;
  for (const auto& b : boundaries) {
    const RegionMetadata& m = b.meta;
    if (m.source_hash != m0.source_hash || !(m.distortion == m0.distortion) || !(m.sizes == m0.sizes) ||
        m.weight_count != m0.weight_count || m.u_hat_size != m0.u_hat_size || m.v_hat_size != m0.v_hat_size ||
        b.sweep.size() != boundaries.front().sweep.size()) {
      throw Error("compare_regions: boundaries do not share source, D, sizes and weights");
    }
    report.sets.push_back(m.set);
  }

  const std::size_t nb = boundaries.size();
  for (std::size_t k = 0; k < boundaries.front().sweep.size(); ++k) {
    NestingRow row;
    row.theta = boundaries.front().sweep[k].theta;
    for (const auto& b : boundaries) {
      const SweepEntry& e = b.sweep[k];
      row.values.push_back(e.feasible ? std::optional<double>(e.value) : std::nullopt);
    }
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        const SetId small = boundaries[i].meta.set;
        const SetId large = boundaries[j].meta.set;
        if (!is_subset(small, large)) continue;
        const auto& vs = row.values[i];
        const auto& vl = row.values[j];
        if (!vs) continue;  // nothing to undercut
        const double gap = vl ? *vl - *vs : std::numeric_limits<double>::infinity();
        if (gap > epsilon) report.violations.push_back({row.theta, small, large, gap});
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace mtrd
