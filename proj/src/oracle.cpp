#include "mtrd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mtrd/error.hpp"
#include "mtrd/hash.hpp"
#include "mtrd/io.hpp"
#include "mtrd/parallel.hpp"

namespace mtrd {
namespace {

std::size_t checked_pow(std::size_t base, int n, std::size_t cap) {
  std::size_t r = 1;
  for (int i = 0; i < n; ++i) {
    if (base != 0 && r > cap / base) throw CapExceeded("n-letter tensor exceeds the entry cap");
    r *= base;
  }
  return r;
}

void dirichlet_rows(std::vector<double>& out, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  out.assign(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += out[r * cols + c] = exp1(rng);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= total;
  }
}

// All probability vectors of length k with entries in {0, step, ..., 1}.
std::vector<std::vector<double>> simplex_grid(std::size_t k, std::size_t units) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> parts(k, 0);
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == k) {
      parts[pos] = left;
      std::vector<double> p(k);
      for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<double>(parts[i]) / static_cast<double>(units);
      out.push_back(std::move(p));
      return;
    }
    for (std::size_t a = left + 1; a-- > 0;) {
      parts[pos] = a;
      self(self, pos + 1, left - a);
    }
  };
  rec(rec, 0, units);
  return out;
}

}  // namespace

NLetterSample sample_nletter_channel(const SourceModel& src, int n, std::size_t x1_size, std::size_t x2_size,
                                     std::mt19937_64& rng, std::size_t entry_cap) {
  if (n < 1 || n > kMaxLetters) throw Error("n must be in {1, 2, 3}");
  if (x1_size == 0 || x2_size == 0) throw Error("auxiliary sizes must be >= 1");
  const std::size_t nu = src.u_size();
  const std::size_t nv = src.v_size();
  const std::size_t un = checked_pow(nu, n, entry_cap);
  const std::size_t vn = checked_pow(nv, n, entry_cap);
  const std::size_t cell = x1_size * x2_size;
  if (un > entry_cap / vn || un * vn > entry_cap / cell) throw CapExceeded("n-letter tensor exceeds the entry cap");

  std::vector<double> a, b;
  dirichlet_rows(a, un, x1_size, rng);
  dirichlet_rows(b, vn, x2_size, rng);

  // Source block probability for (u^n, v^n); letter 1 is the most significant digit.
  const auto p_uv = src.joint.values();
  auto block_prob = [&](std::size_t ui, std::size_t vi, int from) {
    double p = 1.0;
    for (int i = n - 1; i >= from; --i) {
      p *= p_uv[(ui % nu) * nv + (vi % nv)];
      ui /= nu;
      vi /= nv;
    }
    return p;
  };

  std::vector<double> joint(un * vn * cell, 0.0);
  std::vector<double> induced(nu * nv * cell, 0.0);
  const std::size_t tail_u = un / nu;
  const std::size_t tail_v = vn / nv;
  for (std::size_t ui = 0; ui < un; ++ui) {
    for (std::size_t vi = 0; vi < vn; ++vi) {
      const double p_all = block_prob(ui, vi, 0);
      const double p_tail = block_prob(ui, vi, 1);
      double* jrow = joint.data() + (ui * vn + vi) * cell;
      double* irow = induced.data() + ((ui / tail_u) * nv + vi / tail_v) * cell;
      for (std::size_t i = 0; i < x1_size; ++i) {
        for (std::size_t j = 0; j < x2_size; ++j) {
          const double k = a[ui * x1_size + i] * b[vi * x2_size + j];
          jrow[i * x2_size + j] = p_all * k;
          irow[i * x2_size + j] += p_tail * k;
        }
      }
    }
  }

  AxisList axes;
  std::vector<std::size_t> sizes;
  for (int i = 1; i <= n; ++i) {
    axes.push_back("U" + std::to_string(i));
    sizes.push_back(nu);
  }
  for (int i = 1; i <= n; ++i) {
    axes.push_back("V" + std::to_string(i));
    sizes.push_back(nv);
  }
  axes.insert(axes.end(), {"X1", "X2"});
  sizes.insert(sizes.end(), {x1_size, x2_size});

  return {AuxChannel::normalized({nu, nv, x1_size, x2_size}, std::move(induced)),
          ProbTensor(std::move(axes), std::move(sizes), std::move(joint), 1e-9)};
}

ValidationReport validate_single_letter_conditions(const SourceModel& src, int n, std::size_t trials,
                                                   std::uint64_t seed, const ValidationOptions& options) {
  if (trials < 1) throw Error("trials must be >= 1");
  if (n < 1 || n > kMaxLetters) throw Error("n must be in {1, 2, 3}");

  struct Outcome {
    std::optional<AuxChannel> channel;
    std::uint64_t seed = 0;
    MembershipReport spectral;
    MembershipReport out1;
  };
  const std::size_t total = trials + (options.self_test ? 1 : 0);
  std::vector<Outcome> outcomes(total);
  parallel_for(total, [&](std::size_t t) {
    Outcome& o = outcomes[t];
    if (t < trials) {
      o.seed = derive_seed(seed, static_cast<std::uint64_t>(n), t);
      std::mt19937_64 rng(o.seed);
      o.channel = sample_nletter_channel(src, n, options.x1_size, options.x2_size, rng).induced;
    } else {
      std::vector<std::size_t> id_u(src.u_size()), id_v(src.v_size());
      for (std::size_t i = 0; i < id_u.size(); ++i) id_u[i] = i;
      for (std::size_t i = 0; i < id_v.size(); ++i) id_v[i] = i;
      o.channel = common_info_channel(src, id_u, id_v, 2);
    }
    o.spectral = in_S_out3(*o.channel, src, options.tolerance);
    o.out1 = in_S_out1(*o.channel, options.tolerance);
  });

  ValidationReport r;
  r.n = n;
  r.trials = trials;
  r.seed = seed;
  r.tolerance = options.tolerance;
  r.self_test = options.self_test;
  bool first = true;
  for (std::size_t t = 0; t < total; ++t) {
    const Outcome& o = outcomes[t];
    const double margin = o.spectral.margins ? o.spectral.margins->worst() : -o.spectral.defect;
    if (t < trials) {
      r.worst_margin = first ? margin : std::min(r.worst_margin, margin);
      r.worst_out1_defect = first ? o.out1.defect : std::max(r.worst_out1_defect, o.out1.defect);
      first = false;
    }
    if (o.spectral.accepted && o.out1.accepted) continue;
    ValidationFailure f{t, o.seed, margin, o.out1.defect, !o.spectral.accepted, !o.out1.accepted, {}};
    if (!options.artifact_dir.empty()) {
      std::filesystem::create_directories(options.artifact_dir);
      const std::string name = "failure_n" + std::to_string(n) + "_t" + std::to_string(t) + ".json";
      const std::filesystem::path path = std::filesystem::path(options.artifact_dir) / name;
      std::ofstream out(path);
      json j;
      j["seed"] = o.seed;
      j["trial"] = t;
      j["n"] = n;
      j["channel"] = to_json(*o.channel);
      j["membership"] = {to_json(o.spectral), to_json(o.out1)};
      out << j.dump(2) << '\n';
      f.artifact = path.string();
    }
    r.failures.push_back(std::move(f));
  }
  return r;
}

AuxChannel common_info_channel(const SourceModel& src, const std::vector<std::size_t>& f1,
                               const std::vector<std::size_t>& f2, std::size_t s_size) {
  if (f1.size() != src.u_size()) throw Error("f1 must map every symbol of U");
  if (f2.size() != src.v_size()) throw Error("f2 must map every symbol of V");
  if (s_size < 1) throw Error("s_size must be >= 1");
  const std::size_t l1 = *std::max_element(f1.begin(), f1.end()) + 1;
  const std::size_t l2 = *std::max_element(f2.begin(), f2.end()) + 1;
  const ChannelSizes sizes{src.u_size(), src.v_size(), l1 * s_size, l2 * s_size};
  std::vector<double> values(sizes.total(), 0.0);
  const double mass = 1.0 / static_cast<double>(s_size);
  for (std::size_t u = 0; u < sizes.u; ++u) {
    for (std::size_t v = 0; v < sizes.v; ++v) {
      for (std::size_t s = 0; s < s_size; ++s) {
        const std::size_t x1 = f1[u] * s_size + s;
        const std::size_t x2 = f2[v] * s_size + s;
        values[((u * sizes.v + v) * sizes.x1 + x1) * sizes.x2 + x2] = mass;
      }
    }
  }
  return AuxChannel(sizes, std::move(values), 1e-12);
}

std::vector<AuxChannel> grid_product_channels(const SourceModel& src, ChannelSizes sizes, double step) {
  if (!(step > 0.0 && step <= 1.0)) throw Error("grid step must be in (0, 1]");
  const double units_d = 1.0 / step;
  const auto units = static_cast<std::size_t>(std::llround(units_d));
  if (std::fabs(units_d - static_cast<double>(units)) > 1e-9) throw Error("grid step must divide 1");
  if (sizes.u != src.u_size() || sizes.v != src.v_size()) throw Error("channel sizes do not match the source");

  const auto rows1 = simplex_grid(sizes.x1, units);
  const auto rows2 = simplex_grid(sizes.x2, units);
  const std::size_t rows = sizes.u + sizes.v;
  double count = 1.0;
  for (std::size_t i = 0; i < sizes.u; ++i) count *= static_cast<double>(rows1.size());
  for (std::size_t i = 0; i < sizes.v; ++i) count *= static_cast<double>(rows2.size());
  if (count > 1e6) throw CapExceeded("grid has more than 1e6 channels");

  std::vector<AuxChannel> out;
  std::vector<std::size_t> digit(rows, 0);
  std::vector<double> a(sizes.u * sizes.x1), b(sizes.v * sizes.x2);
  for (;;) {
    for (std::size_t u = 0; u < sizes.u; ++u) std::copy(rows1[digit[u]].begin(), rows1[digit[u]].end(), a.begin() + u * sizes.x1);
    for (std::size_t v = 0; v < sizes.v; ++v) {
      const auto& r = rows2[digit[sizes.u + v]];
      std::copy(r.begin(), r.end(), b.begin() + v * sizes.x2);
    }
    out.push_back(AuxChannel::product(sizes, a, b));
    std::size_t pos = rows;
    while (pos-- > 0) {
      const std::size_t base = pos < sizes.u ? rows1.size() : rows2.size();
      if (++digit[pos] < base) break;
      digit[pos] = 0;
    }
    if (pos == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

GridSearchResult grid_search_weighted_rate(const SourceModel& src, const DistortionPair& d, ChannelSizes sizes,
                                           const WeightPair& w, double step) {
  if (sizes.x1 > 2 || sizes.x2 > 2) throw Error("grid search requires |X1|, |X2| <= 2");
  if (step != 0.25 && step != 0.125) throw Error("grid step must be 0.25 or 0.125");
  GridSearchResult r;
  for (const AuxChannel& ch : grid_product_channels(src, sizes, step)) {
    ++r.channels;
    const ChannelEvaluation e = evaluate_channel(ch, src, d, w);
    if (!e.meets_distortion) continue;
    if (!r.feasible || e.objective < r.value) {
      r.feasible = true;
      r.value = e.objective;
      r.point = e.vertices[static_cast<std::size_t>(e.best_vertex - 1)];
      r.channel = ch;
    }
  }
  return r;
}

DecoderCheck exhaustive_decoder_check(const ProbTensor& joint, const SourceModel& src) {
  const std::size_t nx1 = joint.axis_size("X1");
  const std::size_t nx2 = joint.axis_size("X2");
  const std::size_t cells = nx1 * nx2;
  if (cells > 4) throw Error("exhaustive decoder check requires |X1| |X2| <= 4");
  if (src.u_hat_size() > 3 || src.v_hat_size() > 3) throw Error("exhaustive decoder check requires |Uhat|, |Vhat| <= 3");

  DecoderCheck check;
  check.decoders = optimal_decoders(joint, src);
  check.lowest.x1_size = nx1;
  check.lowest.x2_size = nx2;

  // p(cell, source symbol) read straight from the joint.
  auto enumerate = [&](const std::string& axis, const Eigen::MatrixXd& dist, std::vector<std::size_t>& best_map) {
    const std::size_t ns = joint.axis_size(axis);
    const std::size_t nh = static_cast<std::size_t>(dist.cols());
    std::vector<double> q(cells * ns, 0.0);
    const ProbTensor m = marginal(joint, {"X1", "X2", axis});
    std::copy(m.values().begin(), m.values().end(), q.begin());

    std::size_t maps = 1;
    for (std::size_t c = 0; c < cells; ++c) maps *= nh;
    std::vector<std::size_t> map(cells);
    double best = 0.0;
    for (std::size_t code = 0; code < maps; ++code) {
      std::size_t rest = code;
      for (std::size_t c = cells; c-- > 0;) {
        map[c] = rest % nh;
        rest /= nh;
      }
      double total = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        double cost = 0.0;
        for (std::size_t s = 0; s < ns; ++s) cost += q[c * ns + s] * dist(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(map[c]));
        total += cost;
      }
      if (code == 0 || total < best) {
        best = total;
        best_map = map;
      }
    }
    return best;
  };
  check.min_ed1 = enumerate("U", src.d1, check.lowest.u_hat);
  check.min_ed2 = enumerate("V", src.d2, check.lowest.v_hat);
  check.matches = check.min_ed1 == check.decoders.ed1 && check.min_ed2 == check.decoders.ed2 &&
                  check.lowest.u_hat == check.decoders.decoders.u_hat &&
                  check.lowest.v_hat == check.decoders.decoders.v_hat;
  return check;
}

}  // namespace mtrd
