#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "generators.hpp"
#include "mtrd/error.hpp"
#include "mtrd/io.hpp"
#include "mtrd/regions.hpp"

using namespace mtrd;

namespace {

const double kH01 = 0.4689955935892812;  // h(0.1)

SourceModel uniform_pair() {
  return SourceModel(ProbTensor({"U", "V"}, {2, 2}, {0.25, 0.25, 0.25, 0.25}), hamming_distortion(2, 2),
                     hamming_distortion(2, 2));
}

AuxChannel identity_channel(std::size_t n) {
  std::vector<double> id(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) id[i * n + i] = 1.0;
  return AuxChannel::product({n, n, n, n}, id, id);
}

}  // namespace

TEST_CASE("optimal decoders: closed forms") {
  const SourceModel d = dsbs_source(0.1);
  const DecoderResult lossless = optimal_decoders(join(d.joint, identity_channel(2)), d);
  CHECK(lossless.ed1 == 0.0);
  CHECK(lossless.ed2 == 0.0);
  CHECK(lossless.decoders.u_hat == std::vector<std::size_t>{0, 0, 1, 1});
  CHECK(lossless.decoders.v_hat == std::vector<std::size_t>{0, 1, 0, 1});

  const SourceModel u = uniform_pair();
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  const DecoderResult blind = optimal_decoders(join(u.joint, AuxChannel::product({2, 2, 2, 2}, flat, flat)), u);
  CHECK(blind.ed1 == doctest::Approx(0.5));
  CHECK(blind.ed2 == doctest::Approx(0.5));
  CHECK(blind.decoders.u_hat == std::vector<std::size_t>{0, 0, 0, 0});

  // X1 = U, X2 trivial: v is guessed as x1 and errs with probability 0.1.
  const std::vector<double> a{1, 0, 0, 1}, b{1, 1};
  const DecoderResult half = optimal_decoders(join(d.joint, AuxChannel::product({2, 2, 2, 1}, a, b)), d);
  CHECK(half.ed1 == 0.0);
  CHECK(half.ed2 == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(half.decoders.v_hat == std::vector<std::size_t>{0, 1});
}

TEST_CASE("rate vertices: closed forms") {
  const SourceModel d = dsbs_source(0.1);
  const RateVertices rv = rate_vertices(join(d.joint, identity_channel(2)));
  CHECK(rv.first[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rv.first[1] == doctest::Approx(kH01).epsilon(1e-12));
  CHECK(rv.second[0] == doctest::Approx(kH01).epsilon(1e-12));
  CHECK(rv.second[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rv.sum_rate == doctest::Approx(1.0 + kH01).epsilon(1e-12));

  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  const RateVertices zero = rate_vertices(join(d.joint, AuxChannel::product({2, 2, 2, 2}, flat, flat)));
  CHECK(zero.first[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.first[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.second[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.second[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rate vertices satisfy the rate constraints on random joints") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool with_q = trial % 4 == 0;
    AxisList axes{"U", "V", "X1", "X2"};
    std::vector<std::size_t> sizes{gen::size_in(1, 3, rng), gen::size_in(1, 3, rng), gen::size_in(1, 3, rng),
                                   gen::size_in(1, 3, rng)};
    if (with_q) {
      axes.push_back("Q");
      sizes.push_back(2);
    }
    // Source times a product channel (per Q value when Q is present).
    const std::size_t nq = with_q ? 2 : 1;
    const auto puvq = gen::simplex(sizes[0] * sizes[1] * nq, rng, 0.2);
    std::vector<std::vector<double>> a(nq), b(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      a[q] = gen::kernel(sizes[0], sizes[2], rng, 0.2);
      b[q] = gen::kernel(sizes[1], sizes[3], rng, 0.2);
    }
    std::vector<double> values;
    for (std::size_t u = 0; u < sizes[0]; ++u)
      for (std::size_t v = 0; v < sizes[1]; ++v)
        for (std::size_t i = 0; i < sizes[2]; ++i)
          for (std::size_t j = 0; j < sizes[3]; ++j)
            for (std::size_t q = 0; q < nq; ++q)
              values.push_back(puvq[(u * sizes[1] + v) * nq + q] * a[q][u * sizes[2] + i] * b[q][v * sizes[3] + j]);
    const ProbTensor t(axes, sizes, values, 1e-9);
    const AxisList q = with_q ? AxisList{"Q"} : AxisList{};
    auto plus_q = [&](AxisList l) {
      l.insert(l.end(), q.begin(), q.end());
      return l;
    };
    const RateVertices rv = rate_vertices(t);
    const double c1 = mutual_information(t, {"U", "V"}, {"X1"}, plus_q({"X2"}));
    const double c2 = mutual_information(t, {"U", "V"}, {"X2"}, plus_q({"X1"}));
    const double cs = mutual_information(t, {"U", "V"}, {"X1", "X2"}, q);
    for (const auto& v : {rv.first, rv.second}) {
      CHECK(v[0] >= c1 - 1e-10);
      CHECK(v[1] >= c2 - 1e-10);
      CHECK(std::fabs(v[0] + v[1] - cs) <= 1e-10);
    }
    CHECK(std::fabs(rv.sum_rate - cs) <= 1e-12);
  }
}

TEST_CASE("sampled channels pass their membership test") {
  const SourceModel sources[] = {dsbs_source(0.1), gen::asymmetric3()};
  for (SetId set : {SetId::In, SetId::Out1, SetId::Out3, SetId::Cap13}) {
    CAPTURE(set_name(set));
    std::mt19937_64 rng(71);
    SamplerStats stats;
    for (int trial = 0; trial < 200; ++trial) {
      const SourceModel& src = sources[trial % 2];
      const ChannelSizes s{src.u_size(), src.v_size(), gen::size_in(1, 3, rng), gen::size_in(1, 3, rng)};
      const AuxChannel ch = sample_channel(set, src, s, rng, kMembershipTolerance, &stats);
      CHECK(ch.sizes() == s);
      CHECK(check_membership(set, ch, src).accepted);
      if (set == SetId::Out1) CHECK(in_S_out1(ch).defect <= 1e-7);
    }
  }
}

TEST_CASE("sampler is deterministic in the seed") {
  const SourceModel src = gen::asymmetric3();
  for (SetId set : {SetId::In, SetId::Out1, SetId::Out3, SetId::Cap13}) {
    std::mt19937_64 a(5), b(5);
    const AuxChannel x = sample_channel(set, src, {3, 3, 3, 2}, a);
    const AuxChannel y = sample_channel(set, src, {3, 3, 3, 2}, b);
    CHECK(x.fingerprint() == y.fingerprint());
  }
}

TEST_CASE("weighted rate: trivial and lossless instances") {
  const SourceModel u = uniform_pair();
  const WeightedRateResult free_lunch = minimize_weighted_rate(SetId::In, u, {0.5, 0.5}, {2, 2, 2, 2}, {1, 1}, 50, 1);
  REQUIRE(free_lunch.status == OptimizeStatus::Feasible);
  CHECK(free_lunch.value <= 1e-12);

  const SourceModel d = dsbs_source(0.1);
  const WeightedRateResult in = minimize_weighted_rate(SetId::In, d, {0, 0}, {2, 2, 2, 2}, {1, 1}, 200, 3);
  REQUIRE(in.status == OptimizeStatus::Feasible);
  CHECK(in.value == doctest::Approx(1.0 + kH01).epsilon(1e-9));
  REQUIRE(in.channel);
  CHECK(in_S_in(*in.channel).accepted);
  for (SetId set : {SetId::Out1, SetId::Out3, SetId::Cap13}) {
    const WeightedRateResult r = minimize_weighted_rate(set, d, {0, 0}, {2, 2, 2, 2}, {1, 1}, 200, 3);
    REQUIRE(r.status == OptimizeStatus::Feasible);
    CHECK(r.value <= in.value + 1e-6);
    CHECK(check_membership(set, *r.channel, d).accepted);
  }

  // A single auxiliary symbol cannot describe U losslessly.
  const WeightedRateResult none = minimize_weighted_rate(SetId::In, d, {0, 0}, {2, 2, 1, 1}, {1, 1}, 20, 3);
  CHECK(none.status == OptimizeStatus::InfeasibleAtBudget);
}

TEST_CASE("weighted rate: argument validation") {
  const SourceModel d = dsbs_source(0.1);
  CHECK_THROWS_AS(minimize_weighted_rate(SetId::In, d, {0, 0}, {2, 2, 2, 2}, {0, 0}, 10, 1), Error);
  CHECK_THROWS_AS(minimize_weighted_rate(SetId::In, d, {0, 0}, {2, 2, 2, 2}, {-1, 1}, 10, 1), Error);
  CHECK_THROWS_AS(minimize_weighted_rate(SetId::In, d, {0, 0}, {2, 2, 2, 2}, {1, 1}, 0, 1), Error);
  CHECK_THROWS_AS(minimize_weighted_rate(SetId::In, d, {0, 0}, {3, 2, 2, 2}, {1, 1}, 10, 1), Error);
}

TEST_CASE("weighted rate: reported point is consistent") {
  const SourceModel src = gen::asymmetric3();
  const DistortionPair d{0.3, 0.3};
  for (SetId set : {SetId::In, SetId::Out1, SetId::Out3, SetId::Cap13}) {
    OptimizerOptions opts;
    opts.keep_archive = true;
    const WeightedRateResult r = minimize_weighted_rate(set, src, d, {3, 3, 3, 3}, {0.6, 0.8}, 100, 9, opts);
    REQUIRE(r.status == OptimizeStatus::Feasible);
    CHECK(r.point.meets(d));
    CHECK(r.point.weighted({0.6, 0.8}) == doctest::Approx(r.value).epsilon(1e-15));
    const ChannelEvaluation e = evaluate_channel(*r.channel, src, d, {0.6, 0.8});
    CHECK(e.objective == r.value);
    CHECK(!r.archive.empty());
    // Archive is nondominated and contains something at least as good.
    bool covered = false;
    for (const auto& a : r.archive) {
      covered = covered || (a.point.r1 <= r.point.r1 && a.point.r2 <= r.point.r2 && a.point.ed1 <= r.point.ed1 &&
                            a.point.ed2 <= r.point.ed2);
    }
    CHECK(covered);
  }
}

TEST_CASE("weighted rate: deterministic and independent of the worker count") {
  const SourceModel src = dsbs_source(0.2);
  const auto a = minimize_weighted_rate(SetId::Out3, src, {0.1, 0.1}, {2, 2, 3, 3}, {1, 2}, 80, 42);
  const auto b = minimize_weighted_rate(SetId::Out3, src, {0.1, 0.1}, {2, 2, 3, 3}, {1, 2}, 80, 42);
  CHECK(a.value == b.value);
  CHECK(a.channel->fingerprint() == b.channel->fingerprint());
  CHECK(a.evaluations == b.evaluations);

  setenv("MTRD_THREADS", "1", 1);
  std::ostringstream one;
  write_region_csv(one, trace_region(SetId::Cap13, src, {0.1, 0.1}, {2, 2, 2, 2}, 5, 40, 8));
  setenv("MTRD_THREADS", "4", 1);
  std::ostringstream four;
  write_region_csv(four, trace_region(SetId::Cap13, src, {0.1, 0.1}, {2, 2, 2, 2}, 5, 40, 8));
  unsetenv("MTRD_THREADS");
  CHECK(one.str() == four.str());
}

TEST_CASE("trace region: structure") {
  const SourceModel src = dsbs_source(0.1);
  const DistortionPair d{0.05, 0.05};
  const RegionBoundary b = trace_region(SetId::In, src, d, {2, 2, 3, 3}, 9, 100, 4);
  REQUIRE(b.sweep.size() == 9);
  CHECK(b.sweep.front().theta == 0.0);
  CHECK(b.sweep.back().theta == doctest::Approx(M_PI / 2));

  // Hull vertices index existing points.
  for (auto h : b.hull) CHECK(h < b.points.size());

  // Each sweep best minimizes w . R over every point that meets D.
  for (const SweepEntry& e : b.sweep) {
    REQUIRE(e.feasible);
    for (const auto& t : b.points) {
      if (t.point.meets(d)) CHECK(e.value <= t.point.weighted(e.weight));
    }
    // Time sharing can only help.
    REQUIRE(e.time_shared_feasible);
    CHECK(e.time_shared_value <= e.value + 1e-9);
  }

  // Frontier: sorted by R1, R2 strictly decreasing, every point meets D.
  REQUIRE(!b.frontier.empty());
  for (std::size_t i = 1; i < b.frontier.size(); ++i) {
    CHECK(b.frontier[i].point.r1 >= b.frontier[i - 1].point.r1);
    CHECK(b.frontier[i].point.r2 < b.frontier[i - 1].point.r2);
  }
  for (const auto& f : b.frontier) {
    CHECK(f.point.ed1 <= d.d1 + 1e-8);
    CHECK(f.point.ed2 <= d.d2 + 1e-8);
  }
}

TEST_CASE("trace region: free corner and lossless corner") {
  const RegionBoundary free_lunch = trace_region(SetId::In, uniform_pair(), {0.5, 0.5}, {2, 2, 2, 2}, 3, 20, 1);
  REQUIRE(!free_lunch.frontier.empty());
  CHECK(free_lunch.frontier.front().point.r1 <= 1e-12);
  CHECK(free_lunch.frontier.front().point.r2 <= 1e-12);

  const SourceModel d = dsbs_source(0.1);
  const auto all = trace_regions({SetId::In, SetId::Out1, SetId::Out3, SetId::Cap13}, d, {0, 0}, {2, 2, 2, 2}, 3,
                                 100, 2);
  for (const auto& b : all) {
    CAPTURE(set_name(b.meta.set));
    const SweepEntry& mid = b.sweep[1];  // w = (cos 45, sin 45)
    REQUIRE(mid.feasible);
    CHECK(mid.value / mid.weight.w1 == doctest::Approx(1.0 + kH01).epsilon(1e-6));
  }
}

TEST_CASE("trace regions: injected subsets keep the ordering") {
  const SourceModel src = gen::asymmetric3();
  const auto all = trace_regions({SetId::Out3, SetId::In, SetId::Cap13, SetId::Out1}, src, {0.2, 0.2},
                                 {3, 3, 3, 3}, 5, 60, 11);
  REQUIRE(all.size() == 4);
  CHECK(all[0].meta.set == SetId::Out3);  // caller order preserved
  const NestingReport r = compare_regions(all, 0.0);
  CHECK(r.ok());
}

TEST_CASE("compare regions") {
  const SourceModel src = dsbs_source(0.1);
  const RegionBoundary in = trace_region(SetId::In, src, {0.05, 0.05}, {2, 2, 2, 2}, 5, 40, 3);
  RegionBoundary twin = in;
  twin.meta.set = SetId::Out1;
  const NestingReport same = compare_regions({in, twin});
  CHECK(same.ok());
  for (const auto& row : same.rows) CHECK(*row.values[0] == *row.values[1]);

  RegionBoundary corrupt = twin;
  for (auto& e : corrupt.sweep) e.value += 0.01;
  const NestingReport bad = compare_regions({in, corrupt});
  CHECK_FALSE(bad.ok());
  CHECK(bad.violations.size() == in.sweep.size());
  CHECK(bad.violations[0].gap == doctest::Approx(0.01));
  CHECK(bad.violations[0].smaller == SetId::In);

  RegionBoundary other = twin;
  other.meta.distortion = {0.1, 0.1};
  CHECK_THROWS_AS(compare_regions({in, other}), Error);
}

TEST_CASE("larger distortion never raises the scalarized value") {
  const SourceModel src = dsbs_source(0.1);
  const double levels[] = {0.0, 0.02, 0.05, 0.1, 0.25};
  for (SetId set : {SetId::In, SetId::Out1}) {
    double prev = 1e9;
    for (double d : levels) {
      const auto r = minimize_weighted_rate(set, src, {d, d}, {2, 2, 2, 2}, {1, 1}, 300, 5);
      REQUIRE(r.status == OptimizeStatus::Feasible);
      CHECK(r.value <= prev + 1e-4);
      prev = r.value;
    }
  }
}
