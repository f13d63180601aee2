#pragma once

// Rate-region bounds F(S, D) for the four channel sets, computed by weighted
// sum-rate minimization over sampled auxiliary channels. Time sharing is
// realized as the lower convex hull of (R1, R2, Ed1, Ed2) operating points.
//
// Regions for out1, out3 and cap13 are computed over auxiliary alphabets of
// fixed, user-chosen sizes. No cardinality bound is known for them, so the
// results are heuristic under-approximations of the true outer bounds.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mtrd/channel.hpp"
#include "mtrd/feasibility.hpp"
#include "mtrd/probkit.hpp"

namespace mtrd {

inline constexpr double kDistortionSlack = 1e-9;
inline constexpr double kNestingEpsilon = 1e-4;

extern const char* const kCardinalityCaveat;

struct DistortionPair {
  double d1 = 0.0;
  double d2 = 0.0;
  bool operator==(const DistortionPair&) const = default;
};

struct WeightPair {
  double w1 = 1.0;
  double w2 = 1.0;
};

struct OperatingPoint {
  double r1 = 0.0;
  double r2 = 0.0;
  double ed1 = 0.0;
  double ed2 = 0.0;
  int vertex = 0;  // 1 or 2: corner of C(p); 0: time-shared mixture
  std::uint64_t fingerprint = 0;

  double weighted(const WeightPair& w) const { return w.w1 * r1 + w.w2 * r2; }
  bool meets(const DistortionPair& d) const {
    return ed1 <= d.d1 + kDistortionSlack && ed2 <= d.d2 + kDistortionSlack;
  }
};

// Reconstruction maps on the X1 x X2 grid, indexed x1 * |X2| + x2.
struct DecoderPair {
  std::size_t x1_size = 0;
  std::size_t x2_size = 0;
  std::vector<std::size_t> u_hat;
  std::vector<std::size_t> v_hat;
};

struct DecoderResult {
  DecoderPair decoders;
  double ed1 = 0.0;
  double ed2 = 0.0;
};

// Per-cell argmin of posterior expected distortion; ties go to the lowest
// reconstruction symbol and zero-mass cells decode to symbol 0.
// `joint` must carry axes U, V, X1, X2.
DecoderResult optimal_decoders(const ProbTensor& joint, const SourceModel& src);

// Corners of C(p): first = (I(UV;X1), I(UV;X2|X1)), second = (I(UV;X1|X2), I(UV;X2)).
// Every term is conditioned on Q when `joint` has a Q axis.
struct RateVertices {
  std::array<double, 2> first{};
  std::array<double, 2> second{};
  double sum_rate = 0.0;  // I(UV; X1 X2 [| Q])
};

RateVertices rate_vertices(const ProbTensor& joint);

struct SamplerStats {
  std::size_t ipf_resamples = 0;
  std::size_t spectral_rejections = 0;
  std::size_t fallbacks = 0;
};

// Draws a channel from `set` (Dirichlet(1) kernels; out1 couplings by
// iterative proportional fitting; out3/cap13 by rejection on the spectral
// conditions). The result passes check_membership(set) at `tolerance`.
AuxChannel sample_channel(SetId set, const SourceModel& src, ChannelSizes sizes, std::mt19937_64& rng,
                          double tolerance = kMembershipTolerance, SamplerStats* stats = nullptr);

struct ChannelEvaluation {
  std::array<OperatingPoint, 2> vertices;
  bool meets_distortion = false;
  int best_vertex = 1;
  double objective = 0.0;  // min over the two corners of w . (R1, R2)
};

ChannelEvaluation evaluate_channel(const AuxChannel& ch, const SourceModel& src, const DistortionPair& d,
                                   const WeightPair& w);

struct OptimizerOptions {
  std::size_t refine_iterations = 0;  // 0 selects the sampling budget
  std::size_t refine_starts = 4;
  std::size_t deterministic_cap = 4096;
  double membership_tolerance = kMembershipTolerance;
  std::uint64_t stream = 0;  // weight index in a sweep
  std::vector<AuxChannel> extra_starts;
  bool keep_archive = false;
};

enum class OptimizeStatus { Feasible, InfeasibleAtBudget };

// Operating point together with the channel that produced it.
struct ArchivedPoint {
  OperatingPoint point;
  std::shared_ptr<const AuxChannel> channel;
};

struct WeightedRateResult {
  OptimizeStatus status = OptimizeStatus::InfeasibleAtBudget;
  double value = 0.0;
  OperatingPoint point;
  std::optional<AuxChannel> channel;
  std::size_t evaluations = 0;
  SamplerStats sampler;
  std::vector<ArchivedPoint> archive;  // nondominated in (R1, R2, Ed1, Ed2); only with keep_archive
};

// Lowest w . (R1, R2) over sampled channels of `set` whose optimal decoders
// meet D, followed by coordinate-perturbation refinement. Deterministic in
// (seed, options.stream).
WeightedRateResult minimize_weighted_rate(SetId set, const SourceModel& src, const DistortionPair& d,
                                          ChannelSizes sizes, const WeightPair& w, std::size_t budget,
                                          std::uint64_t seed, const OptimizerOptions& options = {});

struct RegionMetadata {
  SetId set = SetId::In;
  DistortionPair distortion;
  ChannelSizes sizes;
  std::size_t u_hat_size = 0;
  std::size_t v_hat_size = 0;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t weight_count = 0;
  std::uint64_t source_hash = 0;
};

struct SweepEntry {
  double theta = 0.0;
  WeightPair weight;
  bool feasible = false;
  double value = 0.0;        // best single operating point meeting D
  OperatingPoint best;
  std::shared_ptr<const AuxChannel> channel;
  bool time_shared_feasible = false;
  double time_shared_value = 0.0;  // best mixture of hull vertices meeting D
};

struct TaggedPoint {
  OperatingPoint point;
  std::size_t weight_index = 0;  // sweep weight at which the point was first found
  std::shared_ptr<const AuxChannel> channel;
};

struct RegionBoundary {
  RegionMetadata meta;
  std::vector<TaggedPoint> points;
  std::vector<std::size_t> hull;  // indices into points
  std::vector<SweepEntry> sweep;
  std::vector<TaggedPoint> frontier;  // D-sliced lower-left frontier, sorted by R1
};

struct TraceOptions {
  OptimizerOptions optimizer;
};

double sweep_theta(std::size_t index, std::size_t weight_count);

RegionBoundary trace_region(SetId set, const SourceModel& src, const DistortionPair& d, ChannelSizes sizes,
                            std::size_t weight_count, std::size_t budget, std::uint64_t seed,
                            const TraceOptions& options = {});

// Traces several sets in inclusion order (in, cap13, out1, out3), seeding
// each larger set with the sweep-optimal channels of the smaller ones.
std::vector<RegionBoundary> trace_regions(const std::vector<SetId>& sets, const SourceModel& src,
                                          const DistortionPair& d, ChannelSizes sizes,
                                          std::size_t weight_count, std::size_t budget, std::uint64_t seed,
                                          const TraceOptions& options = {});

// Indices of points that are vertices of conv(points) + R^4_+.
std::vector<std::size_t> lower_hull_vertices(const std::vector<OperatingPoint>& points);

struct NestingRow {
  double theta = 0.0;
  std::vector<std::optional<double>> values;  // per input boundary; empty when infeasible
};

struct NestingViolation {
  double theta = 0.0;
  SetId smaller = SetId::In;
  SetId larger = SetId::In;
  double gap = 0.0;  // value(larger) - value(smaller), > epsilon
};

struct NestingReport {
  std::vector<SetId> sets;
  std::vector<NestingRow> rows;
  std::vector<NestingViolation> violations;
  double epsilon = kNestingEpsilon;
  bool ok() const { return violations.empty(); }
};

// Checks value(smaller) >= value(larger) - epsilon at every shared weight for
// each inclusion among in, cap13, out1 and out3.
NestingReport compare_regions(const std::vector<RegionBoundary>& boundaries,
                              double epsilon = kNestingEpsilon);

}  // namespace mtrd
