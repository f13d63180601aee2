#pragma once

// Brute-force and constructive checks that run independently of the region
// optimizer: sampled n-letter channels, a common-information construction,
// grid search over product channels and exhaustive decoder enumeration.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mtrd/channel.hpp"
#include "mtrd/feasibility.hpp"
#include "mtrd/probkit.hpp"
#include "mtrd/regions.hpp"

namespace mtrd {

inline constexpr int kMaxLetters = 3;

struct NLetterSample {
  AuxChannel induced;  // p(x1, x2 | u1, v1)
  ProbTensor joint;    // axes U1..Un, V1..Vn, X1, X2
};

// Dirichlet(1) kernels p(x1 | u^n) and p(x2 | v^n) on an i.i.d. source
// block. Throws CapExceeded when the joint would exceed `entry_cap` entries.
NLetterSample sample_nletter_channel(const SourceModel& src, int n, std::size_t x1_size,
                                     std::size_t x2_size, std::mt19937_64& rng,
                                     std::size_t entry_cap = kDefaultEntryCap);

struct ValidationFailure {
  std::size_t trial = 0;  // trials index; `trials` for the self-test case
  std::uint64_t seed = 0;
  double margin = 0.0;       // worst spectral slack
  double out1_defect = 0.0;  // in_S_out1 defect
  bool spectral_failed = false;
  bool out1_failed = false;
  std::string artifact;  // channel JSON path, empty when not written
};

struct ValidationReport {
  int n = 1;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double tolerance = kMembershipTolerance;
  double worst_margin = 0.0;       // min spectral slack over sampled trials
  double worst_out1_defect = 0.0;  // max over sampled trials
  bool self_test = false;
  std::vector<ValidationFailure> failures;
  bool ok() const { return failures.empty(); }
};

struct ValidationOptions {
  std::size_t x1_size = 2;
  std::size_t x2_size = 2;
  double tolerance = kMembershipTolerance;
  // Appends the common-information channel as an extra trial; it must be
  // reported as a failure.
  bool self_test = false;
  std::string artifact_dir;  // failing channels are written here when non-empty
};

// Every induced kernel must pass in_S_out3 and in_S_out1. Trial t uses
// derive_seed(seed, n, t).
ValidationReport validate_single_letter_conditions(const SourceModel& src, int n, std::size_t trials,
                                                   std::uint64_t seed, const ValidationOptions& options = {});

// X1 = (f1(U), S), X2 = (f2(V), S) with S uniform on s_size symbols and
// independent of (U, V). X1 is indexed label * s_size + s.
AuxChannel common_info_channel(const SourceModel& src, const std::vector<std::size_t>& f1,
                               const std::vector<std::size_t>& f2, std::size_t s_size);

struct GridSearchResult {
  bool feasible = false;  // false: no grid channel meets D
  double value = 0.0;
  OperatingPoint point;
  std::optional<AuxChannel> channel;
  std::size_t channels = 0;  // grid size
};

// Product channels whose kernel entries are multiples of `step`.
std::vector<AuxChannel> grid_product_channels(const SourceModel& src, ChannelSizes sizes, double step);

// Exact minimum of w . (R1, R2) over grid product channels meeting D.
// Requires |X1|, |X2| <= 2 and step in {0.25, 0.125}.
GridSearchResult grid_search_weighted_rate(const SourceModel& src, const DistortionPair& d, ChannelSizes sizes,
                                           const WeightPair& w, double step);

struct DecoderCheck {
  double min_ed1 = 0.0;
  double min_ed2 = 0.0;
  DecoderPair lowest;  // first minimizing maps in enumeration order
  DecoderResult decoders;
  bool matches = false;  // equal minima and identical maps
};

// Enumerates every map X1 x X2 -> Uhat and -> Vhat. Requires
// |X1| |X2| <= 4 and |Uhat|, |Vhat| <= 3.
DecoderCheck exhaustive_decoder_check(const ProbTensor& joint, const SourceModel& src);

}  // namespace mtrd
