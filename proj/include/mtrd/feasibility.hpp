#pragma once

// Membership tests for the feasible channel sets:
//   in    X1 -> U -> V -> X2 (product channels p(x1|u) p(x2|v))
//   out1  X1 -> U -> V and U -> V -> X2
//   out3  spectral conditions: every lambda_i (i >= 2) of the normalized
//         X1X2 joint, unconditioned and conditioned on u, v and (u, v), is at
//         most lambda_2 of the source
//   cap13 out1 and out3 together

#include <optional>
#include <string_view>

#include "mtrd/channel.hpp"
#include "mtrd/probkit.hpp"

namespace mtrd {

enum class SetId { In, Out1, Out3, Cap13 };

std::string_view set_name(SetId id);
SetId parse_set(std::string_view name);  // "in", "out1", "out3", "cap13"

inline constexpr double kMembershipTolerance = 1e-7;
inline constexpr double kSliceMassFloor = 1e-12;

// Slack lambda_2(UV) - max_i lambda_i for each family of conditions;
// negative slack is a violation.
struct SpectralMargins {
  double lambda2_uv = 0.0;
  double unconditional = 0.0;
  double given_u = 0.0;
  double given_v = 0.0;
  double given_uv = 0.0;
  std::size_t skipped_slices = 0;  // conditioning cells with mass < kSliceMassFloor

  double worst() const;
};

struct MembershipReport {
  SetId set = SetId::In;
  bool accepted = false;
  double defect = 0.0;
  double tolerance = kMembershipTolerance;
  std::optional<SpectralMargins> margins;
};

// max over supported (a, b) and all c of |p(c | a, b) - p(c | b)|.
double markov_defect(const ProbTensor& t, const AxisList& a, const AxisList& b, const AxisList& c);

MembershipReport in_S_in(const AuxChannel& ch, double tolerance = kMembershipTolerance);
MembershipReport in_S_out1(const AuxChannel& ch, double tolerance = kMembershipTolerance);
MembershipReport in_S_out3(const AuxChannel& ch, const SourceModel& src,
                           double tolerance = kMembershipTolerance);
MembershipReport in_intersection(const AuxChannel& ch, const SourceModel& src,
                                 double tolerance = kMembershipTolerance);

MembershipReport check_membership(SetId set, const AuxChannel& ch, const SourceModel& src,
                                  double tolerance = kMembershipTolerance);

SpectralMargins spectral_margins(const AuxChannel& ch, const SourceModel& src);

}  // namespace mtrd
