#pragma once

// Command-line front end. A run is described by a JSON config:
//
//   {
//     "source":     {"preset": "dsbs", "p": 0.1} | {"joint": <tensor over U,V>},
//     "distortion": "hamming" | {"d1": [[...]], "d2": [[...]]},
//     "D":          [d1, d2],
//     "sets":       ["in", "out1", "out3", "cap13"],
//     "sizes":      {"x1": 3, "x2": 3, "u_hat": 2, "v_hat": 2},
//     "weights":    17,
//     "budget":     2000,
//     "seed":       1,
//     "tolerances": {"membership": 1e-7, "nesting": 1e-4},
//     "out":        "out",
//     "triple":     <tensor over three axes>                  (dpi)
//     "channel":    <channel> | {"preset": "common_info", "f1": [...], "f2": [...], "s_size": 2}
//                   | {"preset": "product", "a": [[...]], "b": [[...]]}   (feasible)
//     "n":          [1, 2],                                    (validate)
//     "trials":     500                                        (validate)
//   }
//
// Tensors are {"axes", "sizes", "values"}; channels are {"sizes": {"u","v","x1","x2"}, "values"}.
// Every field except the one a command needs has a default.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mtrd/error.hpp"
#include "mtrd/io.hpp"
#include "mtrd/probkit.hpp"
#include "mtrd/regions.hpp"

namespace mtrd::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNestingViolation = 2, kNegativeVerdict = 3 };

// Invalid config; the message starts with the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what) : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  json raw;  // as given, before defaults
  SourceModel source = dsbs_source(0.1);
  DistortionPair distortion{0.05, 0.05};
  std::vector<SetId> sets{SetId::In, SetId::Out1, SetId::Out3, SetId::Cap13};
  std::size_t x1_size = 0;  // 0 selects |U| + 1
  std::size_t x2_size = 0;  // 0 selects |V| + 1
  std::size_t weights = 17;
  std::size_t budget = 2000;
  std::uint64_t seed = 1;
  double membership_tolerance = kMembershipTolerance;
  double nesting_tolerance = kNestingEpsilon;
  std::string out = "out";
  std::optional<ProbTensor> triple;
  std::optional<AuxChannel> channel;
  std::vector<int> letters{1, 2};
  std::size_t trials = 500;

  ChannelSizes channel_sizes() const;
  json resolved() const;  // fully defaulted config, echoed into outputs
};

RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);

// Commands write human-readable JSON to `out`, diagnostics to `err`, and
// return an ExitCode.
int cmd_region(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_dpi(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_feasible(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& cfg, bool self_test, std::ostream& out, std::ostream& err);

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtrd::cli
