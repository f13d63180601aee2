#pragma once

// JSON and CSV forms of the library types.

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "mtrd/channel.hpp"
#include "mtrd/feasibility.hpp"
#include "mtrd/oracle.hpp"
#include "mtrd/probkit.hpp"
#include "mtrd/regions.hpp"
#include "mtrd/spectral.hpp"

namespace mtrd {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.3.0";

// {"axes": [...], "sizes": [...], "values": [...]}; values row-major.
json to_json(const ProbTensor& t);
ProbTensor tensor_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);  // array of rows
Eigen::MatrixXd matrix_from_json(const json& j);

// {"joint": tensor over (U, V), "d1": rows, "d2": rows}
json to_json(const SourceModel& src);
SourceModel source_from_json(const json& j);

// {"sizes": {"u","v","x1","x2"}, "values": [...]} in [u][v][x1][x2] order.
json to_json(const AuxChannel& ch);
AuxChannel channel_from_json(const json& j);

json to_json(const Spectrum& s);
json to_json(const DpiReport& r);
json to_json(const MembershipReport& r);
json to_json(const ValidationReport& r);
json to_json(const NestingReport& r);
json to_json(const RegionMetadata& m);

// Fixed column order; 12 significant digits; no timestamps, so equal runs
// give equal bytes.
inline constexpr const char* kRegionCsvHeader = "set_id,theta,w1,w2,R1,R2,Ed1,Ed2,vertex,on_frontier";
void write_region_csv(std::ostream& out, const RegionBoundary& b);

std::string format_number(double x);  // %.12g

}  // namespace mtrd
