#include "mtrd/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "mtrd/error.hpp"

namespace mtrd {
namespace {

// Non-finite numbers have no JSON form; they are written as null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<double> doubles_from(const json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(std::string(what) + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::size_t size_from(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(std::string("field '") + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) x = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json to_json(const ProbTensor& t) {
  json j;
  j["axes"] = t.axes();
  j["sizes"] = t.sizes();
  j["values"] = std::vector<double>(t.values().begin(), t.values().end());
  return j;
}

ProbTensor tensor_from_json(const json& j) {
  const json& axes = field(j, "axes");
  const json& sizes = field(j, "sizes");
  if (!axes.is_array() || !sizes.is_array()) throw Error("tensor 'axes' and 'sizes' must be arrays");
  AxisList labels;
  for (const auto& a : axes) {
    if (!a.is_string()) throw Error("tensor axis labels must be strings");
    labels.push_back(a.get<std::string>());
  }
  std::vector<std::size_t> dims;
  for (const auto& s : sizes) {
    if (!s.is_number_integer() || s.get<long long>() < 1) throw Error("tensor sizes must be positive integers");
    dims.push_back(s.get<std::size_t>());
  }
  return ProbTensor(std::move(labels), std::move(dims), doubles_from(field(j, "values"), "tensor 'values'"));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error("matrix must be a nonempty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw Error("matrix rows must be nonempty arrays");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = doubles_from(j[r], "matrix row");
    if (row.size() != cols) throw Error("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

json to_json(const SourceModel& src) {
  json j;
  j["joint"] = to_json(src.joint);
  j["d1"] = matrix_to_json(src.d1);
  j["d2"] = matrix_to_json(src.d2);
  return j;
}

SourceModel source_from_json(const json& j) {
  return SourceModel(tensor_from_json(field(j, "joint")), matrix_from_json(field(j, "d1")),
                     matrix_from_json(field(j, "d2")));
}

json to_json(const AuxChannel& ch) {
  const ChannelSizes& s = ch.sizes();
  json j;
  j["sizes"] = {{"u", s.u}, {"v", s.v}, {"x1", s.x1}, {"x2", s.x2}};
  j["values"] = std::vector<double>(ch.values().begin(), ch.values().end());
  return j;
}

AuxChannel channel_from_json(const json& j) {
  const json& s = field(j, "sizes");
  const ChannelSizes sizes{size_from(s, "u"), size_from(s, "v"), size_from(s, "x1"), size_from(s, "x2")};
  return AuxChannel(sizes, doubles_from(field(j, "values"), "channel 'values'"), 1e-9);
}

json to_json(const Spectrum& s) { return s.values; }

json to_json(const DpiReport& r) {
  json terms = json::array();
  for (const DpiTerm& t : r.terms) {
    terms.push_back({{"i", t.index},
                     {"lambda_xz", t.lambda_xz},
                     {"lambda_xy", t.lambda_xy},
                     {"lambda2_yz", t.lambda2_yz},
                     {"slack_product", t.slack_product},
                     {"slack_chain", t.slack_chain}});
  }
  json j;
  j["verdict"] = r.holds ? "holds" : "violated";
  j["rank_xz"] = r.rank_xz;
  j["lambda2_yz"] = r.lambda2_yz;
  j["tolerance"] = r.tolerance;
  j["worst_slack"] = r.worst_slack;
  j["terms"] = std::move(terms);
  return j;
}

json to_json(const MembershipReport& r) {
  json j;
  j["set"] = std::string(set_name(r.set));
  j["accepted"] = r.accepted;
  j["defect"] = r.defect;
  j["tolerance"] = r.tolerance;
  if (r.margins) {
    const SpectralMargins& m = *r.margins;
    j["margins"] = {{"lambda2_uv", m.lambda2_uv},     {"unconditional", m.unconditional},
                    {"given_u", m.given_u},           {"given_v", m.given_v},
                    {"given_uv", m.given_uv},         {"worst", m.worst()},
                    {"skipped_slices", m.skipped_slices}};
  }
  return j;
}

json to_json(const ValidationReport& r) {
  json failures = json::array();
  for (const ValidationFailure& f : r.failures) {
    failures.push_back({{"trial", f.trial},
                        {"seed", f.seed},
                        {"margin", number(f.margin)},
                        {"out1_defect", number(f.out1_defect)},
                        {"spectral_failed", f.spectral_failed},
                        {"out1_failed", f.out1_failed},
                        {"artifact", f.artifact}});
  }
  json j;
  j["n"] = r.n;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  j["tolerance"] = r.tolerance;
  j["self_test"] = r.self_test;
  j["worst_margin"] = number(r.worst_margin);
  j["worst_out1_defect"] = number(r.worst_out1_defect);
  j["failure_count"] = r.failures.size();
  j["failures"] = std::move(failures);
  return j;
}

json to_json(const NestingReport& r) {
  json sets = json::array();
  for (SetId s : r.sets) sets.push_back(std::string(set_name(s)));
  json rows = json::array();
  for (const NestingRow& row : r.rows) {
    json values = json::array();
    for (const auto& v : row.values) values.push_back(v ? json(*v) : json(nullptr));
    rows.push_back({{"theta", row.theta}, {"values", std::move(values)}});
  }
  json violations = json::array();
  for (const NestingViolation& v : r.violations) {
    violations.push_back({{"theta", v.theta},
                          {"smaller", std::string(set_name(v.smaller))},
                          {"larger", std::string(set_name(v.larger))},
                          {"gap", number(v.gap)}});
  }
  json j;
  j["epsilon"] = r.epsilon;
  j["ok"] = r.ok();
  j["sets"] = std::move(sets);
  j["rows"] = std::move(rows);
  j["violations"] = std::move(violations);
  return j;
}

json to_json(const RegionMetadata& m) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.source_hash));
  json j;
  j["set"] = std::string(set_name(m.set));
  j["source_hash"] = hash;
  j["D"] = {m.distortion.d1, m.distortion.d2};
  j["sizes"] = {{"u", m.sizes.u}, {"v", m.sizes.v}, {"x1", m.sizes.x1}, {"x2", m.sizes.x2},
                {"u_hat", m.u_hat_size}, {"v_hat", m.v_hat_size}};
  j["seed"] = m.seed;
  j["budget"] = m.budget;
  j["weights"] = m.weight_count;
  return j;
}

void write_region_csv(std::ostream& out, const RegionBoundary& b) {
  const std::string set(set_name(b.meta.set));
  auto row = [&](const OperatingPoint& p, std::size_t k, bool frontier) {
    const double theta = sweep_theta(k, b.meta.weight_count);
    out << set << ',' << format_number(theta) << ',' << format_number(std::cos(theta)) << ','
        << format_number(std::sin(theta)) << ',' << format_number(p.r1) << ',' << format_number(p.r2) << ','
        << format_number(p.ed1) << ',' << format_number(p.ed2) << ',' << p.vertex << ',' << (frontier ? 1 : 0)
        << '\n';
  };
  out << kRegionCsvHeader << '\n';
  for (const TaggedPoint& t : b.points) row(t.point, t.weight_index, false);
  for (const TaggedPoint& t : b.frontier) row(t.point, t.weight_index, true);
}

}  // namespace mtrd
