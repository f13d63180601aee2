#include <cmath>
#include <fstream>

#include "mtrd/cli.hpp"
#include "mtrd/oracle.hpp"

namespace mtrd::cli {
namespace {

template <class Fn>
auto guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(name, e.what());
  }
}

std::size_t positive_size(const json& v, const std::string& name, std::size_t min = 1) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min)) {
    throw ConfigError(name, "must be an integer >= " + std::to_string(min));
  }
  return v.get<std::size_t>();
}

double finite_number(const json& v, const std::string& name) {
  if (!v.is_number() || !std::isfinite(v.get<double>())) throw ConfigError(name, "must be a finite number");
  return v.get<double>();
}

std::vector<std::size_t> label_map(const json& v, const std::string& name, std::size_t n) {
  if (!v.is_array() || v.size() != n) throw ConfigError(name, "must list one label per source symbol");
  std::vector<std::size_t> out;
  for (const auto& x : v) out.push_back(positive_size(x, name, 0));
  return out;
}

SourceModel parse_source(const json& j, std::size_t u_hat, std::size_t v_hat, const json& distortion) {
  const ProbTensor joint = guarded("source", [&] {
    if (!j.is_object()) throw ConfigError("source", "must be an object");
    if (j.contains("preset")) {
      if (j["preset"] != "dsbs") throw ConfigError("source.preset", "unknown preset (expected \"dsbs\")");
      if (!j.contains("p")) throw ConfigError("source.p", "required for the dsbs preset");
      const double p = finite_number(j["p"], "source.p");
      if (p < 0.0 || p > 1.0) throw ConfigError("source.p", "must lie in [0, 1]");
      return dsbs_joint(p);
    }
    if (!j.contains("joint")) throw ConfigError("source", "needs \"preset\" or \"joint\"");
    ProbTensor t = guarded("source.joint", [&] { return tensor_from_json(j["joint"]); });
    if (t.rank() != 2) throw ConfigError("source.joint", "must have exactly two axes");
    return ProbTensor({"U", "V"}, t.sizes(), std::vector<double>(t.values().begin(), t.values().end()));
  });
  const std::size_t nu = joint.sizes()[0];
  const std::size_t nv = joint.sizes()[1];

  Eigen::MatrixXd d1, d2;
  if (distortion.is_null() || distortion == "hamming") {
    d1 = hamming_distortion(nu, u_hat == 0 ? nu : u_hat);
    d2 = hamming_distortion(nv, v_hat == 0 ? nv : v_hat);
  } else if (distortion.is_object()) {
    if (!distortion.contains("d1")) throw ConfigError("distortion.d1", "required");
    if (!distortion.contains("d2")) throw ConfigError("distortion.d2", "required");
    d1 = guarded("distortion.d1", [&] { return matrix_from_json(distortion["d1"]); });
    d2 = guarded("distortion.d2", [&] { return matrix_from_json(distortion["d2"]); });
    if (u_hat != 0 && static_cast<std::size_t>(d1.cols()) != u_hat) throw ConfigError("sizes.u_hat", "does not match d1");
    if (v_hat != 0 && static_cast<std::size_t>(d2.cols()) != v_hat) throw ConfigError("sizes.v_hat", "does not match d2");
  } else {
    throw ConfigError("distortion", "must be \"hamming\" or {\"d1\", \"d2\"}");
  }
  return guarded("distortion", [&] { return SourceModel(joint, d1, d2); });
}

AuxChannel parse_channel(const json& j, const SourceModel& src) {
  if (!j.is_object()) throw ConfigError("channel", "must be an object");
  if (!j.contains("preset")) return guarded("channel", [&] { return channel_from_json(j); });
  const std::string preset = j["preset"].is_string() ? j["preset"].get<std::string>() : "";
  if (preset == "common_info") {
    const std::size_t s = j.contains("s_size") ? positive_size(j["s_size"], "channel.s_size") : 2;
    std::vector<std::size_t> f1(src.u_size()), f2(src.v_size());
    for (std::size_t i = 0; i < f1.size(); ++i) f1[i] = i;
    for (std::size_t i = 0; i < f2.size(); ++i) f2[i] = i;
    if (j.contains("f1")) f1 = label_map(j["f1"], "channel.f1", src.u_size());
    if (j.contains("f2")) f2 = label_map(j["f2"], "channel.f2", src.v_size());
    return common_info_channel(src, f1, f2, s);
  }
  if (preset == "product") {
    if (!j.contains("a")) throw ConfigError("channel.a", "required for the product preset");
    if (!j.contains("b")) throw ConfigError("channel.b", "required for the product preset");
    const Eigen::MatrixXd a = guarded("channel.a", [&] { return matrix_from_json(j["a"]); });
    const Eigen::MatrixXd b = guarded("channel.b", [&] { return matrix_from_json(j["b"]); });
    if (static_cast<std::size_t>(a.rows()) != src.u_size()) throw ConfigError("channel.a", "needs one row per u");
    if (static_cast<std::size_t>(b.rows()) != src.v_size()) throw ConfigError("channel.b", "needs one row per v");
    const ChannelSizes sizes{src.u_size(), src.v_size(), static_cast<std::size_t>(a.cols()),
                             static_cast<std::size_t>(b.cols())};
    std::vector<double> av, bv;
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) av.push_back(a(r, c));
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) bv.push_back(b(r, c));
    return guarded("channel", [&] { return AuxChannel::product(sizes, av, bv); });
  }
  throw ConfigError("channel.preset", "unknown preset (expected \"common_info\" or \"product\")");
}

}  // namespace

ChannelSizes RunConfig::channel_sizes() const {
  return {source.u_size(), source.v_size(), x1_size == 0 ? source.u_size() + 1 : x1_size,
          x2_size == 0 ? source.v_size() + 1 : x2_size};
}

json RunConfig::resolved() const {
  const ChannelSizes s = channel_sizes();
  json j;
  j["source"] = to_json(source);
  j["D"] = {distortion.d1, distortion.d2};
  json names = json::array();
  for (SetId id : sets) names.push_back(std::string(set_name(id)));
  j["sets"] = std::move(names);
  j["sizes"] = {{"x1", s.x1}, {"x2", s.x2}, {"u_hat", source.u_hat_size()}, {"v_hat", source.v_hat_size()}};
  j["weights"] = weights;
  j["budget"] = budget;
  j["seed"] = seed;
  j["tolerances"] = {{"membership", membership_tolerance}, {"nesting", nesting_tolerance}};
  j["out"] = out;
  if (triple) j["triple"] = to_json(*triple);
  if (channel) j["channel"] = to_json(*channel);
  j["n"] = letters;
  j["trials"] = trials;
  return j;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  static const char* const known[] = {"source", "distortion", "D",       "sets",    "sizes", "weights", "budget",
                                      "seed",   "tolerances", "out",     "triple",  "channel", "n",     "trials"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError(key, "unknown field");
    }
  }

  RunConfig cfg;
  cfg.raw = j;

  std::size_t u_hat = 0, v_hat = 0;
  if (j.contains("sizes")) {
    const json& s = j["sizes"];
    if (!s.is_object()) throw ConfigError("sizes", "must be an object");
    if (s.contains("x1")) cfg.x1_size = positive_size(s["x1"], "sizes.x1");
    if (s.contains("x2")) cfg.x2_size = positive_size(s["x2"], "sizes.x2");
    if (s.contains("u_hat")) u_hat = positive_size(s["u_hat"], "sizes.u_hat");
    if (s.contains("v_hat")) v_hat = positive_size(s["v_hat"], "sizes.v_hat");
  }
  const json source = j.contains("source") ? j["source"] : json{{"preset", "dsbs"}, {"p", 0.1}};
  cfg.source = parse_source(source, u_hat, v_hat, j.contains("distortion") ? j["distortion"] : json());

  if (j.contains("D")) {
    const json& d = j["D"];
    if (!d.is_array() || d.size() != 2) throw ConfigError("D", "must be a pair [d1, d2]");
    cfg.distortion = {finite_number(d[0], "D"), finite_number(d[1], "D")};
    if (cfg.distortion.d1 < 0.0 || cfg.distortion.d2 < 0.0) throw ConfigError("D", "entries must be >= 0");
  }
  if (j.contains("sets")) {
    const json& s = j["sets"];
    if (!s.is_array() || s.empty()) throw ConfigError("sets", "must be a nonempty array");
    cfg.sets.clear();
    for (const auto& name : s) {
      if (!name.is_string()) throw ConfigError("sets", "entries must be strings");
      cfg.sets.push_back(guarded("sets", [&] { return parse_set(name.get<std::string>()); }));
    }
  }
  if (j.contains("weights")) cfg.weights = positive_size(j["weights"], "weights", 2);
  if (j.contains("budget")) cfg.budget = positive_size(j["budget"], "budget", 1);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("tolerances", "must be an object");
    if (t.contains("membership")) cfg.membership_tolerance = finite_number(t["membership"], "tolerances.membership");
    if (t.contains("nesting")) cfg.nesting_tolerance = finite_number(t["nesting"], "tolerances.nesting");
    if (cfg.membership_tolerance < 0.0) throw ConfigError("tolerances.membership", "must be >= 0");
    if (cfg.nesting_tolerance < 0.0) throw ConfigError("tolerances.nesting", "must be >= 0");
  }
  if (j.contains("out")) {
    if (!j["out"].is_string() || j["out"].get<std::string>().empty()) throw ConfigError("out", "must be a path");
    cfg.out = j["out"].get<std::string>();
  }
  if (j.contains("triple")) {
    cfg.triple = guarded("triple", [&] { return tensor_from_json(j["triple"]); });
    if (cfg.triple->rank() != 3) throw ConfigError("triple", "must have exactly three axes");
  }
  if (j.contains("channel")) {
    cfg.channel = parse_channel(j["channel"], cfg.source);
    if (cfg.channel->sizes().u != cfg.source.u_size() || cfg.channel->sizes().v != cfg.source.v_size()) {
      throw ConfigError("channel", "input alphabets do not match the source");
    }
  }
  if (j.contains("n")) {
    const json& n = j["n"];
    if (!n.is_array() || n.empty()) throw ConfigError("n", "must be a nonempty array");
    cfg.letters.clear();
    for (const auto& x : n) {
      if (!x.is_number_integer() || x.get<int>() < 1 || x.get<int>() > kMaxLetters) {
        throw ConfigError("n", "entries must be 1, 2 or 3");
      }
      cfg.letters.push_back(x.get<int>());
    }
  }
  if (j.contains("trials")) cfg.trials = positive_size(j["trials"], "trials", 1);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace mtrd::cli
