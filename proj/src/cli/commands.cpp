#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mtrd/cli.hpp"
#include "mtrd/oracle.hpp"
#include "mtrd/spectral.hpp"

namespace mtrd::cli {
namespace {

std::string wall_clock() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Provenance block carried by every JSON output.
json run_info(const RunConfig& cfg, bool outer_bounds) {
  json j;
  j["tool"] = "mtrd";
  j["version"] = kToolVersion;
  j["seed"] = cfg.seed;
  j["wall_clock"] = wall_clock();
  j["config"] = cfg.resolved();
  if (outer_bounds) j["cardinality_caveat"] = kCardinalityCaveat;
  return j;
}

bool has_outer(const std::vector<SetId>& sets) {
  return std::any_of(sets.begin(), sets.end(), [](SetId s) { return s != SetId::In; });
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace

int cmd_region(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ChannelSizes sizes = cfg.channel_sizes();
  TraceOptions opts;
  opts.optimizer.membership_tolerance = cfg.membership_tolerance;
  const auto boundaries =
      trace_regions(cfg.sets, cfg.source, cfg.distortion, sizes, cfg.weights, cfg.budget, cfg.seed, opts);
  const NestingReport report = compare_regions(boundaries, cfg.nesting_tolerance);

  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  json meta = run_info(cfg, has_outer(cfg.sets));
  json files = json::array();
  json regions = json::array();
  for (const RegionBoundary& b : boundaries) {
    const std::string name = "region_" + std::string(set_name(b.meta.set)) + ".csv";
    std::ofstream csv(dir / name, std::ios::binary);
    if (!csv) throw Error("cannot write " + (dir / name).string());
    write_region_csv(csv, b);
    files.push_back(name);
    json r = to_json(b.meta);
    r["csv"] = name;
    r["points"] = b.points.size();
    r["hull_vertices"] = b.hull.size();
    r["frontier_points"] = b.frontier.size();
    regions.push_back(std::move(r));
  }
  meta["files"] = std::move(files);
  meta["regions"] = std::move(regions);
  write_json(dir / "region_meta.json", meta);

  json nesting = run_info(cfg, has_outer(cfg.sets));
  nesting["report"] = to_json(report);
  write_json(dir / "nesting_report.json", nesting);

  out << to_json(report).dump(2) << '\n';
  if (!report.ok()) {
    err << "nesting violated at " << report.violations.size() << " (weight, pair) combinations beyond epsilon "
        << report.epsilon << '\n';
    return kNestingViolation;
  }
  return kOk;
}

int cmd_dpi(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.triple) throw ConfigError("triple", "required by the dpi command");
  const DpiReport r = dpi_check(*cfg.triple);
  json j = run_info(cfg, false);
  j["report"] = to_json(r);
  out << j.dump(2) << '\n';
  if (!r.holds) {
    err << "spectral data-processing condition violated (worst slack " << r.worst_slack
        << "): the triple is not Markov in the given order\n";
    return kNegativeVerdict;
  }
  return kOk;
}

int cmd_feasible(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.channel) throw ConfigError("channel", "required by the feasible command");
  json reports = json::array();
  bool all = true;
  for (SetId s : cfg.sets) {
    const MembershipReport r = check_membership(s, *cfg.channel, cfg.source, cfg.membership_tolerance);
    all = all && r.accepted;
    reports.push_back(to_json(r));
    if (!r.accepted) err << set_name(s) << ": rejected (defect " << r.defect << ")\n";
  }
  json j = run_info(cfg, false);
  j["reports"] = std::move(reports);
  out << j.dump(2) << '\n';
  return all ? kOk : kNegativeVerdict;
}

int cmd_validate(const RunConfig& cfg, bool self_test, std::ostream& out, std::ostream& err) {
  if (cfg.trials < 1) throw ConfigError("trials", "must be >= 1");
  ValidationOptions opts;
  const ChannelSizes sizes = cfg.channel_sizes();
  opts.x1_size = sizes.x1;
  opts.x2_size = sizes.x2;
  opts.tolerance = cfg.membership_tolerance;
  opts.self_test = self_test;
  opts.artifact_dir = (std::filesystem::path(cfg.out) / "validation_failures").string();

  json reports = json::array();
  std::size_t failures = 0;
  for (int n : cfg.letters) {
    const ValidationReport r = validate_single_letter_conditions(cfg.source, n, cfg.trials, cfg.seed, opts);
    failures += r.failures.size();
    for (const auto& f : r.failures) {
      err << "n=" << n << " trial " << f.trial << " seed " << f.seed << " failed (margin " << f.margin
          << ", out1 defect " << f.out1_defect << ")";
      if (!f.artifact.empty()) err << ", channel written to " << f.artifact;
      err << '\n';
    }
    reports.push_back(to_json(r));
  }
  json j = run_info(cfg, false);
  j["reports"] = std::move(reports);
  j["failures"] = failures;
  std::filesystem::create_directories(cfg.out);
  write_json(std::filesystem::path(cfg.out) / "validation_report.json", j);
  out << j.dump(2) << '\n';
  return failures == 0 ? kOk : kNegativeVerdict;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounds on the two-encoder rate-distortion region over finite alphabets", "mtrd"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::optional<std::string> out_dir;
  std::vector<std::string> sets;
  bool self_test = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config path")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--budget", budget, "samples per weight (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--set", sets, "feasible set: in, out1, out3, cap13 (repeatable)")
        ->check(CLI::IsMember({"in", "out1", "out3", "cap13"}));
  };
  CLI::App* region = app.add_subcommand("region", "trace rate regions and check their nesting");
  CLI::App* dpi = app.add_subcommand("dpi", "spectral data-processing check of a triple");
  CLI::App* feasible = app.add_subcommand("feasible", "membership of a channel in the feasible sets");
  CLI::App* validate = app.add_subcommand("validate", "sampled n-letter validation of the spectral conditions");
  for (CLI::App* sub : {region, dpi, feasible, validate}) common(sub);
  validate->add_flag("--self-test", self_test, "add a channel that must be flagged");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (budget) {
      if (*budget < 1) throw ConfigError("budget", "must be an integer >= 1");
      cfg.budget = *budget;
    }
    if (out_dir) cfg.out = *out_dir;
    if (!sets.empty()) {
      cfg.sets.clear();
      for (const auto& s : sets) cfg.sets.push_back(parse_set(s));
    }
    if (region->parsed()) return cmd_region(cfg, out, err);
    if (dpi->parsed()) return cmd_dpi(cfg, out, err);
    if (feasible->parsed()) return cmd_feasible(cfg, out, err);
    return cmd_validate(cfg, self_test, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace mtrd::cli
