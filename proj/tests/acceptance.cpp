// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "mtrd/cli.hpp"
#include "mtrd/feasibility.hpp"
#include "mtrd/io.hpp"
#include "mtrd/oracle.hpp"
#include "mtrd/regions.hpp"
#include "mtrd/spectral.hpp"

using namespace mtrd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s %-22s %s; %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs, limit_s,
              in_time ? "" : " [too slow]");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const double kH01 = 0.4689955935892812;

cli::RunConfig sweep_config(const fs::path& out) {
  cli::RunConfig cfg = cli::load_config(std::string(MTRD_CONFIG_DIR) + "/dsbs_region.json");
  cfg.out = out.string();
  return cfg;
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "mtrd_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  criterion("tilde-spectrum", 1.0, [] {
    double worst = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double p = 0.05 * k;
      const Spectrum s = singular_spectrum(tilde(dsbs_source(p).joint));
      const double second = std::fabs(1.0 - 2.0 * p);
      worst = std::max(worst, std::fabs(s.lambda(1) - 1.0));
      worst = std::max(worst, std::fabs(s.lambda(2) - second));
      if (s.values.size() != 2) worst = std::numeric_limits<double>::infinity();
    }
    const Spectrum s01 = singular_spectrum(tilde(dsbs_source(0.1).joint));
    worst = std::max({worst, std::fabs(s01.lambda(1) - 1.0), std::fabs(s01.lambda(2) - 0.8)});
    return Outcome{worst <= 1e-9, fmt("max error %.3g over p in {0,...,0.5}", worst)};
  });

  criterion("spectral-dpi", 10.0, [] {
    std::mt19937_64 rng(1001);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const ProbTensor t = gen::markov_triple(gen::size_in(1, 4, rng), gen::size_in(1, 4, rng),
                                              gen::size_in(1, 4, rng), rng, trial % 3 == 0 ? 0.25 : 0.0);
      if (!dpi_check(t, 1e-9).holds) ++violations;
    }
    const ProbTensor bsc({"X", "Y", "Z"}, {2, 2, 2}, {0.36, 0.09, 0.01, 0.04, 0.04, 0.01, 0.09, 0.36});
    const double l2 = maximal_correlation(marginal(bsc, {"X", "Z"}));
    const bool ok = violations == 0 && std::fabs(l2 - 0.48) <= 1e-9 && dpi_check(bsc).holds;
    return Outcome{ok, std::to_string(violations) + " violations in 1000 chains, BSC lambda2(XZ) = " +
                           fmt("%.12g", l2)};
  });

  criterion("kronecker-spectrum", 30.0, [] {
    std::mt19937_64 rng(1003);
    double worst = 0.0;
    int multiplicity_failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const ProbTensor p = gen::joint({"X", "Y"}, {gen::size_in(2, 3, rng), gen::size_in(2, 3, rng)}, rng,
                                      trial % 4 == 0 ? 0.2 : 0.0);
      const TildeMatrix base = tilde(p);
      for (int k : {2, 3}) {
        AxisList rows, cols;
        for (int j = 1; j <= k; ++j) {
          rows.push_back("X" + std::to_string(j));
          cols.push_back("Y" + std::to_string(j));
        }
        const TildeMatrix ext = tilde(iid_extend(p, k), rows, cols);
        Eigen::MatrixXd kron = base.values;
        for (int j = 1; j < k; ++j) {
          Eigen::MatrixXd next(kron.rows() * base.values.rows(), kron.cols() * base.values.cols());
          for (long r = 0; r < kron.rows(); ++r)
            for (long c = 0; c < kron.cols(); ++c)
              next.block(r * base.values.rows(), c * base.values.cols(), base.values.rows(), base.values.cols()) =
                  kron(r, c) * base.values;
          kron = next;
        }
        if (ext.values.rows() != kron.rows() || ext.values.cols() != kron.cols()) {
          worst = std::numeric_limits<double>::infinity();
          continue;
        }
        worst = std::max(worst, (ext.values - kron).cwiseAbs().maxCoeff());
        const Spectrum s = singular_spectrum(ext);
        const double l2 = s.lambda(2);
        int mult = 0;
        for (std::size_t i = 1; i < s.values.size(); ++i)
          if (std::fabs(s.values[i] - l2) <= 1e-9) ++mult;
        if (mult < k) ++multiplicity_failures;
      }
    }
    return Outcome{worst <= 1e-10 && multiplicity_failures == 0,
                   fmt("max entry error %.3g", worst) + ", multiplicity failures " +
                       std::to_string(multiplicity_failures)};
  });

  criterion("single-letter", 120.0, [] {
    const SourceModel sources[] = {dsbs_source(0.1), gen::asymmetric3()};
    std::size_t fails = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_out1 = 0.0;
    for (const SourceModel& src : sources)
      for (int n : {1, 2}) {
        const ValidationReport r = validate_single_letter_conditions(src, n, 500, 7 + n);
        fails += r.failures.size();
        worst_margin = std::min(worst_margin, r.worst_margin);
        worst_out1 = std::max(worst_out1, r.worst_out1_defect);
      }
    return Outcome{fails == 0 && worst_margin >= -1e-7 && worst_out1 <= 1e-7,
                   std::to_string(fails) + " failures in 2000 trials, worst spectral margin " +
                       fmt("%.3g", worst_margin) + ", worst out1 defect " + fmt("%.3g", worst_out1)};
  });

  criterion("common-information", 1.0, [] {
    const SourceModel src = dsbs_source(0.1);
    const AuxChannel ch = common_info_channel(src, {0, 1}, {0, 1}, 2);
    const MembershipReport r1 = in_S_out1(ch);
    const MembershipReport r3 = in_S_out3(ch, src);
    const bool ok = r1.accepted && !r3.accepted && r3.defect >= 0.2 - 1e-9;
    return Outcome{ok, std::string("out1 ") + (r1.accepted ? "accepts" : "rejects") + ", out3 " +
                           (r3.accepted ? "accepts" : "rejects") + fmt(" with margin %.12g", r3.defect)};
  });

  criterion("lossless-corner", 60.0, [] {
    const SourceModel src = dsbs_source(0.1);
    const ChannelSizes sizes{2, 2, 2, 2};
    const double target = 1.0 + kH01;
    bool ok = true;
    std::string detail;
    for (SetId set : {SetId::In, SetId::Out1, SetId::Out3, SetId::Cap13}) {
      const WeightedRateResult r = minimize_weighted_rate(set, src, {0.0, 0.0}, sizes, {1.0, 1.0}, 2000, 1);
      if (r.status != OptimizeStatus::Feasible) {
        ok = false;
        detail += std::string(set_name(set)) + "=infeasible ";
        continue;
      }
      if (set == SetId::In) {
        ok = ok && std::fabs(r.value - target) <= 1e-3;
      } else {
        ok = ok && r.value <= target + 1e-6;
      }
      detail += std::string(set_name(set)) + "=" + fmt("%.6f", r.value) + " ";
    }
    return Outcome{ok, detail + fmt("(1+h(0.1) = %.6f)", target)};
  });

  fs::path sweep_dir = scratch / "sweep_a";
  criterion("nesting-sweep", 600.0, [&] {
    std::ostringstream out, err;
    const int code = cli::cmd_region(sweep_config(sweep_dir), out, err);
    const json report = json::parse(slurp(sweep_dir / "nesting_report.json"))["report"];
    std::vector<std::string> sets;
    for (const auto& s : report["sets"]) sets.push_back(s.get<std::string>());
    auto column = [&](const std::string& name) {
      for (std::size_t i = 0; i < sets.size(); ++i)
        if (sets[i] == name) return i;
      throw std::runtime_error("missing set " + name);
    };
    const std::size_t ci = column("in"), c13 = column("cap13"), c1 = column("out1"), c3 = column("out3");
    auto value = [](const json& v) {
      return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
    };
    std::size_t bad_rows = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& row : report["rows"]) {
      const auto& v = row["values"];
      const double in = value(v[ci]), cap = value(v[c13]), outer = std::max(value(v[c1]), value(v[c3]));
      const double gap = std::max(cap - in, outer - cap);
      worst = std::max(worst, gap);
      if (!(in >= cap - 1e-4 && cap >= outer - 1e-4)) ++bad_rows;
    }
    const bool ok = code == cli::kOk && bad_rows == 0 && report["rows"].size() == 17;
    return Outcome{ok, "exit " + std::to_string(code) + ", " + std::to_string(report["rows"].size()) +
                           " weights, " + std::to_string(bad_rows) + " ordering violations, largest gap " +
                           fmt("%.3g", worst)};
  });

  criterion("oracle-equivalence", 60.0, [] {
    struct Instance {
      SourceModel src;
      DistortionPair d;
      WeightPair w;
    };
    const SourceModel indep(ProbTensor({"U", "V"}, {2, 2}, {0.25, 0.25, 0.25, 0.25}), hamming_distortion(2, 2),
                            hamming_distortion(2, 2));
    // Instances whose optimum is attained by a channel on the 0.25 grid.
    std::vector<Instance> cases;
    for (double p : {0.1, 0.2, 0.3})
      for (WeightPair w : {WeightPair{1, 1}, WeightPair{1, 0.5}, WeightPair{0.25, 1}})
        cases.push_back({dsbs_source(p), {0.0, 0.0}, w});
    cases.push_back({dsbs_source(0.1), {0.5, 0.5}, {1, 1}});
    cases.push_back({indep, {0.0, 0.5}, {1, 2}});
    cases.push_back({indep, {0.5, 0.0}, {2, 1}});
    cases.push_back({indep, {0.0, 0.0}, {0.7, 0.3}});
    double worst = 0.0;
    std::size_t k = 0;
    for (const Instance& c : cases) {
      const GridSearchResult g = grid_search_weighted_rate(c.src, c.d, {2, 2, 2, 2}, c.w, 0.25);
      const WeightedRateResult r = minimize_weighted_rate(SetId::In, c.src, c.d, {2, 2, 2, 2}, c.w, 500, ++k);
      if (!g.feasible || r.status != OptimizeStatus::Feasible) {
        worst = std::numeric_limits<double>::infinity();
        continue;
      }
      worst = std::max(worst, std::fabs(g.value - r.value));
    }

    std::mt19937_64 rng(1013);
    int mismatches = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t nu = gen::size_in(2, 3, rng), nv = gen::size_in(2, 3, rng);
      const SourceModel s = gen::source(nu, nv, rng);
      const ProbTensor joint =
          join(s.joint, gen::free_channel({nu, nv, gen::size_in(1, 2, rng), gen::size_in(1, 2, rng)}, rng, 0.2));
      if (!exhaustive_decoder_check(joint, s).matches) ++mismatches;
    }
    return Outcome{worst <= 1e-9 && mismatches == 0,
                   fmt("max |optimizer - grid| %.3g over ", worst) + std::to_string(cases.size()) +
                       " instances, decoder mismatches " + std::to_string(mismatches) + "/20"};
  });

  criterion("determinism", 600.0, [&] {
    const fs::path again = scratch / "sweep_b";
    std::ostringstream out, err;
    if (!fs::exists(sweep_dir / "region_in.csv")) cli::cmd_region(sweep_config(sweep_dir), out, err);
    cli::cmd_region(sweep_config(again), out, err);
    std::size_t same = 0, total = 0;
    for (const char* set : {"in", "out1", "out3", "cap13"}) {
      const std::string name = "region_" + std::string(set) + ".csv";
      ++total;
      const std::string a = slurp(sweep_dir / name);
      if (!a.empty() && a == slurp(again / name)) ++same;
    }
    return Outcome{same == total, std::to_string(same) + "/" + std::to_string(total) + " CSVs byte-identical"};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
