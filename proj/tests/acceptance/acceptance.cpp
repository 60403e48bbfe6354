// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "codetree/gauge.hpp"
#include "codetree/geometry.hpp"
#include "codetree/measure.hpp"
#include "codetree/rifs.hpp"
#include "codetree_cli/cli.hpp"
#include "section_oracle.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace codetree;
using namespace codetree::testing;

namespace {

const std::string kConfigs = CODETREE_CONFIG_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::uint64_t> log_grid(std::uint64_t hi) {
  std::vector<std::uint64_t> out;
  const int decades = static_cast<int>(std::lround(std::log10(static_cast<double>(hi))));
  for (int i = 0; i <= 10 * decades; ++i) {
    const auto k = static_cast<std::uint64_t>(std::llround(std::pow(10.0, i / 10.0)));
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

struct CliRun {
  int code;
  std::string out;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome dimension_oracles() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto rf = random_equicontractive(hash_words(0xacce55ULL, k));
    double elog = 0.0, en = 0.0;
    for (std::size_t i = 0; i < rf.counts.size(); ++i) {
      elog += rf.weights[i] * std::log(rf.counts[i]);
      en += rf.weights[i] * rf.counts[i];
    }
    const double lc = std::log(1.0 / rf.ratio);
    worst = std::max(worst, std::abs(dimension(*rf.family, DimensionModel::homogeneous) - elog / lc));
    worst = std::max(worst, std::abs(dimension(*rf.family, DimensionModel::recursive) - std::log(en) / lc));
  }
  const auto f = worked_family();
  const double hom = dimension(*f, DimensionModel::homogeneous);
  const double rec = dimension(*f, DimensionModel::recursive);
  const double elapsed = seconds_since(t0);
  // Quoted values are truncated to seven decimals.
  const bool worked = std::abs(hom - 0.8154648) < 1e-7 && std::abs(rec - 0.8340438) < 1e-7;
  return {worst <= 1e-9 && worked && elapsed < 1.0,
          fmt("max |err| %.2e; worked %.10f / %.10f; %.3f s", worst, hom, rec, elapsed)};
}

Outcome jensen_ordering() {
  int held = 0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto rf = random_equicontractive(hash_words(0xacce55ULL, k));
    if (dimension(*rf.family, DimensionModel::homogeneous) <= dimension(*rf.family, DimensionModel::recursive)) ++held;
  }
  return {held == 50, fmt("dim_hom <= dim_rec on %d/50", held)};
}

Outcome percolation() {
  const auto t0 = Clock::now();
  const auto r = cli({"percolate", "--p", "0.8", "--seeds", "20", "--max-exponent", "14"});
  const double elapsed = seconds_since(t0);
  if (r.code != 0) return {false, fmt("percolate exited %d", r.code)};
  const double est = std::stod(r.out);
  return {std::abs(est - 0.6781) <= 0.1 && elapsed < 60.0,
          fmt("mean slope %.6f vs 0.6781; %.2f s", est, elapsed)};
}

Outcome section_dp() {
  const auto t0 = Clock::now();
  int checked = 0, skipped = 0;
  double worst = 0.0;
  bool ok = true;
  for (std::uint64_t k = 0; checked < 100; ++k) {
    CounterStream g(hash_words(0x5ec7ULL, k));
    const std::size_t m = 1 + pick_uniform(g(), 3);
    std::vector<Ifs> systems;
    std::vector<double> weights(m, 1.0 / static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> ratios(pick_uniform(g(), 4));
      for (auto& c : ratios) c = 0.1 + 0.5 * g.uniform();
      systems.push_back(ifs_of("S" + std::to_string(i), ratios));
    }
    weights.back() = 1.0 - (static_cast<double>(m) - 1.0) / static_cast<double>(m);
    const auto f = std::make_shared<const RifsFamily>(std::move(systems), weights, 1);
    const ModelSpec model = g.uniform() < 0.5 ? ModelSpec::recursive() : ModelSpec::homogeneous();
    const Realization r(model, g(), f);
    const double s = 0.3 + g.uniform();
    const GaugeFunction h = g.uniform() < 0.5 ? GaugeFunction::power(s) : GaugeFunction::h1(s, 0.5, g.uniform() - 0.5);
    const std::uint64_t dmin = pick_uniform(g(), 4);
    const SectionOracle oracle(r, h, dmin, 4, -20.0);
    if (oracle.count() > 200'000) {
      ++skipped;
      continue;
    }
    const auto dp = section_infimum(r, h, dmin, 4, {-20.0});
    const double best = oracle.minimum();
    if (best == 0.0) {
      ok = ok && dp.value_log == -INFINITY;
    } else {
      const double rel = std::abs(std::exp(dp.value_log) / best - 1.0);
      worst = std::max(worst, rel);
    }
    ++checked;
  }
  const double elapsed = seconds_since(t0);
  return {ok && worst <= 1e-12 && elapsed < 30.0,
          fmt("%d triples (%d over the enumeration limit skipped); max rel err %.2e", checked, skipped, worst)};
}

Outcome level_sum_identity() {
  const auto f = std::make_shared<const RifsFamily>(
      std::vector<Ifs>{ifs_of("A", {0.5}), ifs_of("B", {0.5, 0.5})}, std::vector<double>{0.995, 0.005}, 1);
  const double s = dimension(*f, DimensionModel::homogeneous);
  const std::vector<GaugeFunction> gauges{GaugeFunction::power(s), GaugeFunction::h1(s, 0.05, 0.5)};
  const auto depths = log_grid(1000);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Realization r(ModelSpec::homogeneous(), seed, f);
    for (const auto& h : gauges) {
      const auto a = level_sums_closed_form(r, h, depths);
      const auto b = level_sums_streaming(r, h, depths);
      for (std::size_t i = 0; i < depths.size(); ++i) worst = std::max(worst, std::abs(a.log_sums[i] - b.log_sums[i]));
    }
  }
  return {worst <= 1e-9, fmt("100 seeds, depths <= 1000, max |diff| %.2e", worst)};
}

Outcome lil_calibration() {
  const auto t0 = Clock::now();
  const auto f = worked_family();
  const double s = dimension(*f, DimensionModel::homogeneous);
  DriftConfig cfg;
  cfg.n_realizations = 1000;
  cfg.depths = log_grid(10'000);
  cfg.master_seed = 1;
  const auto rep = drift_experiment(f, ModelSpec::homogeneous(), GaugeFunction::power(s), cfg);
  const double rel = std::abs(rep.increment_variance / 0.041101 - 1.0);
  const double elapsed = seconds_since(t0);
  return {rel <= 0.1 && rep.frac_exit < 0.1 && rep.frac_touch > 0.5 && elapsed < 120.0,
          fmt("var %.6f (rel %.3f); exit %.3f; touch %.3f", rep.increment_variance, rel, rep.frac_exit,
              rep.frac_touch)};
}

struct SeedVote {
  int hits = 0;
  double lo = INFINITY;
  double hi = -INFINITY;
};

// Runs `seeds` ensembles of 1000 realizations to depth 1e4 and counts the
// seeds for which `hit` holds.
SeedVote vote(const GaugeFunction& h, int seeds, const std::function<bool(const DriftReport&, double&)>& hit) {
  const auto f = worked_family();
  DriftConfig cfg;
  cfg.n_realizations = 1000;
  cfg.depths = log_grid(10'000);
  SeedVote v;
  for (int i = 0; i < seeds; ++i) {
    cfg.master_seed = 1000 + static_cast<std::uint64_t>(i);
    const auto rep = drift_experiment(f, ModelSpec::homogeneous(), h, cfg);
    double value = 0.0;
    if (hit(rep, value)) ++v.hits;
    v.lo = std::min(v.lo, value);
    v.hi = std::max(v.hi, value);
  }
  return v;
}

Outcome dichotomy() {
  const auto f = worked_family();
  const double s = dimension(*f, DimensionModel::homogeneous);
  const double beta = default_beta(*f, s);
  const auto down = vote(GaugeFunction::h1(s, beta, 0.5), 30, [](const DriftReport& r, double& v) {
    v = r.rows.back().median;
    return v < -5.0 && r.median_slope < 0.0;
  });
  const auto up = vote(GaugeFunction::h1(s, beta, -0.5), 30, [](const DriftReport& r, double& v) {
    v = r.rows.back().median;
    return v > 5.0 && r.median_slope > 0.0;
  });
  return {down.hits >= 29 && up.hits >= 29,
          fmt("gamma=+0.5: %d/30 (median in [%.1f, %.1f]); gamma=-0.5: %d/30 (median in [%.1f, %.1f])", down.hits,
              down.lo, down.hi, up.hits, up.lo, up.hi)};
}

Outcome packing_direction() {
  const auto f = worked_family();
  const double s = dimension(*f, DimensionModel::homogeneous);
  const double beta = default_beta(*f, s);
  const auto up = vote(GaugeFunction::h1_star(s, beta, 0.5), 30, [](const DriftReport& r, double& v) {
    v = r.rows.back().median_limsup;
    return v > 5.0 && r.limsup_slope > 0.0;
  });
  const auto down = vote(GaugeFunction::h1_star(s, beta, -0.5), 30, [](const DriftReport& r, double& v) {
    v = r.rows.back().median_limsup;
    return v < -5.0 && r.limsup_slope < 0.0;
  });
  return {up.hits >= 29 && down.hits >= 29,
          fmt("eps=+0.5: %d/30 (running max in [%.1f, %.1f]); eps=-0.5: %d/30 (running max in [%.1f, %.1f])",
              up.hits, up.lo, up.hi, down.hits, down.lo, down.hi)};
}

Outcome doubling() {
  const auto f = worked_family();
  const double s = dimension(*f, DimensionModel::homogeneous);
  const auto h = GaugeFunction::h1(s, default_beta(*f, s), 0.0);
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(-std::pow(10.0, 2.0 + i / 10.0));
  const auto ratios = doubling_ratio_scan(h, grid);
  const double two_s = std::pow(2.0, s);
  double rho = 0.0;
  for (double q : ratios) rho = std::max(rho, std::log(q / two_s) / std::sqrt(2.0));
  const double upper = two_s * std::exp(std::sqrt(2.0) * rho);
  bool within = true, decreasing = true;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    within = within && ratios[i] >= two_s * (1.0 - 1e-6) && ratios[i] <= upper;
    if (i > 0) decreasing = decreasing && ratios[i] <= ratios[i - 1];
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  return {within && decreasing,
          fmt("2^s %.6f; ratios in [%.6f, %.6f]; rho %.3g; within %s; decreasing %s", two_s, *lo, *hi, rho,
              within ? "yes" : "no", decreasing ? "yes" : "no")};
}

Outcome gauge_ordering() {
  const double s = dimension(*worked_family(), DimensionModel::homogeneous);
  const double diff =
      GaugeFunction::loglog_power(s, 2.0).eval_log(-1e6) - GaugeFunction::h1(s, 0.05, 0.1).eval_log(-1e6);
  return {diff <= -10.0, fmt("log h_beta - log h1 = %.4f", diff)};
}

Outcome neighbor_bound() {
  const auto f = worked_line_family();
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(std::pow(3.0, -k) * (1 + 1e-9));
  const NaturalMeasure nu(Realization(ModelSpec::recursive(), 11, f));
  const auto rep = mass_distribution_check(GaugeFunction::power(kWorkedRecursive), nu, 1000, grid, 5);
  return {rep.balls_checked == 10'000 && rep.max_neighbor_count <= 12,
          fmt("max neighbours %zu over %zu balls (bound %.0f)", rep.max_neighbor_count, rep.balls_checked,
              rep.neighbor_bound)};
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "codetree_acceptance";
  std::filesystem::create_directories(dir);
  const auto cfg = [](const char* name) { return kConfigs + "/" + name; };
  const std::string fam = cfg("two_ifs.json"), line = cfg("two_ifs_line.json"), hom = cfg("homogeneous.json");
  const std::vector<std::vector<std::string>> commands{
      {"validate", "--family", fam, "--model", hom},
      {"dim", "--family", fam, "--model", cfg("recursive.json")},
      {"levelsum", "--family", fam, "--model", cfg("v_variable.json"), "--depths", "1:12:1", "--seed", "3"},
      {"pack", "--family", fam, "--model", hom, "--gauge", cfg("h1_star_plus.json"), "--depths", "1:10000:log"},
      {"sections", "--family", fam, "--model", cfg("recursive.json"), "--depth-min", "2", "--depth-cap", "5"},
      {"render", "--family", line, "--model", hom, "--n", "500", "--seed", "9"},
      {"render", "--family", cfg("carpet_pair.json"), "--model", hom, "--n", "500", "--raster", "32x32"},
      {"percolate", "--p", "0.8", "--seeds", "5", "--format", "json"},
  };
  int identical = 0, total = 0;
  for (const auto& c : commands) {
    const auto a = cli(c), b = cli(c);
    ++total;
    if (a.code == 0 && a.out == b.out && !a.out.empty()) ++identical;
  }
  std::vector<std::string> outputs;
  for (const char* workers : {"1", "1", "2", "8"}) {
    const auto path = dir / (std::string("drift_") + std::to_string(outputs.size()) + ".csv");
    const auto r = cli({"drift", "--config", cfg("drift_h1_plus.json"), "--n", "300", "--workers", workers, "--out",
                        path.string()});
    outputs.push_back(r.code == 0 ? slurp(path) + slurp(path.string() + ".summary.json") : std::string());
  }
  ++total;
  if (!outputs[0].empty() && std::all_of(outputs.begin(), outputs.end(), [&](const auto& o) { return o == outputs[0]; }))
    ++identical;
  return {identical == total, fmt("%d/%d commands byte-identical (drift with workers 1, 1, 2, 8)", identical, total)};
}

}  // namespace

int main() {
  report(1, "dimension oracles", dimension_oracles);
  report(2, "Jensen ordering", jensen_ordering);
  report(3, "percolation box dimension", percolation);
  report(4, "section DP vs enumeration", section_dp);
  report(5, "level-sum identity", level_sum_identity);
  report(6, "LIL calibration", lil_calibration);
  report(7, "dichotomy direction", dichotomy);
  report(8, "packing direction", packing_direction);
  report(9, "doubling", doubling);
  report(10, "gauge ordering", gauge_ordering);
  report(11, "neighbour bound", neighbor_bound);
  report(12, "determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
