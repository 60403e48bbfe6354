#pragma once

// Numerical Hausdorff / packing machinery on code-trees: gauge level sums,
// LIL envelopes, seeded ensemble drift experiments, the minimal-section
// dynamic program and the mass distribution check.

#include "codetree/code_tree.hpp"
#include "codetree/gauge.hpp"
#include "codetree/natural_measure.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace codetree {

struct LevelSumOptions {
  std::uint64_t node_budget = 100'000'000;  // streamed codings, general path only
};

struct LevelSumSeries {
  std::vector<std::uint64_t> depths;
  std::vector<double> log_sums;             // log sum_{e in level k} h(c_e)
  std::vector<std::optional<double>> envelope_plus;
  std::vector<std::optional<double>> envelope_minus;
  std::vector<bool> in_formula_region;      // every coding at this depth has c_e <= r0
  std::vector<double> limsup_proxy;         // trailing-decade max; packing_level_limsup only
  std::uint64_t seed = 0;
  std::string provenance;
};

// True when level sums have the product closed form (homogeneous, each
// system equicontractive).
bool has_closed_form(const Realization& r);

// Closed form where available, streaming otherwise. `depths` must increase.
LevelSumSeries level_sums(const Realization& r, const GaugeFunction& h, std::span<const std::uint64_t> depths,
                          const LevelSumOptions& options = {});
// Always streams codings; throws ResourceError past the node budget.
LevelSumSeries level_sums_streaming(const Realization& r, const GaugeFunction& h,
                                    std::span<const std::uint64_t> depths, const LevelSumOptions& options = {});
// Requires has_closed_form(r).
LevelSumSeries level_sums_closed_form(const Realization& r, const GaugeFunction& h,
                                      std::span<const std::uint64_t> depths);

// +-sqrt(2 v k log log(v k)); absent where v k <= e.
std::optional<double> lil_envelope_at(double variance, double k);

struct Envelope {
  std::vector<std::optional<double>> plus;
  std::vector<std::optional<double>> minus;
};

Envelope lil_envelope(double variance, std::span<const std::uint64_t> depths);

// Var(log S^s) / eta_hat, eta_hat = |log E_mu[geometric-mean contraction]|.
// Equals Var / |log c~| for equicontractive families.
double default_beta(const RifsFamily& family, double s);

struct DriftConfig {
  std::size_t n_realizations = 1000;
  std::vector<std::uint64_t> depths;
  std::uint64_t master_seed = 0;
  double threshold_below = -20.0;
  double threshold_above = 20.0;
  // LIL band checks: exit beyond exit_factor * env, touch of touch_factor * env,
  // counted at depths with log log(v k) >= min_loglog.
  double exit_factor = 1.5;
  double touch_factor = 0.5;
  double min_loglog = 1.0;
  unsigned workers = 1;
  LevelSumOptions level_sums;
};

struct DriftRow {
  std::uint64_t depth;
  double median;
  double q10;
  double q90;
  std::optional<double> env_plus;
  std::optional<double> env_minus;
  double frac_below;     // running minimum has crossed threshold_below
  double frac_above;     // running maximum has crossed threshold_above
  double median_liminf;  // median of trailing-decade minima
  double median_limsup;  // median of trailing-decade maxima
};

struct DriftReport {
  std::vector<DriftRow> rows;
  double s = 0.0;
  double variance = 0.0;  // Var(log S^s) under mu
  double increment_mean = 0.0;
  double increment_variance = 0.0;
  std::uint64_t increment_count = 0;
  double frac_exit = 0.0;
  double frac_touch = 0.0;
  // Least-squares slopes against log(depth) over the last decade of depths.
  double median_slope = 0.0;
  double liminf_slope = 0.0;
  double limsup_slope = 0.0;
  std::size_t n_realizations = 0;
};

// Seed of realization i in an ensemble.
std::uint64_t ensemble_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

// Ensemble of independent realizations (homogeneous or v_variable). Results
// are bit-identical for any worker count.
DriftReport drift_experiment(std::shared_ptr<const RifsFamily> family, const ModelSpec& model,
                             const GaugeFunction& h, const DriftConfig& config);

struct SectionOptions {
  double log_scale = 0.0;  // evaluates h(t * c_v) with log t = log_scale
  std::uint64_t node_budget = 10'000'000;
  std::uint64_t argmin_node_limit = 10'000;
};

struct SectionValue {
  double value_log = 0.0;
  std::uint64_t depth_min = 0;
  std::optional<std::vector<NodeAddress>> argmin_section;
  std::uint64_t nodes = 0;
};

// inf over sections M (words of length in [depth_min, depth_cap]) of
// sum_{v in M} h(t c_v), on the depth_cap-truncated tree.
SectionValue section_infimum(const Realization& r, const GaugeFunction& h, std::uint64_t depth_min,
                             std::uint64_t depth_cap, const SectionOptions& options = {});

// Level sums with a trailing-decade running maximum as the limsup proxy.
LevelSumSeries packing_level_limsup(const Realization& r, const GaugeFunction& h,
                                    std::span<const std::uint64_t> depths, const LevelSumOptions& options = {});

// min / max over series entries with depth in [k/10, k] that are in the formula region.
std::vector<double> trailing_decade_extreme(std::span<const std::uint64_t> depths, std::span<const double> values,
                                            const std::vector<bool>& active, bool maximum);

struct MassDistributionReport {
  double sup_ratio = 0.0;    // sup nu(B) / h(|B|)
  double lower_bound = 0.0;  // nu(F) / sup_ratio
  std::size_t max_neighbor_count = 0;
  double neighbor_bound = 0.0;  // (4 / c_min)^d
  std::size_t balls_checked = 0;
};

// Balls of radius epsilon * |Delta| centred at nu-samples; stopping-set
// cylinders Xi_epsilon are counted against the neighbour bound.
MassDistributionReport mass_distribution_check(const GaugeFunction& h, const NaturalMeasure& nu,
                                               std::size_t n_balls, std::span<const double> epsilon_grid,
                                               std::uint64_t seed);

// Linear-interpolated quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);
// Least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

}  // namespace codetree
