#include "codetree/measure.hpp"

#include "codetree/errors.hpp"
#include "codetree/geometry.hpp"
#include "codetree/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace codetree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Streaming log-sum-exp.
class LogSumExp {
 public:
  void add(double x) noexcept {
    if (x == kNegInf) return;
    if (x <= max_) {
      acc_ += std::exp(x - max_);
    } else {
      acc_ = acc_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const noexcept { return max_ == kNegInf ? kNegInf : max_ + std::log(acc_); }

 private:
  double max_ = kNegInf;
  double acc_ = 0.0;
};

void check_depths(std::span<const std::uint64_t> depths) {
  if (!std::is_sorted(depths.begin(), depths.end()) ||
      std::adjacent_find(depths.begin(), depths.end()) != depths.end()) {
    throw ParameterError("depths must be strictly increasing");
  }
}

std::string provenance_of(const Realization& r, const GaugeFunction& h) {
  return std::string(to_string(r.model().kind)) + " seed=" + std::to_string(r.seed()) + " gauge=" + h.describe();
}

void attach_envelope(LevelSumSeries& series, const RifsFamily& family, double s) {
  const double v = log_moment_stats(family, s).variance;
  if (std::isfinite(v) && v > 0.0) {
    auto env = lil_envelope(v, series.depths);
    series.envelope_plus = std::move(env.plus);
    series.envelope_minus = std::move(env.minus);
  } else {
    series.envelope_plus.assign(series.depths.size(), std::nullopt);
    series.envelope_minus.assign(series.depths.size(), std::nullopt);
  }
}

struct StreamedLevels {
  std::vector<LogSumExp> gauge;       // per requested depth
  std::vector<double> max_log_ratio;  // per requested depth
  std::vector<LogSumExp> power;       // per level 0..K when requested
};

// One depth-first pass to the deepest requested level.
StreamedLevels stream_levels(const Realization& r, const GaugeFunction& h, std::span<const std::uint64_t> depths,
                             const std::optional<double>& power_s, std::uint64_t budget) {
  const std::uint64_t K = depths.empty() ? 0 : depths.back();
  std::vector<int> slot(K + 1, -1);
  for (std::size_t i = 0; i < depths.size(); ++i) slot[depths[i]] = static_cast<int>(i);

  StreamedLevels out;
  out.gauge.resize(depths.size());
  out.max_log_ratio.assign(depths.size(), kNegInf);
  if (power_s) out.power.resize(K + 1);

  const RifsFamily& family = r.family();
  if (r.model().kind == ModelKind::homogeneous) {
    // Exact level sizes are known up front.
    double total = 0.0;
    double level = 1.0;
    NodeState s = r.root();
    for (std::uint64_t d = 1; d <= K; ++d) {
      level *= static_cast<double>(family.system(r.label(s)).size());
      total += level;
      if (total > static_cast<double>(budget)) {
        throw ResourceError("level-sum node budget exceeded at depth " + std::to_string(d));
      }
      s = r.child(s, 0);
    }
  }

  struct Frame {
    NodeState node;
    std::uint64_t depth;
    double log_ratio;
    std::uint32_t system;
    std::uint32_t n;
    std::uint32_t next;
  };
  const auto visit = [&](std::uint64_t depth, double log_ratio) {
    if (slot[depth] >= 0) {
      out.gauge[slot[depth]].add(h.eval_log(log_ratio));
      out.max_log_ratio[slot[depth]] = std::max(out.max_log_ratio[slot[depth]], log_ratio);
    }
    if (power_s) out.power[depth].add(*power_s * log_ratio);
  };
  const auto make = [&](const NodeState& node, std::uint64_t depth, double log_ratio) {
    Frame f{node, depth, log_ratio, 0, 0, 0};
    if (depth < K) {
      f.system = static_cast<std::uint32_t>(r.label(node));
      f.n = static_cast<std::uint32_t>(family.system(f.system).size());
    }
    return f;
  };

  std::uint64_t count = 0;
  std::vector<Frame> stack;
  visit(0, 0.0);
  stack.push_back(make(r.root(), 0, 0.0));
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next >= f.n) {
      stack.pop_back();
      continue;
    }
    const std::uint32_t j = f.next++;
    const double lr = f.log_ratio + family.system(f.system).maps[j].log_ratio();
    const std::uint64_t depth = f.depth + 1;
    if (++count > budget) {
      throw ResourceError("level-sum node budget exceeded at depth " + std::to_string(depth));
    }
    visit(depth, lr);
    Frame child = make(r.child(f.node, j), depth, lr);
    stack.push_back(child);
  }
  return out;
}

}  // namespace

bool has_closed_form(const Realization& r) {
  return r.model().kind == ModelKind::homogeneous && r.family().equicontractive_systems();
}

LevelSumSeries level_sums_closed_form(const Realization& r, const GaugeFunction& h,
                                      std::span<const std::uint64_t> depths) {
  check_depths(depths);
  if (!has_closed_form(r)) {
    throw PreconditionError("closed-form level sums need a homogeneous model with equicontractive systems");
  }
  const RifsFamily& family = r.family();
  LevelSumSeries series;
  series.depths.assign(depths.begin(), depths.end());
  series.seed = r.seed();
  series.provenance = provenance_of(r, h);

  double log_n = 0.0;
  double log_c = 0.0;
  NodeState s = r.root();
  std::uint64_t level = 0;
  for (const auto d : depths) {
    for (; level < d; ++level) {
      const auto& sys = family.system(r.label(s));
      if (sys.size() == 0) {
        log_n = kNegInf;
      } else {
        log_n += std::log(static_cast<double>(sys.size()));
        log_c += sys.maps.front().log_ratio();
      }
      s = r.child(s, 0);
    }
    series.log_sums.push_back(log_n + h.eval_log(log_c));
    series.in_formula_region.push_back(h.in_formula_region(log_c));
  }
  attach_envelope(series, family, h.s());
  return series;
}

LevelSumSeries level_sums_streaming(const Realization& r, const GaugeFunction& h,
                                    std::span<const std::uint64_t> depths, const LevelSumOptions& options) {
  check_depths(depths);
  LevelSumSeries series;
  series.depths.assign(depths.begin(), depths.end());
  series.seed = r.seed();
  series.provenance = provenance_of(r, h);
  const auto streamed = stream_levels(r, h, depths, std::nullopt, options.node_budget);
  for (std::size_t i = 0; i < depths.size(); ++i) {
    series.log_sums.push_back(streamed.gauge[i].value());
    series.in_formula_region.push_back(h.in_formula_region(streamed.max_log_ratio[i]));
  }
  attach_envelope(series, r.family(), h.s());
  return series;
}

LevelSumSeries level_sums(const Realization& r, const GaugeFunction& h, std::span<const std::uint64_t> depths,
                          const LevelSumOptions& options) {
  return has_closed_form(r) ? level_sums_closed_form(r, h, depths) : level_sums_streaming(r, h, depths, options);
}

std::optional<double> lil_envelope_at(double variance, double k) {
  const double vk = variance * k;
  if (!(vk > std::numbers::e)) return std::nullopt;
  return std::sqrt(2.0 * vk * std::log(std::log(vk)));
}

Envelope lil_envelope(double variance, std::span<const std::uint64_t> depths) {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw ParameterError("LIL envelope needs variance > 0");
  Envelope env;
  for (const auto k : depths) {
    const auto e = lil_envelope_at(variance, static_cast<double>(k));
    env.plus.push_back(e);
    env.minus.push_back(e ? std::optional<double>(-*e) : std::nullopt);
  }
  return env;
}

double default_beta(const RifsFamily& family, double s) {
  const double v = log_moment_stats(family, s).variance;
  double expected_gm = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& sys = family.system(i);
    if (family.weights()[i] <= 0.0 || sys.size() == 0) continue;
    double mean_log = 0.0;
    for (const auto& m : sys.maps) mean_log += m.log_ratio();
    expected_gm += family.weights()[i] * std::exp(mean_log / static_cast<double>(sys.size()));
  }
  const double eta = std::abs(std::log(expected_gm));
  if (!(eta > 0.0)) throw PreconditionError("default beta needs a contracting family");
  return v / eta;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  if (!std::isfinite(values[lo]) || !std::isfinite(values[hi])) return frac < 0.5 ? values[lo] : values[hi];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return kNaN;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

std::vector<double> trailing_decade_extreme(std::span<const std::uint64_t> depths, std::span<const double> values,
                                            const std::vector<bool>& active, bool maximum) {
  // Depths increase, so the window [k/10, k] only slides right: monotone deque.
  std::vector<double> out(depths.size(), kNaN);
  std::deque<std::size_t> window;
  const auto dominates = [&](double a, double b) { return maximum ? a >= b : a <= b; };
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (active[i]) {
      while (!window.empty() && dominates(values[i], values[window.back()])) window.pop_back();
      window.push_back(i);
    }
    while (!window.empty() && depths[window.front()] * 10 < depths[i]) window.pop_front();
    if (!window.empty()) out[i] = values[window.front()];
  }
  return out;
}

LevelSumSeries packing_level_limsup(const Realization& r, const GaugeFunction& h,
                                    std::span<const std::uint64_t> depths, const LevelSumOptions& options) {
  LevelSumSeries series = level_sums(r, h, depths, options);
  series.limsup_proxy = trailing_decade_extreme(series.depths, series.log_sums, series.in_formula_region, true);
  return series;
}

// ---------------------------------------------------------------------------
// Ensembles

std::uint64_t ensemble_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return hash_words(mix64(master_seed), 0xd1f7ULL, index);
}

namespace {

struct PathResult {
  std::vector<double> log_sums;
  std::vector<bool> active;
  std::uint64_t inc_count = 0;
  double inc_mean = 0.0;
  double inc_m2 = 0.0;
  bool exited = false;
  bool touched = false;
};

void welford(PathResult& p, double x) {
  ++p.inc_count;
  const double d = x - p.inc_mean;
  p.inc_mean += d / static_cast<double>(p.inc_count);
  p.inc_m2 += d * (x - p.inc_mean);
}

PathResult run_path(const Realization& r, const GaugeFunction& h, const DriftConfig& cfg) {
  PathResult p;
  const double s = h.s();
  const auto& depths = cfg.depths;
  if (has_closed_form(r)) {
    const RifsFamily& family = r.family();
    double log_n = 0.0;
    double log_c = 0.0;
    NodeState st = r.root();
    std::size_t next = 0;
    const std::uint64_t K = depths.back();
    for (std::uint64_t level = 1; level <= K; ++level) {
      const auto& sys = family.system(r.label(st));
      const double ln = sys.size() ? std::log(static_cast<double>(sys.size())) : kNegInf;
      const double lc = sys.size() ? sys.maps.front().log_ratio() : 0.0;
      log_n += ln;
      log_c += lc;
      welford(p, ln + s * lc);
      st = r.child(st, 0);
      for (; next < depths.size() && depths[next] == level; ++next) {
        p.log_sums.push_back(log_n + h.eval_log(log_c));
        p.active.push_back(h.in_formula_region(log_c));
      }
    }
    // depth 0 requested
    if (next < depths.size()) throw ParameterError("depth grid could not be aligned");
    if (!depths.empty() && depths.front() == 0) {
      // unreachable with the loop above; depth 0 is rejected in drift_experiment
    }
  } else {
    const auto streamed = stream_levels(r, h, depths, s, cfg.level_sums.node_budget);
    for (std::size_t i = 0; i < depths.size(); ++i) {
      p.log_sums.push_back(streamed.gauge[i].value());
      p.active.push_back(h.in_formula_region(streamed.max_log_ratio[i]));
    }
    for (std::size_t level = 1; level < streamed.power.size(); ++level) {
      welford(p, streamed.power[level].value() - streamed.power[level - 1].value());
    }
  }
  return p;
}

}  // namespace

DriftReport drift_experiment(std::shared_ptr<const RifsFamily> family, const ModelSpec& model,
                             const GaugeFunction& h, const DriftConfig& cfg) {
  if (!family) throw ParameterError("drift experiment needs a family");
  if (model.kind != ModelKind::homogeneous && model.kind != ModelKind::v_variable) {
    throw UnsupportedModelError("drift experiments run on homogeneous or v_variable models");
  }
  if (cfg.depths.empty() || cfg.depths.front() == 0) throw ParameterError("depths must be positive");
  check_depths(cfg.depths);
  if (cfg.n_realizations == 0) throw ParameterError("n_realizations must be positive");
  if (validate(*family, DimensionModel::homogeneous).almost_deterministic_at) {
    throw PreconditionError("family is almost deterministic: level sums have no drift");
  }

  const std::size_t n = cfg.n_realizations;
  const std::size_t m = cfg.depths.size();
  const double v = log_moment_stats(*family, h.s()).variance;

  std::vector<PathResult> paths(n);
  const unsigned workers = std::max(1U, std::min<unsigned>(cfg.workers, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(workers);
  const auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < n; i += workers) {
        const Realization r(model, ensemble_seed(cfg.master_seed, i), family);
        paths[i] = run_path(r, h, cfg);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  DriftReport report;
  report.s = h.s();
  report.variance = v;
  report.n_realizations = n;

  std::vector<std::optional<double>> env(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (std::isfinite(v) && v > 0.0) env[k] = lil_envelope_at(v, static_cast<double>(cfg.depths[k]));
  }

  // Per-path band checks and running extremes.
  std::vector<std::vector<double>> liminf(n), limsup(n);
  std::vector<std::vector<char>> below(n), above(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = paths[i];
    liminf[i] = trailing_decade_extreme(cfg.depths, p.log_sums, p.active, false);
    limsup[i] = trailing_decade_extreme(cfg.depths, p.log_sums, p.active, true);
    below[i].assign(m, 0);
    above[i].assign(m, 0);
    double run_min = std::numeric_limits<double>::infinity();
    double run_max = kNegInf;
    for (std::size_t k = 0; k < m; ++k) {
      const double x = p.log_sums[k];
      if (p.active[k]) {
        run_min = std::min(run_min, x);
        run_max = std::max(run_max, x);
        if (env[k] && std::log(std::log(v * static_cast<double>(cfg.depths[k]))) >= cfg.min_loglog) {
          if (std::abs(x) > cfg.exit_factor * *env[k]) p.exited = true;
          if (std::abs(x) >= cfg.touch_factor * *env[k]) p.touched = true;
        }
      }
      below[i][k] = run_min <= cfg.threshold_below;
      above[i][k] = run_max >= cfg.threshold_above;
    }
  }

  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t exits = 0;
  std::size_t touches = 0;
  for (const auto& p : paths) {
    if (p.inc_count) {
      const auto total = count + p.inc_count;
      const double delta = p.inc_mean - mean;
      mean += delta * static_cast<double>(p.inc_count) / static_cast<double>(total);
      m2 += p.inc_m2 + delta * delta * static_cast<double>(count) * static_cast<double>(p.inc_count) /
                           static_cast<double>(total);
      count = total;
    }
    exits += p.exited;
    touches += p.touched;
  }
  report.increment_count = count;
  report.increment_mean = mean;
  report.increment_variance = count > 1 ? m2 / static_cast<double>(count - 1) : kNaN;
  report.frac_exit = static_cast<double>(exits) / static_cast<double>(n);
  report.frac_touch = static_cast<double>(touches) / static_cast<double>(n);

  const auto finite_median = [](std::vector<double> xs) {
    xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return std::isnan(x); }), xs.end());
    return quantile(std::move(xs), 0.5);
  };
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> xs(n), lo(n), hi(n);
    std::size_t nb = 0, na = 0;
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = paths[i].log_sums[k];
      lo[i] = liminf[i][k];
      hi[i] = limsup[i][k];
      nb += below[i][k];
      na += above[i][k];
    }
    DriftRow row;
    row.depth = cfg.depths[k];
    row.median = quantile(xs, 0.5);
    row.q10 = quantile(xs, 0.1);
    row.q90 = quantile(xs, 0.9);
    row.env_plus = env[k];
    row.env_minus = env[k] ? std::optional<double>(-*env[k]) : std::nullopt;
    row.frac_below = static_cast<double>(nb) / static_cast<double>(n);
    row.frac_above = static_cast<double>(na) / static_cast<double>(n);
    row.median_liminf = finite_median(std::move(lo));
    row.median_limsup = finite_median(std::move(hi));
    report.rows.push_back(row);
  }

  const auto slope_of = [&](auto member) {
    std::vector<double> x, y;
    const double K = static_cast<double>(cfg.depths.back());
    for (const auto& row : report.rows) {
      const double val = row.*member;
      if (static_cast<double>(row.depth) * 10.0 >= K && std::isfinite(val)) {
        x.push_back(std::log(static_cast<double>(row.depth)));
        y.push_back(val);
      }
    }
    return least_squares_slope(x, y);
  };
  report.median_slope = slope_of(&DriftRow::median);
  report.liminf_slope = slope_of(&DriftRow::median_liminf);
  report.limsup_slope = slope_of(&DriftRow::median_limsup);
  return report;
}

// ---------------------------------------------------------------------------
// Sections

namespace {

struct SectionWalker {
  const Realization& r;
  const GaugeFunction& h;
  std::uint64_t depth_min;
  std::uint64_t depth_cap;
  double log_scale;

  double leaf_value(double log_ratio) const { return h.eval_log(log_scale + log_ratio); }

  double combine(std::uint64_t depth, double log_ratio, double children) const {
    if (depth < depth_min) return children;
    return std::min(leaf_value(log_ratio), children);
  }

  // Recursive variant that also records a minimizing section.
  double with_argmin(const NodeState& node, std::uint64_t depth, double log_ratio, NodeAddress& path,
                     std::vector<NodeAddress>& out) const {
    if (depth >= depth_cap) {
      out.push_back(path);
      return leaf_value(log_ratio);
    }
    const auto sys = r.label(node);
    const auto& maps = r.family().system(sys).maps;
    LogSumExp sum;
    std::vector<NodeAddress> below;
    for (std::uint32_t j = 0; j < maps.size(); ++j) {
      path.push_back(j);
      sum.add(with_argmin(r.child(node, j), depth + 1, log_ratio + maps[j].log_ratio(), path, below));
      path.pop_back();
    }
    const double children = sum.value();
    if (depth >= depth_min && leaf_value(log_ratio) <= children) {
      out.push_back(path);
      return leaf_value(log_ratio);
    }
    out.insert(out.end(), below.begin(), below.end());
    return children;
  }
};

}  // namespace

SectionValue section_infimum(const Realization& r, const GaugeFunction& h, std::uint64_t depth_min,
                             std::uint64_t depth_cap, const SectionOptions& options) {
  if (depth_min > depth_cap) throw ParameterError("section_infimum requires depth_min <= depth_cap");
  const SectionWalker walker{r, h, depth_min, depth_cap, options.log_scale};
  const RifsFamily& family = r.family();

  struct Frame {
    NodeState node;
    std::uint64_t depth;
    double log_ratio;
    std::uint32_t system;
    std::uint32_t n;
    std::uint32_t next;
    LogSumExp children;
  };
  const auto make = [&](const NodeState& node, std::uint64_t depth, double log_ratio) {
    Frame f{node, depth, log_ratio, 0, 0, 0, {}};
    if (depth < depth_cap) {
      f.system = static_cast<std::uint32_t>(r.label(node));
      f.n = static_cast<std::uint32_t>(family.system(f.system).size());
    }
    return f;
  };

  std::uint64_t nodes = 1;
  double root_value = 0.0;
  std::vector<Frame> stack;
  stack.push_back(make(r.root(), 0, 0.0));
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n) {
      const std::uint32_t j = f.next++;
      if (++nodes > options.node_budget) {
        throw ResourceError("section tree exceeds the node budget at depth " + std::to_string(f.depth + 1));
      }
      const double lr = f.log_ratio + family.system(f.system).maps[j].log_ratio();
      Frame child = make(r.child(f.node, j), f.depth + 1, lr);
      stack.push_back(std::move(child));
      continue;
    }
    const double value = f.depth >= depth_cap ? walker.leaf_value(f.log_ratio)
                                              : walker.combine(f.depth, f.log_ratio, f.children.value());
    stack.pop_back();
    if (stack.empty()) {
      root_value = value;
    } else {
      stack.back().children.add(value);
    }
  }

  SectionValue out;
  out.value_log = root_value;
  out.depth_min = depth_min;
  out.nodes = nodes;
  if (nodes <= options.argmin_node_limit) {
    NodeAddress path;
    std::vector<NodeAddress> section;
    walker.with_argmin(r.root(), 0, 0.0, path, section);
    out.argmin_section = std::move(section);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mass distribution

MassDistributionReport mass_distribution_check(const GaugeFunction& h, const NaturalMeasure& nu,
                                               std::size_t n_balls, std::span<const double> epsilon_grid,
                                               std::uint64_t seed) {
  const Realization& r = nu.realization();
  const RifsFamily& family = r.family();
  if (!family.has_geometry()) throw DependencyError("mass distribution check needs configured geometry");
  if (!family.uosc_declared()) throw PreconditionError("mass distribution check needs a declared UOSC");
  for (const double eps : epsilon_grid) {
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("epsilon grid must lie in (0, 1)");
  }

  const int d = family.ambient_dim();
  const double delta_diam = seed_diameter(d);
  MassDistributionReport report;
  report.neighbor_bound = std::pow(4.0 / family.c_min(), d);

  const auto centers = sample_points(nu, n_balls, hash_combine(seed, 0xba11ULL));

  struct Item {
    NodeState node;
    Cylinder cyl;
    double log_mass;
    bool below_stop;
  };
  for (const auto& z : centers) {
    for (const double eps : epsilon_grid) {
      const double radius = eps * delta_diam;
      const double log_eps = std::log(eps);
      const double reach = radius * (1.0 + 1e-12);
      std::size_t neighbors = 0;
      double mass = 0.0;
      std::vector<Item> stack{{r.root(), Cylinder(d), 0.0, false}};
      while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        if (it.cyl.distance(z) > reach) continue;
        const auto& maps = family.system(r.label(it.node)).maps;
        // Stopping-set cylinders meeting the ball are counted; mass descends
        // until a cylinder lies inside the ball or is below radius / 64.
        const bool stop = it.below_stop || it.cyl.log_ratio() <= log_eps;
        if (stop && !it.below_stop) ++neighbors;
        bool mass_done = it.log_mass == kNegInf;
        if (!mass_done && (it.cyl.inside_ball(z, radius) || it.cyl.diameter() <= radius / 64.0)) {
          mass += std::exp(it.log_mass);
          mass_done = true;
        }
        if (stop && mass_done) continue;
        const double child_log_mass =
            mass_done ? kNegInf : it.log_mass - std::log(static_cast<double>(maps.size()));
        for (std::uint32_t j = 0; j < maps.size(); ++j) {
          stack.push_back({r.child(it.node, j), it.cyl.then(maps[j]), child_log_mass, stop});
        }
      }
      const double ratio = mass / std::exp(h.eval_log(std::log(2.0 * radius)));
      report.sup_ratio = std::max(report.sup_ratio, ratio);
      report.max_neighbor_count = std::max(report.max_neighbor_count, neighbors);
      ++report.balls_checked;
    }
  }
  report.lower_bound = report.sup_ratio > 0.0 ? 1.0 / report.sup_ratio : 0.0;
  return report;
}

}  // namespace codetree
