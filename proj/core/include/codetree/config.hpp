#pragma once

// JSON configuration: family, model, gauge and experiment specs, and depth
// grids. Errors are ConfigError naming the offending field.

#include "codetree/code_tree.hpp"
#include "codetree/gauge.hpp"
#include "codetree/rifs.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codetree {

struct FamilyConfig {
  std::shared_ptr<const RifsFamily> family;
  Tolerances tolerances;
};

// { "ambient_dim": d, "systems": [ { "label", "weight", "maps": [ { "ratio",
// "isometry"?, "translation"? } ] } ], "uosc"?: bool, "tolerances"?: {...} }
// Geometry counts as configured when every map carries a translation.
FamilyConfig parse_family(std::string_view json);
FamilyConfig load_family(const std::filesystem::path& path);

struct ModelConfig {
  ModelSpec spec;
  std::optional<std::uint64_t> seed;
};

// { "model": "homogeneous" | "recursive" | {"v_variable": V} | "neck_block",
//   "templates"?: [ { "length", "weight"?, "levels": [[w...], ...] } ], "seed"? }
ModelConfig parse_model(std::string_view json);
ModelConfig load_model(const std::filesystem::path& path);

// Dimension model used to resolve "s": "auto".
DimensionModel dimension_model_for(const ModelSpec& spec) noexcept;

struct GaugeConfig {
  GaugeFamily family = GaugeFamily::power;
  std::optional<double> s;     // empty: the almost-sure dimension
  std::optional<double> beta;  // empty: default_beta
  double gamma = 0.0;

  GaugeFunction resolve(const RifsFamily& rifs, DimensionModel model, const Tolerances& tol = {}) const;
};

// { "s": real | "auto", "family": "power" | {"loglog_power": {"beta"}} |
//   {"h1": {"beta", "gamma"}} | {"h1_star": {"beta", "gamma" | "epsilon"}} }
GaugeConfig parse_gauge(std::string_view json);
GaugeConfig load_gauge(const std::filesystem::path& path);

struct ExperimentConfig {
  std::filesystem::path family;
  std::filesystem::path model;
  std::filesystem::path gauge;
  std::vector<std::uint64_t> depths;
  std::size_t n_realizations = 1000;
  double threshold_below = -20.0;
  double threshold_above = 20.0;
  std::uint64_t master_seed = 0;
};

// Relative paths resolve against the experiment file's directory.
ExperimentConfig parse_experiment(std::string_view json, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

// "a:b:step", "a:b:log" / "a:b:logN" (N points per decade, default 10) or
// "k1,k2,...". Result is strictly increasing.
std::vector<std::uint64_t> parse_depth_grid(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace codetree
