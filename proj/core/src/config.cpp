#include "codetree/config.hpp"

#include "codetree/errors.hpp"
#include "codetree/geometry.hpp"
#include "codetree/measure.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace codetree {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(what, std::string("invalid JSON: ") + e.what());
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
  return x;
}

std::uint64_t unsigned_integer(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(field, "expected a non-negative integer");
}

double optional_number(const json& obj, const std::string& key, double fallback, const std::string& path) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, join(path, key));
}

Eigen::VectorXd vector_of(const json& v, int dim, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ConfigError(field, "expected an array of length " + std::to_string(dim));
  }
  Eigen::VectorXd out(dim);
  for (int i = 0; i < dim; ++i) out[i] = number(v[i], field + "[" + std::to_string(i) + "]");
  return out;
}

Eigen::MatrixXd matrix_of(const json& v, int dim, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ConfigError(field, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  Eigen::MatrixXd out(dim, dim);
  for (int i = 0; i < dim; ++i) out.row(i) = vector_of(v[i], dim, field + "[" + std::to_string(i) + "]");
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot read file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FamilyConfig parse_family(std::string_view text) {
  const json root = parse_json(text, "family");
  if (!root.is_object()) throw ConfigError("family", "expected an object");

  FamilyConfig cfg;
  if (const auto it = root.find("tolerances"); it != root.end()) {
    cfg.tolerances.structural = optional_number(*it, "structural", cfg.tolerances.structural, "tolerances");
    cfg.tolerances.root = optional_number(*it, "root", cfg.tolerances.root, "tolerances");
    cfg.tolerances.assertion = optional_number(*it, "assertion", cfg.tolerances.assertion, "tolerances");
  }

  const std::uint64_t dim64 = unsigned_integer(require(root, "ambient_dim", ""), "ambient_dim");
  if (dim64 < 1 || dim64 > 16) throw ConfigError("ambient_dim", "must be between 1 and 16");
  const int dim = static_cast<int>(dim64);

  const json& systems = require(root, "systems", "");
  if (!systems.is_array() || systems.empty()) throw ConfigError("systems", "expected a non-empty array");

  std::vector<Ifs> ifs;
  std::vector<double> weights;
  std::size_t with_translation = 0;
  std::size_t total_maps = 0;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const std::string sp = "systems[" + std::to_string(i) + "]";
    const json& sys = systems[i];
    if (!sys.is_object()) throw ConfigError(sp, "expected an object");
    Ifs entry;
    if (const auto it = sys.find("label"); it != sys.end()) {
      if (!it->is_string()) throw ConfigError(sp + ".label", "expected a string");
      entry.label = it->get<std::string>();
    } else {
      entry.label = "S" + std::to_string(i);
    }
    weights.push_back(number(require(sys, "weight", sp), sp + ".weight"));
    const json& maps = require(sys, "maps", sp);
    if (!maps.is_array()) throw ConfigError(sp + ".maps", "expected an array");
    for (std::size_t j = 0; j < maps.size(); ++j) {
      const std::string mp = sp + ".maps[" + std::to_string(j) + "]";
      const json& m = maps[j];
      const double ratio = number(require(m, "ratio", mp), mp + ".ratio");
      Eigen::MatrixXd iso = Eigen::MatrixXd::Identity(dim, dim);
      Eigen::VectorXd tr = Eigen::VectorXd::Zero(dim);
      if (const auto it = m.find("isometry"); it != m.end()) iso = matrix_of(*it, dim, mp + ".isometry");
      if (const auto it = m.find("translation"); it != m.end()) {
        tr = vector_of(*it, dim, mp + ".translation");
        ++with_translation;
      }
      ++total_maps;
      try {
        entry.maps.emplace_back(ratio, std::move(iso), std::move(tr), cfg.tolerances.structural);
      } catch (const ConfigError& e) {
        throw ConfigError(mp, e.what());
      }
    }
    ifs.push_back(std::move(entry));
  }
  if (with_translation != 0 && with_translation != total_maps) {
    throw ConfigError("systems", "either every map or no map carries a translation");
  }

  RifsFamily::Options options;
  options.has_geometry = with_translation == total_maps && total_maps > 0;
  if (const auto it = root.find("uosc"); it != root.end()) {
    if (!it->is_boolean()) throw ConfigError("uosc", "expected a boolean");
    options.uosc_declared = it->get<bool>();
  }
  auto family = std::make_shared<const RifsFamily>(std::move(ifs), std::move(weights), dim, options, cfg.tolerances);
  if (options.has_geometry) check_seed_containment(*family);
  cfg.family = std::move(family);
  return cfg;
}

FamilyConfig load_family(const std::filesystem::path& path) { return parse_family(read_text_file(path)); }

ModelConfig parse_model(std::string_view text) {
  const json root = parse_json(text, "model");
  if (!root.is_object()) throw ConfigError("model", "expected an object");
  ModelConfig cfg;
  const json& m = require(root, "model", "");
  if (m.is_string()) {
    const auto name = m.get<std::string>();
    if (name == "homogeneous") {
      cfg.spec = ModelSpec::homogeneous();
    } else if (name == "recursive") {
      cfg.spec = ModelSpec::recursive();
    } else if (name == "neck_block") {
      const json& templates = require(root, "templates", "");
      if (!templates.is_array() || templates.empty()) throw ConfigError("templates", "expected a non-empty array");
      std::vector<BlockTemplate> blocks;
      for (std::size_t i = 0; i < templates.size(); ++i) {
        const std::string tp = "templates[" + std::to_string(i) + "]";
        const json& t = templates[i];
        BlockTemplate b;
        const auto len = unsigned_integer(require(t, "length", tp), tp + ".length");
        if (len < 1 || len > 1'000'000) throw ConfigError(tp + ".length", "must be between 1 and 1e6");
        b.length = static_cast<std::uint32_t>(len);
        b.weight = optional_number(t, "weight", 1.0, tp);
        const json& levels = require(t, "levels", tp);
        if (!levels.is_array() || levels.size() != len) {
          throw ConfigError(tp + ".levels", "expected one weight vector per block level");
        }
        for (std::size_t l = 0; l < levels.size(); ++l) {
          const std::string lp = tp + ".levels[" + std::to_string(l) + "]";
          if (!levels[l].is_array()) throw ConfigError(lp, "expected an array of weights");
          std::vector<double> w;
          for (std::size_t k = 0; k < levels[l].size(); ++k) {
            w.push_back(number(levels[l][k], lp + "[" + std::to_string(k) + "]"));
          }
          b.level_weights.push_back(std::move(w));
        }
        blocks.push_back(std::move(b));
      }
      cfg.spec = ModelSpec::neck_block(std::move(blocks));
    } else {
      throw ConfigError("model", "unknown model '" + name + "'");
    }
  } else if (m.is_object() && m.contains("v_variable")) {
    const auto v = unsigned_integer(m.at("v_variable"), "model.v_variable");
    if (v < 1 || v > 1'000'000) throw ConfigError("model.v_variable", "must be between 1 and 1e6");
    cfg.spec = ModelSpec::v_variable(static_cast<std::uint32_t>(v));
  } else {
    throw ConfigError("model", "expected a model name or {\"v_variable\": V}");
  }
  if (const auto it = root.find("seed"); it != root.end()) cfg.seed = unsigned_integer(*it, "seed");
  return cfg;
}

ModelConfig load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

DimensionModel dimension_model_for(const ModelSpec& spec) noexcept {
  return spec.kind == ModelKind::recursive ? DimensionModel::recursive : DimensionModel::homogeneous;
}

GaugeFunction GaugeConfig::resolve(const RifsFamily& rifs, DimensionModel model, const Tolerances& tol) const {
  const double sv = s ? *s : dimension(rifs, model, tol);
  if (family == GaugeFamily::power) return GaugeFunction::power(sv);
  const double bv = beta ? *beta : default_beta(rifs, sv);
  switch (family) {
    case GaugeFamily::loglog_power:
      return GaugeFunction::loglog_power(sv, bv);
    case GaugeFamily::h1:
      return GaugeFunction::h1(sv, bv, gamma);
    case GaugeFamily::h1_star:
      return GaugeFunction::h1_star(sv, bv, gamma);
    default:
      return GaugeFunction::power(sv);
  }
}

GaugeConfig parse_gauge(std::string_view text) {
  const json root = parse_json(text, "gauge");
  if (!root.is_object()) throw ConfigError("gauge", "expected an object");
  GaugeConfig cfg;

  const json& s = require(root, "s", "");
  if (s.is_string()) {
    if (s.get<std::string>() != "auto") throw ConfigError("s", "expected a number or \"auto\"");
  } else {
    cfg.s = number(s, "s");
    if (*cfg.s < 0.0) throw ConfigError("s", "must be >= 0");
  }

  std::string name = "power";
  const json* params = &root;
  std::string ppath;
  if (const auto it = root.find("family"); it != root.end()) {
    if (it->is_string()) {
      name = it->get<std::string>();
    } else if (it->is_object() && it->size() == 1) {
      name = it->begin().key();
      params = &it->begin().value();
      ppath = "family." + name;
    } else {
      throw ConfigError("family", "expected a family name or a single-key object");
    }
  }
  if (name == "power") {
    cfg.family = GaugeFamily::power;
  } else if (name == "loglog_power") {
    cfg.family = GaugeFamily::loglog_power;
  } else if (name == "h1") {
    cfg.family = GaugeFamily::h1;
  } else if (name == "h1_star") {
    cfg.family = GaugeFamily::h1_star;
  } else {
    throw ConfigError("family", "unknown gauge family '" + name + "'");
  }
  if (cfg.family != GaugeFamily::power) {
    if (!params->is_object()) throw ConfigError(ppath, "expected an object");
    if (const auto it = params->find("beta"); it != params->end()) {
      if (it->is_string() && it->get<std::string>() == "auto") {
        cfg.beta.reset();
      } else {
        cfg.beta = number(*it, join(ppath, "beta"));
        if (!(*cfg.beta > 0.0)) throw ConfigError(join(ppath, "beta"), "must be > 0");
      }
    } else if (cfg.family == GaugeFamily::loglog_power) {
      throw ConfigError(join(ppath, "beta"), "missing");
    }
    if (params->contains("gamma") && params->contains("epsilon")) {
      throw ConfigError(join(ppath, "gamma"), "give gamma or epsilon, not both");
    }
    cfg.gamma = optional_number(*params, "gamma", 0.0, ppath);
    cfg.gamma = optional_number(*params, "epsilon", cfg.gamma, ppath);
  }
  return cfg;
}

GaugeConfig load_gauge(const std::filesystem::path& path) { return parse_gauge(read_text_file(path)); }

ExperimentConfig parse_experiment(std::string_view text, const std::filesystem::path& base_dir) {
  const json root = parse_json(text, "experiment");
  if (!root.is_object()) throw ConfigError("experiment", "expected an object");
  ExperimentConfig cfg;
  const auto path_of = [&](const char* key) {
    const json& v = require(root, key, "");
    if (!v.is_string()) throw ConfigError(key, "expected a file path");
    std::filesystem::path p = v.get<std::string>();
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  cfg.family = path_of("family");
  cfg.model = path_of("model");
  cfg.gauge = path_of("gauge");
  const json& depths = require(root, "depths", "");
  if (depths.is_string()) {
    cfg.depths = parse_depth_grid(depths.get<std::string>());
  } else if (depths.is_array()) {
    for (std::size_t i = 0; i < depths.size(); ++i) {
      cfg.depths.push_back(unsigned_integer(depths[i], "depths[" + std::to_string(i) + "]"));
    }
    for (std::size_t i = 1; i < cfg.depths.size(); ++i) {
      if (cfg.depths[i] <= cfg.depths[i - 1]) throw ConfigError("depths", "must be strictly increasing");
    }
  } else {
    throw ConfigError("depths", "expected a grid string or an array");
  }
  if (const auto it = root.find("n_realizations"); it != root.end()) {
    cfg.n_realizations = unsigned_integer(*it, "n_realizations");
    if (cfg.n_realizations == 0) throw ConfigError("n_realizations", "must be positive");
  }
  if (const auto it = root.find("thresholds"); it != root.end()) {
    cfg.threshold_below = optional_number(*it, "below", cfg.threshold_below, "thresholds");
    cfg.threshold_above = optional_number(*it, "above", cfg.threshold_above, "thresholds");
  }
  if (const auto it = root.find("master_seed"); it != root.end()) cfg.master_seed = unsigned_integer(*it, "master_seed");
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return parse_experiment(read_text_file(path), path.parent_path());
}

namespace {

std::uint64_t parse_u64(std::string_view s, const std::string& field) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(field, "expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::vector<std::uint64_t> parse_depth_grid(std::string_view text) {
  std::vector<std::uint64_t> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("depths", "expected a:b:step or a:b:log");
    const auto a = parse_u64(parts[0], "depths");
    const auto b = parse_u64(parts[1], "depths");
    if (a > b) throw ConfigError("depths", "start exceeds end");
    const auto step = parts[2];
    if (step.starts_with("log")) {
      if (a < 1) throw ConfigError("depths", "logarithmic grids start at 1 or above");
      const auto per_decade = step.size() > 3 ? parse_u64(step.substr(3), "depths") : 10;
      if (per_decade < 1) throw ConfigError("depths", "points per decade must be positive");
      const double la = std::log10(static_cast<double>(a));
      const double lb = std::log10(static_cast<double>(b));
      const auto n = static_cast<std::uint64_t>(std::ceil((lb - la) * static_cast<double>(per_decade) - 1e-9));
      for (std::uint64_t i = 0; i <= n; ++i) {
        const double x = std::pow(10.0, la + static_cast<double>(i) / static_cast<double>(per_decade));
        const auto k = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(x)), a, b);
        if (out.empty() || k > out.back()) out.push_back(k);
      }
      if (out.back() != b) out.push_back(b);
    } else {
      const auto st = parse_u64(step, "depths");
      if (st < 1) throw ConfigError("depths", "step must be positive");
      if ((b - a) / st >= 10'000'000) throw ConfigError("depths", "grid too large");
      for (std::uint64_t k = a; k <= b; k += st) out.push_back(k);
    }
  } else {
    for (const auto part : split(text, ',')) out.push_back(parse_u64(part, "depths"));
    for (std::size_t i = 1; i < out.size(); ++i) {
      if (out[i] <= out[i - 1]) throw ConfigError("depths", "must be strictly increasing");
    }
  }
  if (out.size() > 10'000'000) throw ConfigError("depths", "grid too large");
  return out;
}

}  // namespace codetree
