#include "codetree_cli/cli.hpp"

#include "codetree/config.hpp"
#include "codetree/errors.hpp"
#include "codetree/format.hpp"
#include "codetree/geometry.hpp"
#include "codetree/measure.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <variant>

namespace codetree::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Options {
  std::string family;
  std::string model;
  std::string gauge;
  std::string config;
  std::string out;
  std::string format = "csv";
  std::string depths;
  std::string raster;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t n = 0;
  unsigned workers = 0;
  double p = 0.8;
  bool dim_only = false;
  std::uint64_t depth_min = 0;
  std::uint64_t depth_cap = 4;
  double log_scale = 0.0;
  std::uint64_t budget = 100'000'000;
  std::size_t seeds = 20;
  int max_exponent = 14;
  double below = -20.0;
  double above = 20.0;
  bool below_given = false;
  bool above_given = false;
};

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  std::map<std::string, std::uint64_t> spec_hashes;
  std::uint64_t master_seed = 0;
  std::string started;

  std::string comment() const {
    std::ostringstream ss;
    ss << "# provenance command=\"" << command << "\" seed=" << master_seed << " version=" << kToolVersion;
    for (const auto& [name, hash] : spec_hashes) ss << ' ' << name << '=' << hex64(hash);
    return ss.str();
  }

  Json to_json() const {
    Json j;
    j["command"] = command;
    Json hashes = Json::object();
    for (const auto& [name, hash] : spec_hashes) hashes[name] = hex64(hash);
    j["spec_hashes"] = hashes;
    j["master_seed"] = master_seed;
    j["tool_version"] = kToolVersion;
    return j;
  }
};

using Cell = std::variant<std::monostate, double, std::uint64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

Cell cell(const std::optional<double>& v) { return v ? Cell(*v) : Cell(std::monostate{}); }

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* u = std::get_if<std::uint64_t>(&c)) return std::to_string(*u);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return "";
}

// Numbers go through the 9-digit formatter so both formats carry the same values.
Json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(format_number(v).c_str(), nullptr);
}

Json json_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return json_number(*d);
  if (const auto* u = std::get_if<std::uint64_t>(&c)) return *u;
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  return nullptr;
}

Json table_json(const Table& t, const Manifest& m) {
  Json j;
  j["manifest"] = m.to_json();
  j["columns"] = t.columns;
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json row = Json::array();
    for (const auto& c : r) row.push_back(json_cell(c));
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string table_csv(const Table& t, const Manifest& m) {
  std::ostringstream ss;
  ss << m.comment() << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) ss << (i ? "," : "") << t.columns[i];
  ss << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) ss << (i ? "," : "") << csv_cell(r[i]);
    ss << '\n';
  }
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw Error("cannot write " + path);
}

class Runner {
 public:
  Runner(const Options& o, Manifest m, std::ostream& out, std::ostream& err)
      : o_(o), m_(std::move(m)), out_(out), err_(err) {}

  void emit(const std::string& text) {
    if (o_.out.empty()) {
      out_ << text;
    } else {
      write_file(o_.out, text);
      Json side = m_.to_json();
      side["started"] = m_.started;
      side["finished"] = timestamp_utc();
      write_file(o_.out + ".manifest.json", side.dump(2) + "\n");
    }
  }

  void emit_table(const Table& t, Json extra = nullptr) {
    if (o_.format == "json") {
      Json j = table_json(t, m_);
      if (!extra.is_null()) j["summary"] = std::move(extra);
      emit(j.dump(2) + "\n");
      return;
    }
    emit(table_csv(t, m_));
    if (!extra.is_null()) {
      Json j;
      j["manifest"] = m_.to_json();
      j["summary"] = std::move(extra);
      if (o_.out.empty()) {
        err_ << j.dump(2) << '\n';
      } else {
        write_file(o_.out + ".summary.json", j.dump(2) + "\n");
      }
    }
  }

  void emit_scalar(const std::string& name, double value) {
    if (o_.format == "json") {
      emit_table(Table{{name}, {{value}}});
    } else {
      emit(format_number(value) + "\n");
    }
  }

  Manifest& manifest() { return m_; }

 private:
  const Options& o_;
  Manifest m_;
  std::ostream& out_;
  std::ostream& err_;
};

// Loaded specs with their content hashes.
struct Inputs {
  FamilyConfig family;
  ModelConfig model{ModelSpec::homogeneous(), std::nullopt};
  GaugeConfig gauge;
  std::uint64_t seed = 0;
};

std::string read_spec(const std::string& path, const char* name, Manifest& m) {
  const std::string text = read_text_file(path);
  m.spec_hashes[name] = content_hash(text);
  return text;
}

// Ratios >= 1 are representable (validate reports them) but no computation accepts them.
void require_contracting(const RifsFamily& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.system(i).size(); ++j) {
      if (!(f.system(i).maps[j].ratio() < 1.0)) {
        throw ConfigError("systems[" + std::to_string(i) + "].maps[" + std::to_string(j) + "].ratio",
                          "contraction ratio must be < 1");
      }
    }
  }
}

Inputs load_inputs(const Options& o, Manifest& m, bool need_model, bool need_gauge) {
  Inputs in;
  if (o.family.empty()) throw ConfigError("--family", "a family spec is required");
  in.family = parse_family(read_spec(o.family, "family", m));
  if (!o.model.empty()) {
    in.model = parse_model(read_spec(o.model, "model", m));
  } else if (need_model) {
    throw ConfigError("--model", "a model spec is required");
  }
  if (!o.gauge.empty()) {
    in.gauge = parse_gauge(read_spec(o.gauge, "gauge", m));
  } else if (need_gauge) {
    in.gauge = GaugeConfig{};  // power gauge at the almost-sure dimension
  }
  if (need_model) require_contracting(*in.family.family);
  in.seed = o.seed_given ? o.seed : in.model.seed.value_or(0);
  m.master_seed = in.seed;
  return in;
}

GaugeFunction resolve_gauge(const Inputs& in) {
  return in.gauge.resolve(*in.family.family, dimension_model_for(in.model.spec), in.family.tolerances);
}

std::vector<std::uint64_t> depths_or(const Options& o, const char* fallback) {
  return parse_depth_grid(o.depths.empty() ? std::string_view(fallback) : std::string_view(o.depths));
}

Realization realization_of(const Inputs& in) { return Realization(in.model.spec, in.seed, in.family.family); }

void cmd_validate(const Options& o, Runner& run) {
  const Inputs in = load_inputs(o, run.manifest(), false, false);
  const RifsFamily& f = *in.family.family;
  const DimensionModel dm = dimension_model_for(in.model.spec);
  const auto rep = validate(f, dm, in.family.tolerances);
  Table t{{"field", "value"}, {}};
  t.rows.push_back({std::string("model"), std::string(to_string(dm))});
  t.rows.push_back({std::string("n_bound_ok"), rep.n_bound_ok});
  t.rows.push_back({std::string("ratio_bounds_ok"), rep.ratio_bounds_ok});
  t.rows.push_back({std::string("recursive_supercritical"), rep.recursive_supercritical});
  t.rows.push_back({std::string("homogeneous_supercritical"), rep.homogeneous_supercritical});
  t.rows.push_back({std::string("almost_deterministic_at"), cell(rep.almost_deterministic_at)});
  if (rep.gap) {
    std::string systems;
    for (auto i : rep.gap->systems) systems += (systems.empty() ? "" : ";") + f.system(i).label;
    t.rows.push_back({std::string("gap_epsilon"), rep.gap->epsilon});
    t.rows.push_back({std::string("gap_gamma"), rep.gap->gamma});
    t.rows.push_back({std::string("gap_p0"), rep.gap->p0});
    t.rows.push_back({std::string("gap_systems"), systems});
  }
  if (rep.supercritical(dm) && rep.ratio_bounds_ok) {
    t.rows.push_back({std::string("dimension"), dimension(f, dm, in.family.tolerances)});
  }
  run.emit_table(t);
}

void cmd_dim(const Options& o, Runner& run) {
  const Inputs in = load_inputs(o, run.manifest(), true, false);
  run.emit_scalar("dimension", dimension(*in.family.family, dimension_model_for(in.model.spec), in.family.tolerances));
}

void cmd_levelsum(const Options& o, Runner& run, bool packing) {
  const Inputs in = load_inputs(o, run.manifest(), true, true);
  const auto depths = depths_or(o, "1:100:log");
  const Realization r = realization_of(in);
  const GaugeFunction h = resolve_gauge(in);
  const LevelSumOptions opts{o.budget};
  const auto series = packing ? packing_level_limsup(r, h, depths, opts) : level_sums(r, h, depths, opts);
  Table t{{"depth", "log_sum", "env_plus", "env_minus", "in_formula_region"}, {}};
  if (packing) t.columns.push_back("running_max");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    std::vector<Cell> row{series.depths[i], series.log_sums[i], cell(series.envelope_plus[i]),
                          cell(series.envelope_minus[i]), static_cast<bool>(series.in_formula_region[i])};
    if (packing) row.push_back(series.limsup_proxy[i]);
    t.rows.push_back(std::move(row));
  }
  run.emit_table(t);
}

void cmd_sections(const Options& o, Runner& run) {
  const Inputs in = load_inputs(o, run.manifest(), true, true);
  const Realization r = realization_of(in);
  const GaugeFunction h = resolve_gauge(in);
  SectionOptions opts;
  opts.log_scale = o.log_scale;
  opts.node_budget = o.budget;
  const auto v = section_infimum(r, h, o.depth_min, o.depth_cap, opts);
  Table t{{"depth_min", "depth_cap", "value_log", "nodes", "argmin_size"}, {}};
  t.rows.push_back({v.depth_min, o.depth_cap, v.value_log, v.nodes,
                    v.argmin_section ? Cell(static_cast<std::uint64_t>(v.argmin_section->size()))
                                     : Cell(std::monostate{})});
  run.emit_table(t);
}

void cmd_drift(Options o, Runner& run) {
  DriftConfig cfg;
  if (!o.config.empty()) {
    const std::string text = read_spec(o.config, "experiment", run.manifest());
    const auto e = parse_experiment(text, std::filesystem::path(o.config).parent_path());
    if (o.family.empty()) o.family = e.family.string();
    if (o.model.empty()) o.model = e.model.string();
    if (o.gauge.empty()) o.gauge = e.gauge.string();
    cfg.depths = e.depths;
    cfg.n_realizations = e.n_realizations;
    cfg.threshold_below = e.threshold_below;
    cfg.threshold_above = e.threshold_above;
    if (!o.seed_given) {
      o.seed = e.master_seed;
      o.seed_given = true;
    }
  } else {
    cfg.depths = depths_or(o, "1:10000:log");
  }
  if (!o.depths.empty()) cfg.depths = parse_depth_grid(o.depths);
  if (o.n) cfg.n_realizations = o.n;
  if (o.below_given) cfg.threshold_below = o.below;
  if (o.above_given) cfg.threshold_above = o.above;

  const Inputs in = load_inputs(o, run.manifest(), true, true);
  const GaugeFunction h = resolve_gauge(in);
  cfg.master_seed = in.seed;
  cfg.workers = o.workers ? o.workers : std::max(1U, std::thread::hardware_concurrency());
  cfg.level_sums.node_budget = o.budget;
  const auto rep = drift_experiment(in.family.family, in.model.spec, h, cfg);

  Table t{{"depth", "median_log_sum", "q10", "q90", "env_plus", "env_minus", "frac_below", "frac_above"}, {}};
  for (const auto& row : rep.rows) {
    t.rows.push_back({row.depth, row.median, row.q10, row.q90, cell(row.env_plus), cell(row.env_minus),
                      row.frac_below, row.frac_above});
  }
  Json s;
  s["gauge"] = h.describe();
  s["s"] = json_number(rep.s);
  s["variance"] = json_number(rep.variance);
  s["increment_mean"] = json_number(rep.increment_mean);
  s["increment_variance"] = json_number(rep.increment_variance);
  s["increment_count"] = rep.increment_count;
  s["frac_exit"] = json_number(rep.frac_exit);
  s["frac_touch"] = json_number(rep.frac_touch);
  s["median_slope"] = json_number(rep.median_slope);
  s["liminf_slope"] = json_number(rep.liminf_slope);
  s["limsup_slope"] = json_number(rep.limsup_slope);
  s["n_realizations"] = rep.n_realizations;
  run.emit_table(t, s);
}

std::pair<int, int> parse_raster(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("--raster", "expected WIDTHxHEIGHT");
  }
}

void cmd_render(const Options& o, Runner& run) {
  const Inputs in = load_inputs(o, run.manifest(), true, false);
  const NaturalMeasure nu(realization_of(in));
  const auto points = sample_points(nu, o.n ? o.n : 10'000, in.seed);
  const std::string provenance = run.manifest().comment().substr(2);
  std::ostringstream ss;
  if (!o.raster.empty()) {
    const auto [w, hgt] = parse_raster(o.raster);
    write_pgm(ss, points, w, hgt, provenance);
    run.emit(ss.str());
  } else if (o.format == "json") {
    Table t;
    for (int i = 0; i < in.family.family->ambient_dim(); ++i) t.columns.push_back("x" + std::to_string(i));
    for (const auto& p : points) {
      std::vector<Cell> row;
      for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p[i]);
      t.rows.push_back(std::move(row));
    }
    run.emit_table(t);
  } else {
    write_points_csv(ss, points, provenance);
    run.emit(ss.str());
  }
}

void cmd_percolate(const Options& o, Runner& run) {
  const auto preset = percolation_preset(o.p);
  run.manifest().master_seed = o.seed;
  if (o.dim_only) {
    run.emit_scalar("dimension", dimension(*preset.family, DimensionModel::recursive));
    return;
  }
  if (o.max_exponent < 3 || o.max_exponent > 40) throw ConfigError("--max-exponent", "must be between 3 and 40");
  // Ratios are exact powers of two; inflate scales so that rounding cannot
  // push a coding across its stopping level.
  std::vector<double> scales;
  for (int k = 1; k <= o.max_exponent; ++k) scales.push_back(std::ldexp(1.0 + 1e-9, -k));
  Table t{{"index", "seed", "slope"}, {}};
  double total = 0.0;
  std::size_t found = 0;
  for (std::uint64_t i = 0; found < o.seeds; ++i) {
    if (i >= 100 * o.seeds) throw ExtinctionError("too few surviving percolation seeds");
    const std::uint64_t seed = ensemble_seed(o.seed, i);
    try {
      const auto est = box_dimension(Realization(preset.model, seed, preset.family), scales, o.budget);
      t.rows.push_back({i, seed, est.slope});
      total += est.slope;
      ++found;
    } catch (const ExtinctionError&) {
    }
  }
  const double mean = total / static_cast<double>(found);
  if (o.format == "json") {
    Json s;
    s["mean_slope"] = json_number(mean);
    s["closed_form"] = json_number(dimension(*preset.family, DimensionModel::recursive));
    run.emit_table(t, s);
  } else {
    run.emit(format_number(mean) + "\n");
  }
}

std::string command_line(const std::vector<std::string>& args) {
  // Worker counts and output paths do not affect data, so they stay out of the manifest.
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--workers" || a == "--out") {
      ++i;
      continue;
    }
    if (a.starts_with("--workers=") || a.starts_with("--out=")) continue;
    out += (out.empty() ? "" : " ") + a;
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Random code-trees, dimensions and gauged level sums", "codetree"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  const auto family = [&](CLI::App* c) { c->add_option("--family", o.family, "RIFS family JSON"); };
  const auto model = [&](CLI::App* c) { c->add_option("--model", o.model, "model JSON"); };
  const auto gauge = [&](CLI::App* c) { c->add_option("--gauge", o.gauge, "gauge JSON (default: power at s)"); };
  const auto seed = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { o.seed = v, o.seed_given = true; }, "master seed");
  };
  const auto output = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output path (default stdout)");
    c->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  const auto depths = [&](CLI::App* c) {
    c->add_option("--depths", o.depths, "a:b:step, a:b:log[N] or k1,k2,...");
  };
  const auto budget = [&](CLI::App* c) { c->add_option("--budget", o.budget, "node budget"); };

  auto* validate_cmd = app.add_subcommand("validate", "check the standing assumptions");
  family(validate_cmd), model(validate_cmd), output(validate_cmd);

  auto* dim_cmd = app.add_subcommand("dim", "almost-sure dimension");
  family(dim_cmd), model(dim_cmd), output(dim_cmd);

  auto* levelsum_cmd = app.add_subcommand("levelsum", "gauge level sums of one realization");
  family(levelsum_cmd), model(levelsum_cmd), gauge(levelsum_cmd), seed(levelsum_cmd), depths(levelsum_cmd);
  output(levelsum_cmd), budget(levelsum_cmd);

  auto* pack_cmd = app.add_subcommand("pack", "level sums with trailing-decade running maxima");
  family(pack_cmd), model(pack_cmd), gauge(pack_cmd), seed(pack_cmd), depths(pack_cmd), output(pack_cmd);
  budget(pack_cmd);

  auto* sections_cmd = app.add_subcommand("sections", "minimal section sum on a truncated tree");
  family(sections_cmd), model(sections_cmd), gauge(sections_cmd), seed(sections_cmd), output(sections_cmd);
  budget(sections_cmd);
  sections_cmd->add_option("--depth-min", o.depth_min, "minimum section word length");
  sections_cmd->add_option("--depth-cap", o.depth_cap, "truncation depth");
  sections_cmd->add_option("--log-scale", o.log_scale, "log t in h(t c_v)");

  auto* drift_cmd = app.add_subcommand("drift", "ensemble drift experiment");
  drift_cmd->add_option("--config", o.config, "experiment JSON");
  family(drift_cmd), model(drift_cmd), gauge(drift_cmd), seed(drift_cmd), depths(drift_cmd), output(drift_cmd);
  budget(drift_cmd);
  drift_cmd->add_option("--n", o.n, "realizations");
  drift_cmd->add_option("--workers", o.workers, "worker threads (default: all cores)");
  drift_cmd->add_option_function<double>("--below", [&](const double& v) { o.below = v, o.below_given = true; },
                                         "threshold for the running minimum");
  drift_cmd->add_option_function<double>("--above", [&](const double& v) { o.above = v, o.above_given = true; },
                                         "threshold for the running maximum");

  auto* render_cmd = app.add_subcommand("render", "sample attractor points from the natural measure");
  family(render_cmd), model(render_cmd), seed(render_cmd), output(render_cmd);
  render_cmd->add_option("--n", o.n, "points (default 10000)");
  render_cmd->add_option("--raster", o.raster, "write a PGM raster WIDTHxHEIGHT instead of points");

  auto* percolate_cmd = app.add_subcommand("percolate", "Mandelbrot percolation of the unit line");
  percolate_cmd->add_option("--p", o.p, "retention probability")->check(CLI::Range(0.0, 1.0));
  percolate_cmd->add_flag("--dim", o.dim_only, "print the closed-form dimension");
  percolate_cmd->add_option("--seeds", o.seeds, "surviving seeds to average (default 20)")->check(CLI::PositiveNumber);
  percolate_cmd->add_option("--max-exponent", o.max_exponent, "smallest scale 2^-k (default 14)");
  seed(percolate_cmd), output(percolate_cmd), budget(percolate_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  Manifest m;
  m.command = command_line(args);
  m.started = timestamp_utc();
  Runner runner(o, std::move(m), out, err);
  try {
    if (*validate_cmd) cmd_validate(o, runner);
    if (*dim_cmd) cmd_dim(o, runner);
    if (*levelsum_cmd) cmd_levelsum(o, runner, false);
    if (*pack_cmd) cmd_levelsum(o, runner, true);
    if (*sections_cmd) cmd_sections(o, runner);
    if (*drift_cmd) cmd_drift(o, runner);
    if (*render_cmd) cmd_render(o, runner);
    if (*percolate_cmd) cmd_percolate(o, runner);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return kResource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace codetree::cli
