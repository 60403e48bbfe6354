#include "codetree/geometry.hpp"

#include "codetree/errors.hpp"
#include "codetree/format.hpp"
#include "codetree/measure.hpp"
#include "codetree/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace codetree {

namespace {

// Corners of [0,1]^d, visited via callback.
template <typename Fn>
void for_each_corner(int dim, Fn&& fn) {
  Eigen::VectorXd corner(dim);
  const std::uint64_t count = std::uint64_t{1} << dim;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int i = 0; i < dim; ++i) corner[i] = (mask >> i) & 1U ? 1.0 : 0.0;
    fn(static_cast<const Eigen::VectorXd&>(corner));
  }
}

void require_geometry(const RifsFamily& family) {
  if (!family.has_geometry()) {
    throw DependencyError("family was configured without geometry (isometries/translations)");
  }
}

}  // namespace

Cylinder::Cylinder(int dim)
    : isometry_(Eigen::MatrixXd::Identity(dim, dim)), translation_(Eigen::VectorXd::Zero(dim)) {}

Cylinder Cylinder::then(const SimilarityMap& m) const {
  Cylinder c(*this);
  c.translation_ = translation_ + ratio_ * (isometry_ * m.translation());
  c.isometry_ = isometry_ * m.isometry();
  c.log_ratio_ = log_ratio_ + m.log_ratio();
  c.ratio_ = ratio_ * m.ratio();
  return c;
}

Eigen::VectorXd Cylinder::center() const {
  return apply(Eigen::VectorXd::Constant(dim(), 0.5));
}

double Cylinder::diameter() const { return ratio_ * seed_diameter(dim()); }

double Cylinder::distance(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd local = isometry_.transpose() * (z - translation_) / ratio_;
  const Eigen::VectorXd clamped = local.cwiseMax(0.0).cwiseMin(1.0);
  return ratio_ * (local - clamped).norm();
}

bool Cylinder::inside_ball(const Eigen::VectorXd& z, double radius) const {
  bool inside = true;
  for_each_corner(dim(), [&](const Eigen::VectorXd& corner) {
    if ((apply(corner) - z).norm() > radius) inside = false;
  });
  return inside;
}

std::pair<double, double> Cylinder::interval() const {
  if (dim() != 1) throw ParameterError("interval() is only defined for d = 1");
  const double a = translation_[0];
  const double b = translation_[0] + ratio_ * isometry_(0, 0);
  return {std::min(a, b), std::max(a, b)};
}

double seed_diameter(int dim) { return std::sqrt(static_cast<double>(dim)); }

void check_seed_containment(const RifsFamily& family) {
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& sys = family.system(i);
    for (std::size_t j = 0; j < sys.size(); ++j) {
      bool ok = true;
      for_each_corner(family.ambient_dim(), [&](const Eigen::VectorXd& corner) {
        const Eigen::VectorXd y = sys.maps[j].apply(corner);
        if ((y.array() < -tol).any() || (y.array() > 1.0 + tol).any()) ok = false;
      });
      if (!ok) {
        throw ConfigError("systems[" + std::to_string(i) + "].maps[" + std::to_string(j) + "]",
                          "map does not send the unit cube into itself");
      }
    }
  }
}

Cylinder compose(const RifsFamily& family, const Coding& coding) {
  require_geometry(family);
  Cylinder c(family.ambient_dim());
  for (std::size_t i = 0; i < coding.letters.size(); ++i) {
    const auto& l = coding.letters[i];
    if (l.system >= family.size() || l.map >= family.system(l.system).size()) {
      throw ConfigError("letters[" + std::to_string(i) + "]", "letter references a missing map");
    }
    c = c.then(family.system(l.system).maps[l.map]);
  }
  return c;
}

std::vector<Eigen::VectorXd> sample_points(const NaturalMeasure& nu, std::size_t n, std::uint64_t seed,
                                           const SampleOptions& options) {
  const Realization& r = nu.realization();
  const RifsFamily& family = r.family();
  require_geometry(family);
  if (!(family.c_max() < 1.0)) throw PreconditionError("sampling requires c_max < 1");
  if (!(options.min_diameter > 0.0)) throw ParameterError("min_diameter must be positive");

  std::vector<Eigen::VectorXd> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool done = false;
    for (int attempt = 0; attempt < options.max_retries && !done; ++attempt) {
      CounterStream stream(hash_words(seed, i, static_cast<std::uint64_t>(attempt)));
      NodeState node = r.root();
      Cylinder cyl(family.ambient_dim());
      bool dead = false;
      while (cyl.diameter() > options.min_diameter) {
        const auto sys = r.label(node);
        const auto children = family.system(sys).size();
        if (children == 0) {
          dead = true;
          break;
        }
        const auto j = static_cast<std::uint32_t>(pick_uniform(stream(), children));
        cyl = cyl.then(family.system(sys).maps[j]);
        node = r.child(node, j);
      }
      if (!dead) {
        points.push_back(cyl.center());
        done = true;
      }
    }
    if (!done) {
      throw ExtinctionError("point " + std::to_string(i) + ": every descent went extinct after " +
                            std::to_string(options.max_retries) + " attempts");
    }
  }
  return points;
}

std::vector<double> geometric_scales(double largest, double ratio, std::size_t count) {
  std::vector<double> out;
  double x = largest;
  for (std::size_t i = 0; i < count; ++i, x *= ratio) out.push_back(x);
  return out;
}

namespace {

void check_scales(std::span<const double> scales) {
  if (scales.size() < 6) throw ParameterError("box dimension needs at least 6 scales");
  const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
  if (!(*lo > 0.0) || !(*hi < 1.0)) throw ParameterError("box scales must lie in (0, 1)");
  if (*hi / *lo < 8.0) throw ParameterError("box scales must span at least 3 octaves");
}

BoxDimensionEstimate fit(std::span<const double> scales, std::vector<double> counts) {
  BoxDimensionEstimate est;
  est.scales.assign(scales.begin(), scales.end());
  est.counts = std::move(counts);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    x.push_back(-std::log(scales[i]));
    y.push_back(std::log(est.counts[i]));
  }
  est.slope = least_squares_slope(x, y);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  est.intercept = my - est.slope * mx;
  return est;
}

}  // namespace

BoxDimensionEstimate box_dimension(const Realization& r, std::span<const double> scales, std::uint64_t budget) {
  check_scales(scales);
  std::vector<double> counts;
  std::uint64_t total = 0;
  for (const double delta : scales) {
    auto stream = stopping_set(r, delta);
    std::uint64_t count = 0;
    while (stream.next()) {
      ++count;
      if (++total > budget) {
        throw ResourceError("stopping-set budget exceeded at scale " + format_number(delta));
      }
    }
    if (count == 0) throw ExtinctionError("empty stopping set at scale " + format_number(delta));
    counts.push_back(static_cast<double>(count));
  }
  return fit(scales, std::move(counts));
}

BoxDimensionEstimate box_dimension(std::span<const Eigen::VectorXd> points, std::span<const double> scales) {
  check_scales(scales);
  if (points.size() < 10'000) throw ParameterError("box dimension from points needs at least 10^4 points");
  std::vector<double> counts;
  for (const double delta : scales) {
    std::set<std::vector<long long>> boxes;
    for (const auto& p : points) {
      std::vector<long long> key(static_cast<std::size_t>(p.size()));
      for (Eigen::Index i = 0; i < p.size(); ++i) key[i] = static_cast<long long>(std::floor(p[i] / delta));
      boxes.insert(std::move(key));
    }
    counts.push_back(static_cast<double>(boxes.size()));
  }
  return fit(scales, std::move(counts));
}

PercolationPreset percolation_preset(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("percolation requires 0 < p < 1");
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(1, 1);
  const SimilarityMap left(0.5, id, Eigen::VectorXd::Constant(1, 0.0));
  const SimilarityMap right(0.5, id, Eigen::VectorXd::Constant(1, 0.5));
  std::vector<Ifs> systems{
      {"none", {}},
      {"left", {left}},
      {"right", {right}},
      {"both", {left, right}},
  };
  const double q = 1.0 - p;
  std::vector<double> weights{q * q, p * q, p * q, p * p};
  RifsFamily::Options opts;
  opts.has_geometry = true;
  opts.uosc_declared = true;
  return {std::make_shared<const RifsFamily>(std::move(systems), std::move(weights), 1, opts),
          ModelSpec::recursive()};
}

bool uosc_audit_1d(const Realization& r, std::size_t depth, double tol) {
  const RifsFamily& family = r.family();
  if (family.ambient_dim() != 1) throw ParameterError("UOSC audit is implemented for d = 1 only");
  require_geometry(family);
  struct Item {
    NodeState node;
    Cylinder cyl;
    std::size_t depth;
  };
  std::vector<Item> stack{{r.root(), Cylinder(1), 0}};
  while (!stack.empty()) {
    Item item = std::move(stack.back());
    stack.pop_back();
    if (item.depth >= depth) continue;
    const auto sys = r.label(item.node);
    const auto& maps = family.system(sys).maps;
    std::vector<std::pair<double, double>> spans;
    for (std::uint32_t j = 0; j < maps.size(); ++j) {
      Cylinder c = item.cyl.then(maps[j]);
      spans.push_back(c.interval());
      stack.push_back({r.child(item.node, j), std::move(c), item.depth + 1});
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k - 1].second > spans[k].first + tol) return false;
    }
  }
  return true;
}

void write_points_csv(std::ostream& out, std::span<const Eigen::VectorXd> points, const std::string& provenance) {
  out << "# " << provenance << '\n';
  for (const auto& p : points) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i) out << ',';
      out << format_number(p[i]);
    }
    out << '\n';
  }
}

void write_pgm(std::ostream& out, std::span<const Eigen::VectorXd> points, int width, int height,
               const std::string& provenance) {
  if (width < 1 || height < 1) throw ParameterError("raster dimensions must be positive");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  const auto cell = [](double x, int n) {
    return std::clamp(static_cast<int>(std::floor(x * n)), 0, n - 1);
  };
  for (const auto& p : points) {
    if (p.size() < 1 || p.size() > 2) throw ParameterError("raster export supports d <= 2");
    const int col = cell(p[0], width);
    if (p.size() == 1) {
      for (int row = 0; row < height; ++row) ++counts[static_cast<std::size_t>(row) * width + col];
    } else {
      const int row = height - 1 - cell(p[1], height);
      ++counts[static_cast<std::size_t>(row) * width + col];
    }
  }
  std::uint64_t maxval = 1;
  for (auto c : counts) maxval = std::max(maxval, c);
  maxval = std::min<std::uint64_t>(maxval, 65535);
  out << "P2\n# " << provenance << '\n' << width << ' ' << height << '\n' << maxval << '\n';
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      if (col) out << ' ';
      out << std::min<std::uint64_t>(counts[static_cast<std::size_t>(row) * width + col], maxval);
    }
    out << '\n';
  }
}

}  // namespace codetree
