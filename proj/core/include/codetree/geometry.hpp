#pragma once

// Concrete attractor geometry: composed similarities on the seed set
// Delta = [0,1]^d, natural-measure point sampling, box-counting and the
// Mandelbrot percolation preset.

#include "codetree/code_tree.hpp"
#include "codetree/natural_measure.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace codetree {

// f_{e1} o ... o f_{ek} applied to Delta.
class Cylinder {
 public:
  explicit Cylinder(int dim);  // the seed set itself

  // this o m
  Cylinder then(const SimilarityMap& m) const;

  double log_ratio() const noexcept { return log_ratio_; }
  double ratio() const noexcept { return ratio_; }
  const Eigen::MatrixXd& isometry() const noexcept { return isometry_; }
  const Eigen::VectorXd& translation() const noexcept { return translation_; }
  int dim() const noexcept { return static_cast<int>(translation_.size()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return ratio_ * (isometry_ * x) + translation_; }
  Eigen::VectorXd center() const;
  double diameter() const;
  // Euclidean distance from z to the closed cylinder.
  double distance(const Eigen::VectorXd& z) const;
  bool inside_ball(const Eigen::VectorXd& z, double radius) const;
  // d = 1 only: the closed interval [lo, hi].
  std::pair<double, double> interval() const;

 private:
  double ratio_ = 1.0;
  double log_ratio_ = 0.0;
  Eigen::MatrixXd isometry_;
  Eigen::VectorXd translation_;
};

double seed_diameter(int dim);

// Throws ConfigError("systems[i].maps[j]") unless every map sends Delta into Delta.
void check_seed_containment(const RifsFamily& family);

// Throws ConfigError when a letter references a missing map, DependencyError without geometry.
Cylinder compose(const RifsFamily& family, const Coding& coding);

struct SampleOptions {
  double min_diameter = 1e-9;
  int max_retries = 100;
};

// Descends choosing live children uniformly (the natural measure) until the
// cylinder diameter is <= min_diameter; returns cylinder centres.
std::vector<Eigen::VectorXd> sample_points(const NaturalMeasure& nu, std::size_t n, std::uint64_t seed,
                                           const SampleOptions& options = {});

struct BoxDimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> scales;
  std::vector<double> counts;
};

// `count` scales largest * ratio^i.
std::vector<double> geometric_scales(double largest, double ratio, std::size_t count);

// Counts |Xi_delta| per scale.
BoxDimensionEstimate box_dimension(const Realization& r, std::span<const double> scales,
                                   std::uint64_t budget = 100'000'000);
// Grid box counts of a point cloud.
BoxDimensionEstimate box_dimension(std::span<const Eigen::VectorXd> points, std::span<const double> scales);

struct PercolationPreset {
  std::shared_ptr<const RifsFamily> family;
  ModelSpec model;
};

// Retain each half of [0,1] independently with probability p.
PercolationPreset percolation_preset(double p);

// d = 1 audit: children of every node up to `depth` have disjoint open interiors.
bool uosc_audit_1d(const Realization& r, std::size_t depth, double tol = 1e-12);

void write_points_csv(std::ostream& out, std::span<const Eigen::VectorXd> points, const std::string& provenance);
// ASCII PGM of occupancy counts; d <= 2 (d = 1 rows are replicated).
void write_pgm(std::ostream& out, std::span<const Eigen::VectorXd> points, int width, int height,
               const std::string& provenance);

}  // namespace codetree
