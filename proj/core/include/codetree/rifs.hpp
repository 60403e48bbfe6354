#pragma once

// Random iterated function systems: a finite list of IFSs of contracting
// similarities with selection weights, their moment sums S^s, standing
// assumption checks and the almost-sure dimension equations.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace codetree {

struct Tolerances {
  double structural = 1e-12;  // orthogonality, weight normalisation
  double root = 1e-10;        // dimension bisection
  double assertion = 1e-9;    // almost-deterministic comparison
};

// x -> ratio * isometry * x + translation.
class SimilarityMap {
 public:
  // Identity isometry and zero translation in `dim` dimensions.
  SimilarityMap(double ratio, int dim = 1);
  SimilarityMap(double ratio, Eigen::MatrixXd isometry, Eigen::VectorXd translation,
                double orthogonality_tol = Tolerances{}.structural);

  double ratio() const noexcept { return ratio_; }
  double log_ratio() const noexcept { return log_ratio_; }
  const Eigen::MatrixXd& isometry() const noexcept { return isometry_; }
  const Eigen::VectorXd& translation() const noexcept { return translation_; }
  int dim() const noexcept { return static_cast<int>(translation_.size()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

 private:
  double ratio_;
  double log_ratio_;
  Eigen::MatrixXd isometry_;
  Eigen::VectorXd translation_;
};

struct Ifs {
  std::string label;
  std::vector<SimilarityMap> maps;

  std::size_t size() const noexcept { return maps.size(); }
  // True when every map shares one contraction ratio.
  bool equicontractive() const noexcept;
};

// The pair (systems, weights). Immutable after construction.
class RifsFamily {
 public:
  struct Options {
    bool has_geometry = true;   // translations/isometries are meaningful
    bool uosc_declared = false; // user asserts the uniform open set condition
  };

  RifsFamily(std::vector<Ifs> systems, std::vector<double> weights, int ambient_dim);
  RifsFamily(std::vector<Ifs> systems, std::vector<double> weights, int ambient_dim, Options options,
             const Tolerances& tol = {});

  std::size_t size() const noexcept { return systems_.size(); }
  const Ifs& system(std::size_t i) const { return systems_.at(i); }
  const std::vector<Ifs>& systems() const noexcept { return systems_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& cumulative_weights() const noexcept { return cumulative_; }
  int ambient_dim() const noexcept { return dim_; }

  double c_min() const noexcept { return c_min_; }
  double c_max() const noexcept { return c_max_; }
  // N: the largest number of maps in any system.
  std::size_t max_maps() const noexcept { return max_maps_; }

  bool has_geometry() const noexcept { return options_.has_geometry; }
  bool uosc_declared() const noexcept { return options_.uosc_declared; }
  // Every system is internally equicontractive (ratios may differ across systems).
  bool equicontractive_systems() const noexcept { return equicontractive_; }

 private:
  std::vector<Ifs> systems_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  int dim_;
  Options options_;
  double c_min_ = 1.0;
  double c_max_ = 0.0;
  std::size_t max_maps_ = 0;
  bool equicontractive_ = true;
};

enum class DimensionModel { recursive, homogeneous };

const char* to_string(DimensionModel model) noexcept;

struct GapWitness {
  double epsilon;
  double gamma;
  double p0;
  std::vector<std::size_t> systems;  // the set B achieving the gap
};

struct ConditionsReport {
  bool n_bound_ok = false;
  bool ratio_bounds_ok = false;
  bool recursive_supercritical = false;    // E[S^0] > 1
  bool homogeneous_supercritical = false;  // E[log S^0] > 0
  std::optional<double> almost_deterministic_at;
  std::optional<GapWitness> gap;

  bool supercritical(DimensionModel model) const noexcept {
    return model == DimensionModel::recursive ? recursive_supercritical : homogeneous_supercritical;
  }
};

// S^s_lambda = sum_j (c_lambda^j)^s. Throws std::out_of_range on a bad index.
double moment(const RifsFamily& family, std::size_t lambda_index, double s);

ConditionsReport validate(const RifsFamily& family, DimensionModel model, const Tolerances& tol = {});

// The unique s with E[log S^s] = 0 (homogeneous) or E[S^s] = 1 (recursive).
double dimension(const RifsFamily& family, DimensionModel model, const Tolerances& tol = {});

// E[S^s] - 1 or E[log S^s]; strictly decreasing in s.
double dimension_objective(const RifsFamily& family, DimensionModel model, double s);

struct LogMomentStats {
  double mean;
  double variance;
};

LogMomentStats log_moment_stats(const RifsFamily& family, double s);

// Root of a strictly decreasing function on [lo, hi] with f(lo) > 0 > f(hi).
double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace codetree
