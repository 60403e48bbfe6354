#include "codetree/rifs.hpp"

#include "codetree/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace codetree {

SimilarityMap::SimilarityMap(double ratio, int dim)
    : SimilarityMap(ratio, Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)) {}

SimilarityMap::SimilarityMap(double ratio, Eigen::MatrixXd isometry, Eigen::VectorXd translation,
                             double orthogonality_tol)
    : ratio_(ratio), log_ratio_(std::log(ratio)), isometry_(std::move(isometry)),
      translation_(std::move(translation)) {
  if (!std::isfinite(ratio_) || ratio_ <= 0.0) {
    throw ConfigError("ratio", "contraction ratio must be finite and positive");
  }
  if (isometry_.rows() != isometry_.cols() || isometry_.rows() != translation_.size()) {
    throw ConfigError("isometry", "isometry must be d x d with d = translation length");
  }
  const auto n = isometry_.rows();
  const Eigen::MatrixXd defect = isometry_.transpose() * isometry_ - Eigen::MatrixXd::Identity(n, n);
  if (n > 0 && defect.cwiseAbs().maxCoeff() > orthogonality_tol) {
    throw ConfigError("isometry", "matrix is not orthogonal");
  }
}

Eigen::VectorXd SimilarityMap::apply(const Eigen::VectorXd& x) const {
  return ratio_ * (isometry_ * x) + translation_;
}

bool Ifs::equicontractive() const noexcept {
  return std::all_of(maps.begin(), maps.end(),
                     [&](const SimilarityMap& m) { return m.ratio() == maps.front().ratio(); });
}

RifsFamily::RifsFamily(std::vector<Ifs> systems, std::vector<double> weights, int ambient_dim)
    : RifsFamily(std::move(systems), std::move(weights), ambient_dim, Options{}) {}

RifsFamily::RifsFamily(std::vector<Ifs> systems, std::vector<double> weights, int ambient_dim,
                       Options options, const Tolerances& tol)
    : systems_(std::move(systems)), weights_(std::move(weights)), dim_(ambient_dim), options_(options) {
  if (dim_ < 1) throw ConfigError("ambient_dim", "must be a positive integer");
  if (systems_.empty()) throw ConfigError("systems", "at least one system is required");
  if (weights_.size() != systems_.size()) {
    throw ConfigError("weights", "one weight per system is required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw ConfigError("systems[" + std::to_string(i) + "].weight", "must be finite and non-negative");
    }
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > tol.structural) {
    std::ostringstream msg;
    msg << "weights sum to " << total << ", expected 1";
    throw ConfigError("weights", msg.str());
  }
  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;

  for (std::size_t i = 0; i < systems_.size(); ++i) {
    const auto& sys = systems_[i];
    max_maps_ = std::max(max_maps_, sys.size());
    equicontractive_ = equicontractive_ && sys.equicontractive();
    for (std::size_t j = 0; j < sys.size(); ++j) {
      if (sys.maps[j].dim() != dim_) {
        throw ConfigError("systems[" + std::to_string(i) + "].maps[" + std::to_string(j) + "]",
                          "dimension does not match ambient_dim");
      }
      c_min_ = std::min(c_min_, sys.maps[j].ratio());
      c_max_ = std::max(c_max_, sys.maps[j].ratio());
    }
  }
}

const char* to_string(DimensionModel model) noexcept {
  return model == DimensionModel::recursive ? "recursive" : "homogeneous";
}

double moment(const RifsFamily& family, std::size_t lambda_index, double s) {
  if (lambda_index >= family.size()) {
    throw std::out_of_range("system index " + std::to_string(lambda_index) + " out of range");
  }
  double sum = 0.0;
  for (const auto& m : family.system(lambda_index).maps) sum += std::exp(s * m.log_ratio());
  return sum;
}

double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

double upper_bracket(std::size_t n_maps, double c_max) {
  return std::log(static_cast<double>(std::max<std::size_t>(n_maps, 1))) / std::log(1.0 / c_max) + 1.0;
}

// Root of S^s_lambda = 1, if any.
std::optional<double> system_root(const RifsFamily& family, std::size_t i, double tol) {
  const auto& sys = family.system(i);
  if (sys.size() == 0) return std::nullopt;
  if (sys.size() == 1) return 0.0;
  double c_max = 0.0;
  for (const auto& m : sys.maps) c_max = std::max(c_max, m.ratio());
  return bisect_decreasing([&](double s) { return moment(family, i, s) - 1.0; }, 0.0,
                           upper_bracket(sys.size(), c_max), tol);
}

}  // namespace

double dimension_objective(const RifsFamily& family, DimensionModel model, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double w = family.weights()[i];
    if (w <= 0.0) continue;
    const double m = moment(family, i, s);
    acc += model == DimensionModel::recursive ? w * m : w * std::log(m);
  }
  return model == DimensionModel::recursive ? acc - 1.0 : acc;
}

ConditionsReport validate(const RifsFamily& family, DimensionModel model, const Tolerances& tol) {
  ConditionsReport report;
  report.n_bound_ok = family.max_maps() >= 2;
  report.ratio_bounds_ok = family.c_min() > 0.0 && family.c_max() < 1.0 && family.max_maps() > 0;
  report.recursive_supercritical = dimension_objective(family, DimensionModel::recursive, 0.0) > 0.0;
  report.homogeneous_supercritical = dimension_objective(family, DimensionModel::homogeneous, 0.0) > 0.0;

  if (!report.ratio_bounds_ok) return report;

  std::optional<double> common;
  bool all_share = true;
  for (std::size_t i = 0; i < family.size() && all_share; ++i) {
    if (family.weights()[i] <= 0.0) continue;
    const auto root = system_root(family, i, tol.structural);
    if (!root) {
      all_share = false;
    } else if (!common) {
      common = root;
    } else if (std::abs(*root - *common) > tol.assertion) {
      all_share = false;
    }
  }
  if (all_share && common) {
    bool exact = true;
    for (std::size_t i = 0; i < family.size(); ++i) {
      if (family.weights()[i] > 0.0 && std::abs(moment(family, i, *common) - 1.0) > tol.assertion) exact = false;
    }
    if (exact) {
      report.almost_deterministic_at = common;
      return report;
    }
  }

  if (!report.supercritical(model)) return report;
  const double s = dimension(family, model, tol);
  const double eps = 0.01 * s;
  GapWitness gap{eps, -std::numeric_limits<double>::infinity(), 0.0, {}};
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family.weights()[i] <= 0.0) continue;
    const double m = moment(family, i, s - eps);
    if (m < 1.0) gap.gamma = std::max(gap.gamma, m);
  }
  if (std::isfinite(gap.gamma)) {
    for (std::size_t i = 0; i < family.size(); ++i) {
      if (family.weights()[i] > 0.0 && moment(family, i, s - eps) <= gap.gamma) {
        gap.p0 += family.weights()[i];
        gap.systems.push_back(i);
      }
    }
    report.gap = std::move(gap);
  }
  return report;
}

double dimension(const RifsFamily& family, DimensionModel model, const Tolerances& tol) {
  if (!(family.c_min() > 0.0 && family.c_max() < 1.0)) {
    throw PreconditionError("dimension requires all contraction ratios in (0, 1)");
  }
  const double at_zero = dimension_objective(family, model, 0.0);
  if (!(at_zero > 0.0)) {
    std::ostringstream msg;
    if (model == DimensionModel::recursive) {
      msg << "recursive model requires E[S^0] > 1, got E[S^0] = " << at_zero + 1.0;
    } else {
      msg << "homogeneous model requires E[log S^0] > 0, got E[log S^0] = " << at_zero;
    }
    throw PreconditionError(msg.str());
  }
  const double hi = upper_bracket(family.max_maps(), family.c_max());
  return bisect_decreasing([&](double s) { return dimension_objective(family, model, s); }, 0.0, hi,
                           tol.root);
}

LogMomentStats log_moment_stats(const RifsFamily& family, double s) {
  double mean = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double w = family.weights()[i];
    if (w > 0.0) mean += w * std::log(moment(family, i, s));
  }
  double var = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double w = family.weights()[i];
    if (w > 0.0) {
      const double d = std::log(moment(family, i, s)) - mean;
      var += w * d * d;
    }
  }
  return {mean, var};
}

}  // namespace codetree
