#pragma once

#include "codetree/code_tree.hpp"
#include "codetree/random.hpp"
#include "codetree/rifs.hpp"

#include <memory>
#include <string>
#include <vector>

namespace codetree::testing {

inline constexpr double kWorkedHomogeneous = 0.8154648767857287;
inline constexpr double kWorkedRecursive = 0.8340437671464697;
inline constexpr double kWorkedVariance = 0.04110048847329136;

inline Ifs ifs_of(std::string label, std::vector<double> ratios) {
  Ifs out{std::move(label), {}};
  for (double c : ratios) out.maps.emplace_back(c);
  return out;
}

// Maps x -> c x + t on [0, 1].
inline Ifs line_ifs(std::string label, std::vector<std::pair<double, double>> maps) {
  Ifs out{std::move(label), {}};
  for (auto [c, t] : maps) {
    out.maps.emplace_back(c, Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, t));
  }
  return out;
}

// A = {1/3, 1/3}, B = {1/3, 1/3, 1/3}, weights 1/2, 1/2; no geometry.
inline std::shared_ptr<const RifsFamily> worked_family() {
  return std::make_shared<const RifsFamily>(
      std::vector<Ifs>{ifs_of("A", {1.0 / 3, 1.0 / 3}), ifs_of("B", {1.0 / 3, 1.0 / 3, 1.0 / 3})},
      std::vector<double>{0.5, 0.5}, 1, RifsFamily::Options{false, false});
}

// The worked family realised on [0, 1] with the UOSC.
inline std::shared_ptr<const RifsFamily> worked_line_family() {
  return std::make_shared<const RifsFamily>(
      std::vector<Ifs>{line_ifs("A", {{1.0 / 3, 0.0}, {1.0 / 3, 2.0 / 3}}),
                       line_ifs("B", {{1.0 / 3, 0.0}, {1.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}})},
      std::vector<double>{0.5, 0.5}, 1, RifsFamily::Options{true, true});
}

// {x/2, x/2 + 1/2}, deterministic.
inline std::shared_ptr<const RifsFamily> halves_family() {
  return std::make_shared<const RifsFamily>(std::vector<Ifs>{line_ifs("H", {{0.5, 0.0}, {0.5, 0.5}})},
                                            std::vector<double>{1.0}, 1, RifsFamily::Options{true, true});
}

// First seed whose homogeneous labels on levels 0.. start with `prefix`.
inline std::uint64_t seed_with_prefix(const std::shared_ptr<const RifsFamily>& family,
                                      const std::vector<std::size_t>& prefix, std::uint64_t from = 0) {
  for (std::uint64_t seed = from;; ++seed) {
    const Realization r(ModelSpec::homogeneous(), seed, family);
    NodeState s = r.root();
    bool ok = true;
    for (std::size_t want : prefix) {
      if (r.label(s) != want) {
        ok = false;
        break;
      }
      s = r.child(s, 0);
    }
    if (ok) return seed;
  }
}

// Random equicontractive family: 2..5 systems, each with 1..6 maps of one ratio.
struct RandomFamily {
  std::shared_ptr<const RifsFamily> family;
  double ratio;
  std::vector<double> counts;
  std::vector<double> weights;
};

inline RandomFamily random_equicontractive(std::uint64_t key) {
  CounterStream g(key);
  RandomFamily out;
  out.ratio = 0.05 + 0.4 * g.uniform();
  const std::size_t m = 2 + pick_uniform(g(), 4);
  std::vector<Ifs> systems;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t n = 1 + pick_uniform(g(), 6);
    out.counts.push_back(static_cast<double>(n));
    systems.push_back(ifs_of("S" + std::to_string(i), std::vector<double>(n, out.ratio)));
    out.weights.push_back(0.1 + g.uniform());
    total += out.weights.back();
  }
  // Guarantee supercriticality for both models.
  if (out.counts.front() < 2) {
    out.counts.front() = 2;
    systems.front() = ifs_of("S0", {out.ratio, out.ratio});
  }
  for (auto& w : out.weights) w /= total;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) sum += out.weights[i];
  out.weights.back() = 1.0 - sum;
  out.family = std::make_shared<const RifsFamily>(std::move(systems), out.weights, 1, RifsFamily::Options{false, false});
  return out;
}

}  // namespace codetree::testing
