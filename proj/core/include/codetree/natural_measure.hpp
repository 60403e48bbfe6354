#pragma once

#include "codetree/code_tree.hpp"

#include <span>

namespace codetree {

// Cylinder measure splitting each node's mass equally among its live
// children. On homogeneous trees a level-k cylinder gets (prod_i N_i)^-1.
class NaturalMeasure {
 public:
  explicit NaturalMeasure(Realization r) : r_(std::move(r)) {}

  const Realization& realization() const noexcept { return r_; }

  // Throws std::out_of_range for an address outside the live tree.
  double log_mass(std::span<const std::uint32_t> address) const;
  double mass(std::span<const std::uint32_t> address) const { return std::exp(log_mass(address)); }

 private:
  Realization r_;
};

}  // namespace codetree
