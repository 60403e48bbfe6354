#include "codetree/natural_measure.hpp"

#include <cmath>

namespace codetree {

double NaturalMeasure::log_mass(std::span<const std::uint32_t> address) const {
  NodeState s = r_.root();
  double lm = 0.0;
  for (std::size_t i = 0; i < address.size(); ++i) {
    const auto n = r_.live_children(s);
    if (address[i] >= n) {
      throw std::out_of_range("address leaves the live tree at position " + std::to_string(i));
    }
    lm -= std::log(static_cast<double>(n));
    s = r_.child(s, address[i]);
  }
  return lm;
}

}  // namespace codetree
