#include "codetree/random.hpp"

#include <algorithm>

namespace codetree {

std::size_t pick_index(std::span<const double> cumulative, double u) noexcept {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) {
    // u at the rounding edge of the last bucket; step back over zero-weight tails.
    auto last = cumulative.size() - 1;
    while (last > 0 && cumulative[last] == cumulative[last - 1]) --last;
    return last;
  }
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace codetree
