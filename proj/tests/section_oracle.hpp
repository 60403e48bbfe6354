#pragma once

// Brute-force section enumeration on a depth-capped tree. A section is an
// antichain of nodes with depth in [depth_min, depth_cap] meeting every
// root-to-cap path; branches that die out need no cover.

#include "codetree/code_tree.hpp"
#include "codetree/gauge.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace codetree::testing {

class SectionOracle {
 public:
  SectionOracle(const Realization& r, const GaugeFunction& h, std::uint64_t depth_min, std::uint64_t depth_cap,
                double log_scale = 0.0)
      : r_(r), h_(h), min_(depth_min), cap_(depth_cap), log_scale_(log_scale) {
    root_ = build(r.root(), {}, 0, 0.0);
  }

  // Number of sections, saturating at `limit`.
  double count() const { return count_of(root_); }

  std::vector<std::vector<int>> sections() const { return enumerate(root_); }

  double section_sum(const std::vector<int>& section) const {
    double sum = 0.0;
    for (int i : section) sum += std::exp(h_.eval_log(log_scale_ + nodes_[i].log_ratio));
    return sum;
  }

  double minimum() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : sections()) best = std::min(best, section_sum(s));
    return best;
  }

  // Independent structural check: antichain plus coverage of every capped leaf.
  bool is_section(const std::vector<int>& section) const {
    for (int i : section) {
      if (nodes_[i].depth < min_) return false;
      for (int j : section) {
        if (i != j && is_prefix(nodes_[i].address, nodes_[j].address)) return false;
      }
    }
    for (int leaf : leaves_) {
      int hits = 0;
      for (int i : section) hits += is_prefix(nodes_[i].address, nodes_[leaf].address);
      if (hits != 1) return false;
    }
    return true;
  }

  const NodeAddress& address(int i) const { return nodes_[i].address; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    NodeAddress address;
    std::uint64_t depth;
    double log_ratio;
    std::vector<int> children;
  };

  static bool is_prefix(const NodeAddress& a, const NodeAddress& b) {
    if (a.size() > b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return false;
    }
    return true;
  }

  int build(const NodeState& s, NodeAddress addr, std::uint64_t depth, double log_ratio) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({addr, depth, log_ratio, {}});
    if (depth == cap_) {
      leaves_.push_back(id);
      return id;
    }
    const auto& maps = r_.family().system(r_.label(s)).maps;
    for (std::uint32_t j = 0; j < maps.size(); ++j) {
      NodeAddress child = addr;
      child.push_back(j);
      const int c = build(r_.child(s, j), child, depth + 1, log_ratio + std::log(maps[j].ratio()));
      nodes_[id].children.push_back(c);
    }
    return id;
  }

  double count_of(int v) const {
    const Node& n = nodes_[v];
    if (n.depth == cap_) return 1.0;
    double prod = 1.0;  // a dead node is covered by the empty set
    for (int c : n.children) prod *= count_of(c);
    return (n.depth >= min_ ? 1.0 : 0.0) + prod;
  }

  std::vector<std::vector<int>> enumerate(int v) const {
    const Node& n = nodes_[v];
    std::vector<std::vector<int>> out;
    if (n.depth >= min_) out.push_back({v});
    if (n.depth == cap_) return out;
    std::vector<std::vector<int>> acc{{}};
    for (int c : n.children) {
      const auto sub = enumerate(c);
      std::vector<std::vector<int>> next;
      for (const auto& a : acc) {
        for (const auto& b : sub) {
          auto merged = a;
          merged.insert(merged.end(), b.begin(), b.end());
          next.push_back(std::move(merged));
        }
      }
      acc = std::move(next);
    }
    out.insert(out.end(), acc.begin(), acc.end());
    return out;
  }

  const Realization& r_;
  GaugeFunction h_;
  std::uint64_t min_;
  std::uint64_t cap_;
  double log_scale_;
  std::vector<Node> nodes_;
  std::vector<int> leaves_;
  int root_ = 0;
};

}  // namespace codetree::testing
