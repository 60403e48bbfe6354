#pragma once

// The N-ary code-tree: lazily labelled trees for the random recursive,
// homogeneous, V-variable and neck-block models; level and stopping-set
// streams of codings; neck lists and the neck shift.

#include "codetree/rifs.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace codetree {

// Child indices from the root, 0-based (entry j selects the (j+1)-th map).
using NodeAddress = std::vector<std::uint32_t>;

enum class ModelKind { recursive, homogeneous, v_variable, neck_block };

const char* to_string(ModelKind kind) noexcept;

// One block of the neck-block model. Inside a block, the label of a node is
// drawn independently per node from the distribution of its in-block level;
// every node at the block's first level shares one block realization, so
// block boundaries are necks.
struct BlockTemplate {
  std::uint32_t length = 1;
  double weight = 1.0;
  std::vector<std::vector<double>> level_weights;  // [length][systems]
};

struct ModelSpec {
  ModelKind kind = ModelKind::homogeneous;
  std::uint32_t buffers = 1;              // v_variable
  std::vector<BlockTemplate> templates;   // neck_block

  static ModelSpec recursive() { return {ModelKind::recursive, 1, {}}; }
  static ModelSpec homogeneous() { return {ModelKind::homogeneous, 1, {}}; }
  static ModelSpec v_variable(std::uint32_t v) { return {ModelKind::v_variable, v, {}}; }
  static ModelSpec neck_block(std::vector<BlockTemplate> templates) {
    return {ModelKind::neck_block, 1, std::move(templates)};
  }
};

// Cursor into a realization. Obtained from Realization::root()/child() only.
struct NodeState {
  std::uint64_t level = 0;        // absolute level in the underlying process
  std::uint64_t key = 0;          // address hash (recursive, in-block)
  std::uint32_t slot = 0;         // V-variable buffer
  std::uint64_t block = 0;        // neck-block index
  std::uint64_t block_start = 0;
  std::uint32_t block_length = 0;
  std::uint32_t block_template = 0;
};

// A sampled labelling. Immutable; label_of is a pure function of (model, seed, address).
class Realization {
 public:
  Realization(ModelSpec model, std::uint64_t seed, std::shared_ptr<const RifsFamily> family);

  const ModelSpec& model() const noexcept { return model_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const RifsFamily& family() const noexcept { return *family_; }
  const std::shared_ptr<const RifsFamily>& family_ptr() const noexcept { return family_; }

  const NodeState& root() const noexcept { return root_; }
  NodeState child(const NodeState& parent, std::uint32_t j) const;
  // Index of the system labelling this node.
  std::size_t label(const NodeState& node) const;
  std::uint32_t live_children(const NodeState& node) const {
    return static_cast<std::uint32_t>(family_->system(label(node)).size());
  }

  // Walks from the root; throws std::out_of_range if the address leaves the live tree.
  NodeState state_at(std::span<const std::uint32_t> address) const;
  std::size_t label_of(std::span<const std::uint32_t> address) const { return label(state_at(address)); }

  // Same process re-rooted at `node`.
  Realization rerooted(const NodeState& node) const;

 private:
  std::size_t draw(std::span<const double> cumulative, std::uint64_t key) const;
  NodeState enter_block(std::uint64_t block, std::uint64_t start) const;

  ModelSpec model_;
  std::uint64_t seed_;
  std::uint64_t seed_key_;
  std::shared_ptr<const RifsFamily> family_;
  std::vector<std::vector<std::vector<double>>> block_cumulative_;  // [template][level][system]
  std::vector<double> template_cumulative_;
  NodeState root_;
};

// Samples a realization. Throws ParameterError for V < 1 or malformed block templates.
Realization sample(const ModelSpec& model, std::uint64_t seed, std::shared_ptr<const RifsFamily> family);

struct Letter {
  std::uint32_t system;
  std::uint32_t map;
  friend bool operator==(const Letter&, const Letter&) = default;
};

struct Coding {
  std::vector<Letter> letters;
  NodeAddress address;
  double log_ratio = 0.0;

  std::size_t length() const noexcept { return letters.size(); }
  double ratio() const { return std::exp(log_ratio); }
};

// Depth-first stream of codings. `next()` advances; `current()` is valid until the next call.
class CodingStream {
 public:
  enum class Stop { level, ratio };

  CodingStream(const Realization& r, Stop stop, std::size_t level, double log_epsilon);

  bool next();
  const Coding& current() const noexcept { return current_; }
  std::size_t emitted() const noexcept { return emitted_; }

 private:
  struct Frame {
    NodeState node;
    std::uint32_t system;
    std::uint32_t n_children;
    std::uint32_t next_child;
    double log_ratio;
  };

  bool emit_here() const;

  const Realization* r_;
  Stop stop_;
  std::size_t level_;
  double log_epsilon_;
  std::vector<Frame> stack_;
  Coding current_;
  bool started_ = false;
  std::size_t emitted_ = 0;
};

// Every live coding at level k, in depth-first address order.
CodingStream coding_level(const Realization& r, std::size_t k);

// Codings with ratio <= epsilon whose parent has ratio > epsilon.
CodingStream stopping_set(const Realization& r, double epsilon);

struct NeckList {
  std::vector<std::uint64_t> necks;  // strictly increasing, relative to the realization root
};

NeckList neck_list(const Realization& r, std::uint64_t up_to_level);

inline constexpr std::uint64_t kDefaultNeckHorizon = 1'000'000;

// The realization rooted at the first live node of the first neck level.
Realization neck_shift(const Realization& r, std::uint64_t horizon = kDefaultNeckHorizon);

// First neck level (relative), or nullopt if none within the horizon.
std::optional<std::uint64_t> first_neck(const Realization& r, std::uint64_t horizon);

}  // namespace codetree
