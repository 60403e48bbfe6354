#include "codetree/code_tree.hpp"

#include "codetree/errors.hpp"
#include "codetree/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace codetree {

namespace {

enum Tag : std::uint64_t {
  kTagLabel = 1,
  kTagLevel,
  kTagBuffer,
  kTagSlot,
  kTagBlock,
  kTagBlockKey,
};

std::uint64_t model_tag(ModelKind kind) {
  return 0x5eed0000ULL + static_cast<std::uint64_t>(kind);
}

std::vector<double> cumulate(const std::vector<double>& w, const std::string& field) {
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) throw ParameterError(field + ": weights must be non-negative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError(field + ": weights must sum to 1");
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  c.back() = 1.0;
  return c;
}

}  // namespace

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::recursive: return "recursive";
    case ModelKind::homogeneous: return "homogeneous";
    case ModelKind::v_variable: return "v_variable";
    case ModelKind::neck_block: return "neck_block";
  }
  return "unknown";
}

Realization::Realization(ModelSpec model, std::uint64_t seed, std::shared_ptr<const RifsFamily> family)
    : model_(std::move(model)), seed_(seed), seed_key_(hash_combine(mix64(seed), model_tag(model_.kind))),
      family_(std::move(family)) {
  if (!family_) throw ParameterError("realization requires a family");
  if (model_.kind == ModelKind::v_variable && model_.buffers < 1) {
    throw ParameterError("v_variable requires V >= 1");
  }
  if (model_.kind == ModelKind::neck_block) {
    if (model_.templates.empty()) throw ParameterError("neck_block requires at least one block template");
    std::vector<double> tw;
    for (std::size_t t = 0; t < model_.templates.size(); ++t) {
      const auto& tmpl = model_.templates[t];
      const std::string field = "templates[" + std::to_string(t) + "]";
      if (tmpl.length < 1) throw ParameterError(field + ": block length must be >= 1");
      if (tmpl.level_weights.size() != tmpl.length) {
        throw ParameterError(field + ": need one label distribution per block level");
      }
      std::vector<std::vector<double>> levels;
      for (const auto& row : tmpl.level_weights) {
        if (row.size() != family_->size()) {
          throw ParameterError(field + ": label distribution size must equal the number of systems");
        }
        levels.push_back(cumulate(row, field));
      }
      block_cumulative_.push_back(std::move(levels));
      tw.push_back(tmpl.weight);
    }
    const double total = std::accumulate(tw.begin(), tw.end(), 0.0);
    if (!(total > 0.0)) throw ParameterError("neck_block template weights must be positive");
    for (double& w : tw) w /= total;
    template_cumulative_ = cumulate(tw, "templates");
    root_ = enter_block(0, 0);
  } else {
    root_.key = seed_key_;
  }
}

std::size_t Realization::draw(std::span<const double> cumulative, std::uint64_t key) const {
  return pick_index(cumulative, to_unit(key));
}

NodeState Realization::enter_block(std::uint64_t block, std::uint64_t start) const {
  NodeState s;
  s.level = start;
  s.block = block;
  s.block_start = start;
  s.block_template = static_cast<std::uint32_t>(
      draw(template_cumulative_, hash_words(seed_key_, kTagBlock, block)));
  s.block_length = model_.templates[s.block_template].length;
  s.key = hash_words(seed_key_, kTagBlockKey, block);
  return s;
}

NodeState Realization::child(const NodeState& parent, std::uint32_t j) const {
  NodeState c = parent;
  c.level = parent.level + 1;
  switch (model_.kind) {
    case ModelKind::recursive:
      c.key = hash_combine(parent.key, j);
      break;
    case ModelKind::homogeneous:
      break;
    case ModelKind::v_variable:
      c.slot = static_cast<std::uint32_t>(
          pick_uniform(hash_words(seed_key_, kTagSlot, parent.level, parent.slot, j), model_.buffers));
      break;
    case ModelKind::neck_block:
      if (c.level == parent.block_start + parent.block_length) {
        c = enter_block(parent.block + 1, c.level);
      } else {
        c.key = hash_combine(parent.key, j);
      }
      break;
  }
  return c;
}

std::size_t Realization::label(const NodeState& node) const {
  const auto& cum = family_->cumulative_weights();
  switch (model_.kind) {
    case ModelKind::recursive:
      return draw(cum, hash_combine(node.key, kTagLabel));
    case ModelKind::homogeneous:
      return draw(cum, hash_words(seed_key_, kTagLevel, node.level));
    case ModelKind::v_variable:
      return draw(cum, hash_words(seed_key_, kTagBuffer, node.level, node.slot));
    case ModelKind::neck_block:
      return draw(block_cumulative_[node.block_template][node.level - node.block_start],
                  hash_combine(node.key, kTagLabel));
  }
  return 0;
}

NodeState Realization::state_at(std::span<const std::uint32_t> address) const {
  NodeState s = root_;
  for (std::size_t i = 0; i < address.size(); ++i) {
    if (address[i] >= live_children(s)) {
      throw std::out_of_range("address leaves the live tree at position " + std::to_string(i));
    }
    s = child(s, address[i]);
  }
  return s;
}

Realization Realization::rerooted(const NodeState& node) const {
  Realization r = *this;
  r.root_ = node;
  return r;
}

Realization sample(const ModelSpec& model, std::uint64_t seed, std::shared_ptr<const RifsFamily> family) {
  return Realization(model, seed, std::move(family));
}

// ---------------------------------------------------------------------------

CodingStream::CodingStream(const Realization& r, Stop stop, std::size_t level, double log_epsilon)
    : r_(&r), stop_(stop), level_(level), log_epsilon_(log_epsilon) {}

bool CodingStream::emit_here() const {
  if (stop_ == Stop::level) return current_.letters.size() == level_;
  return current_.log_ratio <= log_epsilon_;
}

bool CodingStream::next() {
  const auto& family = r_->family();
  const auto push = [&](const NodeState& node, double log_ratio, bool leaf) {
    std::uint32_t sys = 0;
    std::uint32_t n = 0;
    if (!leaf) {
      sys = static_cast<std::uint32_t>(r_->label(node));
      n = static_cast<std::uint32_t>(family.system(sys).size());
    }
    stack_.push_back({node, sys, n, 0, log_ratio});
  };
  const auto pop = [this] {
    if (stack_.size() > 1) {
      current_.letters.pop_back();
      current_.address.pop_back();
    }
    stack_.pop_back();
    current_.log_ratio = stack_.empty() ? 0.0 : stack_.back().log_ratio;
  };

  if (!started_) {
    started_ = true;
    current_ = Coding{};
    const bool emit = emit_here();
    push(r_->root(), 0.0, emit);
    if (emit) {
      ++emitted_;
      return true;
    }
  } else if (!stack_.empty()) {
    pop();
  }

  while (!stack_.empty()) {
    Frame& f = stack_.back();
    if (f.next_child >= f.n_children) {
      pop();
      continue;
    }
    const std::uint32_t j = f.next_child++;
    const std::uint32_t sys = f.system;
    const NodeState node = r_->child(f.node, j);
    current_.letters.push_back({sys, j});
    current_.address.push_back(j);
    current_.log_ratio = f.log_ratio + family.system(sys).maps[j].log_ratio();
    const bool emit = emit_here();
    push(node, current_.log_ratio, emit);
    if (emit) {
      ++emitted_;
      return true;
    }
  }
  return false;
}

CodingStream coding_level(const Realization& r, std::size_t k) {
  return CodingStream(r, CodingStream::Stop::level, k, 0.0);
}

CodingStream stopping_set(const Realization& r, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("stopping_set requires 0 < epsilon < 1");
  if (!(r.family().c_max() < 1.0)) throw PreconditionError("stopping_set requires c_max < 1");
  return CodingStream(r, CodingStream::Stop::ratio, 0, std::log(epsilon));
}


// ---------------------------------------------------------------------------

namespace {

// Slots reachable by live nodes one level below `slots` (sorted, unique).
std::vector<std::uint32_t> advance_slots(const Realization& r, std::uint64_t level,
                                         const std::vector<std::uint32_t>& slots) {
  std::vector<std::uint32_t> next;
  for (const auto slot : slots) {
    NodeState s;
    s.level = level;
    s.slot = slot;
    const auto n = r.live_children(s);
    for (std::uint32_t j = 0; j < n; ++j) next.push_back(r.child(s, j).slot);
  }
  std::sort(next.begin(), next.end());
  next.erase(std::unique(next.begin(), next.end()), next.end());
  return next;
}

}  // namespace

NeckList neck_list(const Realization& r, std::uint64_t up_to_level) {
  NeckList out;
  const NodeState& root = r.root();
  switch (r.model().kind) {
    case ModelKind::recursive:
      throw UnsupportedModelError("neck lists are not defined for the recursive model");
    case ModelKind::homogeneous:
      for (std::uint64_t k = 1; k <= up_to_level; ++k) out.necks.push_back(k);
      break;
    case ModelKind::v_variable: {
      std::vector<std::uint32_t> slots{root.slot};
      for (std::uint64_t k = 1; k <= up_to_level; ++k) {
        slots = advance_slots(r, root.level + k - 1, slots);
        if (slots.empty()) break;
        if (slots.size() == 1) out.necks.push_back(k);
      }
      break;
    }
    case ModelKind::neck_block: {
      NodeState s = root;
      for (;;) {
        const std::uint64_t next_start = s.block_start + s.block_length;
        const std::uint64_t rel = next_start - root.level;
        if (rel > up_to_level) break;
        out.necks.push_back(rel);
        NodeState probe = s;
        probe.level = next_start - 1;
        s = r.child(probe, 0);
      }
      break;
    }
  }
  return out;
}

std::optional<std::uint64_t> first_neck(const Realization& r, std::uint64_t horizon) {
  const NodeState& root = r.root();
  switch (r.model().kind) {
    case ModelKind::recursive:
      throw UnsupportedModelError("neck lists are not defined for the recursive model");
    case ModelKind::homogeneous:
      return horizon >= 1 ? std::optional<std::uint64_t>(1) : std::nullopt;
    case ModelKind::v_variable: {
      std::vector<std::uint32_t> slots{root.slot};
      for (std::uint64_t k = 1; k <= horizon; ++k) {
        slots = advance_slots(r, root.level + k - 1, slots);
        if (slots.empty()) return std::nullopt;
        if (slots.size() == 1) return k;
      }
      return std::nullopt;
    }
    case ModelKind::neck_block: {
      const std::uint64_t rel = root.block_start + root.block_length - root.level;
      return rel <= horizon ? std::optional<std::uint64_t>(rel) : std::nullopt;
    }
  }
  return std::nullopt;
}

Realization neck_shift(const Realization& r, std::uint64_t horizon) {
  const auto n1 = first_neck(r, horizon);
  if (!n1) {
    throw HorizonError("no neck found within " + std::to_string(horizon) + " levels");
  }
  auto stream = coding_level(r, *n1);
  if (!stream.next()) {
    throw HorizonError("tree is extinct before its first neck at level " + std::to_string(*n1));
  }
  return r.rerooted(r.state_at(stream.current().address));
}

}  // namespace codetree
