#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "resalloc/rng.hpp"
#include "resalloc/sim_env.hpp"

namespace resalloc::replay {

using env::Observation;

struct Transition {
  Observation state;
  int action = 0;
  double reward = 0.0;
  Observation next_state;
  bool terminal = false;
};

struct SampledTransition {
  std::size_t index = 0;  // storage slot
  const Transition* transition = nullptr;
  double is_weight = 1.0;
};

using Batch = std::vector<SampledTransition>;

// Fixed-capacity ring; the oldest entry is overwritten first.
class RingStorage {
 public:
  explicit RingStorage(std::size_t capacity);

  // Returns the slot written.
  std::size_t push(Transition t);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return items_.size() == capacity_; }
  const Transition& at(std::size_t slot) const { return items_.at(slot); }
  // Slot the next push will write.
  std::size_t cursor() const { return cursor_; }

  // Retained transitions, oldest first.
  std::vector<const Transition*> chronological() const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> items_;
};

class UniformMemory {
 public:
  explicit UniformMemory(std::size_t capacity) : storage_(capacity) {}

  std::size_t push(Transition t) { return storage_.push(std::move(t)); }

  // I.i.d. uniform slots with replacement. nullopt (not ready) while the
  // memory holds fewer than max(batch_size, min_size) transitions.
  std::optional<Batch> sample_uniform(std::size_t batch_size, Rng& rng,
                                      std::size_t min_size = 0) const;

  const RingStorage& storage() const { return storage_; }
  std::size_t size() const { return storage_.size(); }

 private:
  RingStorage storage_;
};

/// Complete binary tree over `capacity` leaves (padded to a power of two);
/// every internal node holds the sum of its children.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  void set(std::size_t leaf, double priority);
  double get(std::size_t leaf) const { return nodes_[leaves_ + leaf]; }
  double total() const { return nodes_[1]; }
  std::size_t capacity() const { return capacity_; }

  // Leaf whose cumulative interval [sum of previous leaves, + p_i) contains value.
  std::size_t find_prefix(double value) const;

  // Leaf sum computed from scratch.
  double recompute_total() const;

 private:
  std::size_t capacity_;
  std::size_t leaves_;
  std::vector<double> nodes_;
};

// (|td| + eps)^alpha; NumericError for a non-finite td.
double priority_from_td(double td_error, double alpha, double eps);

/// Proportional prioritized replay: ring storage plus a sum-tree of priorities.
class PrioritizedMemory {
 public:
  explicit PrioritizedMemory(std::size_t capacity);

  // New transitions get the running maximum priority unless one is given.
  std::size_t push(Transition t, std::optional<double> initial_priority = std::nullopt);

  // Stratified sampling: one uniform point per equal segment of [0, total).
  // Importance weights (N * P(i))^-beta are normalized by the batch maximum.
  std::optional<Batch> sample_prioritized(std::size_t batch_size, double beta, Rng& rng,
                                          std::size_t min_size = 0) const;

  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors,
                         double alpha, double eps);

  double max_priority() const { return max_priority_; }
  const SumTree& tree() const { return tree_; }
  const RingStorage& storage() const { return storage_; }
  std::size_t size() const { return storage_.size(); }

 private:
  RingStorage storage_;
  SumTree tree_;
  double max_priority_ = 1.0;
};

// Bit k set means ensemble head k trains on the transition.
using Mask = std::uint64_t;
inline constexpr int kMaxHeads = 64;

Mask draw_mask(int heads, double mask_prob, Rng& rng);

/// Shared memory for a bootstrapped ensemble; each transition carries a mask
/// fixed at insertion.
class BootstrapMemory {
 public:
  BootstrapMemory(std::size_t capacity, int heads, double mask_prob);

  // Draws a fresh Bernoulli(mask_prob) mask per head; returns the mask.
  Mask push(Transition t, Rng& mask_rng);
  void push(Transition t, Mask mask);

  Mask mask(std::size_t slot) const { return masks_.at(slot); }
  std::size_t eligible_count(int head) const { return eligible_.at(head); }
  int heads() const { return heads_; }

  // Uniform over the slots whose mask includes `head`. nullopt while fewer
  // than batch_size such transitions exist.
  std::optional<Batch> sample_for_head(int head, std::size_t batch_size, Rng& rng) const;

  const RingStorage& storage() const { return storage_; }
  std::size_t size() const { return storage_.size(); }

 private:
  RingStorage storage_;
  int heads_;
  double mask_prob_;
  std::vector<Mask> masks_;
  std::vector<std::size_t> eligible_;
};

struct TransitionLogRow {
  env::TrajectoryRow step;
  Mask mask = 0;
};

// Trajectory columns plus `mask`, written as one 0/1 character per head.
void write_transition_log_csv(std::ostream& out, std::span<const TransitionLogRow> rows, int heads);

}  // namespace resalloc::replay
