#include "resalloc/replay_memory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "resalloc/errors.hpp"

namespace resalloc::replay {

RingStorage::RingStorage(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  items_.reserve(capacity);
}

std::size_t RingStorage::push(Transition t) {
  const std::size_t slot = cursor_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[slot] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
  return slot;
}

std::vector<const Transition*> RingStorage::chronological() const {
  std::vector<const Transition*> out;
  out.reserve(items_.size());
  const std::size_t start = full() ? cursor_ : 0;
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(&items_[(start + i) % items_.size()]);
  return out;
}

std::optional<Batch> UniformMemory::sample_uniform(std::size_t batch_size, Rng& rng,
                                                   std::size_t min_size) const {
  const std::size_t n = storage_.size();
  if (n == 0 || n < batch_size || n < min_size) return std::nullopt;
  Batch batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t slot = rng.uniform_index(n);
    batch.push_back({slot, &storage_.at(slot), 1.0});
  }
  return batch;
}

// ---- sum tree -------------------------------------------------------------

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), leaves_(1) {
  if (capacity == 0) throw ConfigError("sum-tree capacity must be positive");
  while (leaves_ < capacity) leaves_ *= 2;
  nodes_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t leaf, double priority) {
  if (leaf >= capacity_) throw ContractError("sum-tree leaf out of range");
  if (!std::isfinite(priority) || priority < 0.0) {
    throw NumericError("sum-tree priority must be finite and non-negative");
  }
  std::size_t node = leaves_ + leaf;
  nodes_[node] = priority;
  for (node /= 2; node >= 1; node /= 2) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t SumTree::find_prefix(double value) const {
  std::size_t node = 1;
  while (node < leaves_) {
    const std::size_t left = 2 * node;
    // Rounding can leave value just above a subtree sum; never descend into an empty subtree.
    if (value < nodes_[left] || nodes_[left + 1] <= 0.0) {
      node = left;
    } else {
      value -= nodes_[left];
      node = left + 1;
    }
  }
  return node - leaves_;
}

double SumTree::recompute_total() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < capacity_; ++i) sum += nodes_[leaves_ + i];
  return sum;
}

double priority_from_td(double td_error, double alpha, double eps) {
  if (!std::isfinite(td_error)) throw NumericError("non-finite TD error for priority update");
  return std::pow(std::abs(td_error) + eps, alpha);
}

PrioritizedMemory::PrioritizedMemory(std::size_t capacity) : storage_(capacity), tree_(capacity) {}

std::size_t PrioritizedMemory::push(Transition t, std::optional<double> initial_priority) {
  const std::size_t slot = storage_.push(std::move(t));
  const double p = initial_priority.value_or(max_priority_);
  tree_.set(slot, p);
  max_priority_ = std::max(max_priority_, p);
  return slot;
}

std::optional<Batch> PrioritizedMemory::sample_prioritized(std::size_t batch_size, double beta,
                                                           Rng& rng, std::size_t min_size) const {
  const std::size_t n = storage_.size();
  const double total = tree_.total();
  if (n == 0 || n < min_size || batch_size == 0 || !(total > 0.0)) return std::nullopt;

  Batch batch;
  batch.reserve(batch_size);
  const double segment = total / static_cast<double>(batch_size);
  double max_weight = 0.0;
  for (std::size_t b = 0; b < batch_size; ++b) {
    double point = (static_cast<double>(b) + rng.uniform()) * segment;
    point = std::min(point, std::nextafter(total, 0.0));
    const std::size_t slot = tree_.find_prefix(point);
    const double prob = tree_.get(slot) / total;
    const double weight = std::pow(static_cast<double>(n) * prob, -beta);
    max_weight = std::max(max_weight, weight);
    batch.push_back({slot, &storage_.at(slot), weight});
  }
  for (auto& s : batch) s.is_weight /= max_weight;
  return batch;
}

void PrioritizedMemory::update_priorities(std::span<const std::size_t> indices,
                                          std::span<const double> td_errors, double alpha,
                                          double eps) {
  if (indices.size() != td_errors.size()) throw ContractError("indices and TD errors differ in length");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= storage_.size()) throw ContractError("priority index out of range");
    const double p = priority_from_td(td_errors[i], alpha, eps);
    tree_.set(indices[i], p);
    max_priority_ = std::max(max_priority_, p);
  }
}

// ---- bootstrap masks ------------------------------------------------------

Mask draw_mask(int heads, double mask_prob, Rng& rng) {
  Mask m = 0;
  for (int k = 0; k < heads; ++k)
    if (rng.bernoulli(mask_prob)) m |= Mask{1} << k;
  return m;
}

BootstrapMemory::BootstrapMemory(std::size_t capacity, int heads, double mask_prob)
    : storage_(capacity), heads_(heads), mask_prob_(mask_prob), eligible_(heads, 0) {
  if (heads < 1 || heads > kMaxHeads) throw ConfigError("ensemble size must be in [1, 64]");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw ConfigError("mask probability must be in [0, 1]");
  masks_.reserve(capacity);
}

Mask BootstrapMemory::push(Transition t, Rng& mask_rng) {
  const Mask m = draw_mask(heads_, mask_prob_, mask_rng);
  push(std::move(t), m);
  return m;
}

void BootstrapMemory::push(Transition t, Mask mask) {
  const bool overwriting = storage_.full();
  const std::size_t slot = storage_.push(std::move(t));
  if (overwriting) {
    for (int k = 0; k < heads_; ++k)
      if (masks_[slot] >> k & 1) --eligible_[k];
    masks_[slot] = mask;
  } else {
    masks_.push_back(mask);
  }
  for (int k = 0; k < heads_; ++k)
    if (mask >> k & 1) ++eligible_[k];
}

std::optional<Batch> BootstrapMemory::sample_for_head(int head, std::size_t batch_size,
                                                      Rng& rng) const {
  if (head < 0 || head >= heads_) throw ContractError("head index out of range");
  const std::size_t eligible = eligible_[head];
  if (eligible == 0 || eligible < batch_size) return std::nullopt;
  Batch batch;
  batch.reserve(batch_size);
  const std::size_t n = storage_.size();
  // Rejection keeps the draw uniform over eligible slots.
  while (batch.size() < batch_size) {
    const std::size_t slot = rng.uniform_index(n);
    if (masks_[slot] >> head & 1) batch.push_back({slot, &storage_.at(slot), 1.0});
  }
  return batch;
}

void write_transition_log_csv(std::ostream& out, std::span<const TransitionLogRow> rows, int heads) {
  out << "step,action,reward,unutilized,items_performing,resources_utilized,queue_len,mask\n";
  for (const auto& r : rows) {
    const auto& s = r.step;
    out << s.step << ',' << s.action << ',' << s.reward << ',' << s.info.unutilized << ','
        << s.info.items_performing << ',' << s.info.resources_utilized << ',' << s.info.queue_len
        << ',';
    for (int k = 0; k < heads; ++k) out << ((r.mask >> k & 1) ? '1' : '0');
    out << '\n';
  }
}

}  // namespace resalloc::replay
