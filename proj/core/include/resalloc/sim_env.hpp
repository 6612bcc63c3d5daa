#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "resalloc/rng.hpp"

namespace resalloc::env {

struct EnvConfig {
  int num_resources = 10;
  int target_unutilized = 2;
  double arrival_rate = 1.5;
  double mean_hold = 10.0;
  int min_hold = 3;
  double change_request_prob = 0.05;
  int reallocation_delay = 2;
  int max_queue = 50;
  int episode_length = 100;
  std::uint64_t seed = 0;

  // Throws ConfigError on the first violated invariant.
  void validate() const;

  int num_actions() const { return num_resources + 1; }
  int observation_size() const { return 2 * num_resources + 3; }
};

void to_json(nlohmann::json& j, const EnvConfig& c);
// Missing keys keep their default values; unknown keys are rejected.
void from_json(const nlohmann::json& j, EnvConfig& c);

enum class SlotStatus { Free, Held, Cooldown };

struct ResourceSlot {
  SlotStatus status = SlotStatus::Free;
  std::uint64_t item_id = 0;  // meaningful while Held
  int remaining = 0;          // hold time while Held, cooldown while Cooldown

  bool operator==(const ResourceSlot&) const = default;
};

struct WaitingItem {
  std::uint64_t item_id = 0;
  long eligible_at = 0;

  bool operator==(const WaitingItem&) const = default;
};

using Observation = std::vector<double>;

struct StepInfo {
  int unutilized = 0;
  int items_performing = 0;
  int resources_utilized = 0;
  int dropped_arrivals = 0;  // this step only
  int queue_len = 0;
  int allocated = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  // Time-limit truncation at step == episode_length.
  bool terminal = false;
  StepInfo info;
};

// Counters and reward for a slot vector. Used by the SCORE phase.
StepInfo count_slots(std::span<const ResourceSlot> slots);
double reward_for(int unutilized, int target_unutilized);

/// Discrete-time simulation of M resources serving a fluctuating item population.
///
/// Each call to step() runs five phases in a fixed order: allocate up to
/// `action` eligible queued items to free slots, advance hold and cooldown
/// timers (releases and change requests), draw arrivals, score, and advance
/// the clock. Random draws happen in that order and in ascending slot index,
/// so (config, seed, action sequence) fixes the trajectory bit for bit.
class ResourceEnv {
 public:
  explicit ResourceEnv(EnvConfig config);

  Observation reset(std::uint64_t seed);
  Observation reset() { return reset(config_.seed); }

  StepResult step(int action);

  Observation observe() const;

  const EnvConfig& config() const { return config_; }
  std::span<const ResourceSlot> slots() const { return slots_; }
  const std::deque<WaitingItem>& queue() const { return queue_; }
  long current_step() const { return step_; }
  bool done() const { return step_ >= config_.episode_length; }
  long total_dropped() const { return total_dropped_; }

  // Items (with their eligibility) assigned during the most recent ALLOCATE phase.
  std::span<const WaitingItem> last_allocations() const { return last_allocations_; }

  // Throws StateError if slot accounting or item uniqueness is broken.
  void check_invariants() const;

 private:
  int allocate(int budget);
  void advance();
  int arrive();
  void require_started() const;

  EnvConfig config_;
  std::vector<ResourceSlot> slots_;
  std::deque<WaitingItem> queue_;
  std::vector<WaitingItem> last_allocations_;
  Rng rng_;
  long step_ = 0;
  std::uint64_t next_item_id_ = 1;
  long total_dropped_ = 0;
  bool started_ = false;
};

struct TrajectoryRow {
  long step = 0;
  int action = 0;
  double reward = 0.0;
  StepInfo info;
};

// Columns: step,action,reward,unutilized,items_performing,resources_utilized,queue_len
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows);

}  // namespace resalloc::env
