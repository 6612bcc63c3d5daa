#include "resalloc/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "resalloc/errors.hpp"

namespace resalloc::env {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid EnvConfig: " + what);
}

}  // namespace

void EnvConfig::validate() const {
  require(num_resources >= 1, "num_resources must be positive");
  require(target_unutilized >= 0 && target_unutilized < num_resources,
          "target_unutilized must be in [0, num_resources)");
  require(std::isfinite(arrival_rate) && arrival_rate >= 0.0, "arrival_rate must be >= 0");
  require(min_hold >= 1, "min_hold must be >= 1");
  require(std::isfinite(mean_hold) && mean_hold >= min_hold, "mean_hold must be >= min_hold");
  require(change_request_prob >= 0.0 && change_request_prob <= 1.0,
          "change_request_prob must be in [0, 1]");
  require(reallocation_delay >= 0, "reallocation_delay must be >= 0");
  require(max_queue >= 1, "max_queue must be positive");
  require(episode_length >= 1, "episode_length must be positive");
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{{"num_resources", c.num_resources},
                     {"target_unutilized", c.target_unutilized},
                     {"arrival_rate", c.arrival_rate},
                     {"mean_hold", c.mean_hold},
                     {"min_hold", c.min_hold},
                     {"change_request_prob", c.change_request_prob},
                     {"reallocation_delay", c.reallocation_delay},
                     {"max_queue", c.max_queue},
                     {"episode_length", c.episode_length},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  if (!j.is_object()) throw ConfigError("EnvConfig must be a JSON object");
  static const std::unordered_set<std::string> known = {
      "num_resources", "target_unutilized",  "arrival_rate", "mean_hold",
      "min_hold",      "change_request_prob", "reallocation_delay", "max_queue",
      "episode_length", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown EnvConfig field: " + key);
  }
  try {
    c.num_resources = j.value("num_resources", c.num_resources);
    c.target_unutilized = j.value("target_unutilized", c.target_unutilized);
    c.arrival_rate = j.value("arrival_rate", c.arrival_rate);
    c.mean_hold = j.value("mean_hold", c.mean_hold);
    c.min_hold = j.value("min_hold", c.min_hold);
    c.change_request_prob = j.value("change_request_prob", c.change_request_prob);
    c.reallocation_delay = j.value("reallocation_delay", c.reallocation_delay);
    c.max_queue = j.value("max_queue", c.max_queue);
    c.episode_length = j.value("episode_length", c.episode_length);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("EnvConfig: ") + e.what());
  }
}

StepInfo count_slots(std::span<const ResourceSlot> slots) {
  StepInfo info;
  for (const auto& s : slots) {
    if (s.status == SlotStatus::Free) ++info.unutilized;
    if (s.status == SlotStatus::Held) ++info.items_performing;
  }
  info.resources_utilized = static_cast<int>(slots.size()) - info.unutilized;
  return info;
}

double reward_for(int unutilized, int target_unutilized) {
  return 0.0 - std::abs(static_cast<double>(unutilized - target_unutilized));
}

ResourceEnv::ResourceEnv(EnvConfig config) : config_(config) {
  config_.validate();
  slots_.resize(static_cast<std::size_t>(config_.num_resources));
}

Observation ResourceEnv::reset(std::uint64_t seed) {
  std::fill(slots_.begin(), slots_.end(), ResourceSlot{});
  queue_.clear();
  last_allocations_.clear();
  rng_ = Rng(seed);
  step_ = 0;
  next_item_id_ = 1;
  total_dropped_ = 0;
  started_ = true;
  return observe();
}

void ResourceEnv::require_started() const {
  if (!started_) throw StateError("ResourceEnv::step called before reset");
}

StepResult ResourceEnv::step(int action) {
  require_started();
  if (action < 0 || action > config_.num_resources) {
    throw ContractError("action " + std::to_string(action) + " outside [0, " +
                        std::to_string(config_.num_resources) + "]");
  }
  if (done()) throw StateError("ResourceEnv::step called after the terminal step");

  StepResult result;
  result.info.allocated = allocate(action);
  advance();
  const int dropped = arrive();

  const StepInfo counts = count_slots(slots_);
  result.info.unutilized = counts.unutilized;
  result.info.items_performing = counts.items_performing;
  result.info.resources_utilized = counts.resources_utilized;
  result.info.dropped_arrivals = dropped;
  result.info.queue_len = static_cast<int>(queue_.size());
  result.reward = reward_for(counts.unutilized, config_.target_unutilized);

  ++step_;
  result.terminal = step_ == config_.episode_length;
  result.observation = observe();
  return result;
}

int ResourceEnv::allocate(int budget) {
  last_allocations_.clear();
  const double extra_hold = config_.mean_hold - config_.min_hold;
  std::size_t slot = 0;
  auto it = queue_.begin();
  while (budget > 0 && it != queue_.end()) {
    if (it->eligible_at > step_) {
      ++it;
      continue;
    }
    while (slot < slots_.size() && slots_[slot].status != SlotStatus::Free) ++slot;
    if (slot == slots_.size()) break;
    if (it->eligible_at > step_) throw StateError("allocated an item before its eligible step");

    const auto hold = config_.min_hold + static_cast<int>(rng_.geometric(extra_hold));
    slots_[slot] = ResourceSlot{SlotStatus::Held, it->item_id, hold};
    last_allocations_.push_back(*it);
    it = queue_.erase(it);
    --budget;
  }
  return static_cast<int>(last_allocations_.size());
}

void ResourceEnv::advance() {
  std::vector<WaitingItem> requeued;
  for (auto& s : slots_) {
    switch (s.status) {
      case SlotStatus::Free:
        break;
      case SlotStatus::Held:
        if (--s.remaining == 0) {
          s = ResourceSlot{};
        } else if (rng_.bernoulli(config_.change_request_prob)) {
          requeued.push_back({s.item_id, step_ + 1 + config_.reallocation_delay});
          s = config_.reallocation_delay > 0
                  ? ResourceSlot{SlotStatus::Cooldown, 0, config_.reallocation_delay}
                  : ResourceSlot{};
        }
        break;
      case SlotStatus::Cooldown:
        if (--s.remaining == 0) s = ResourceSlot{};
        break;
    }
  }
  queue_.insert(queue_.begin(), requeued.begin(), requeued.end());
}

int ResourceEnv::arrive() {
  const auto arrivals = rng_.poisson(config_.arrival_rate);
  int dropped = 0;
  for (std::uint64_t i = 0; i < arrivals; ++i) {
    if (queue_.size() < static_cast<std::size_t>(config_.max_queue)) {
      queue_.push_back({next_item_id_++, step_ + 1});
    } else {
      ++dropped;
    }
  }
  total_dropped_ += dropped;
  return dropped;
}

Observation ResourceEnv::observe() const {
  Observation obs;
  obs.reserve(static_cast<std::size_t>(config_.observation_size()));
  int unutilized = 0;
  for (const auto& s : slots_) {
    const bool occupied = s.status != SlotStatus::Free;
    unutilized += occupied ? 0 : 1;
    obs.push_back(occupied ? 1.0 : 0.0);
    obs.push_back(occupied ? std::clamp(s.remaining / config_.mean_hold, 0.0, 1.0) : 0.0);
  }
  const auto queued = std::min<std::size_t>(queue_.size(), static_cast<std::size_t>(config_.max_queue));
  obs.push_back(static_cast<double>(queued) / config_.max_queue);
  obs.push_back(static_cast<double>(unutilized) / config_.num_resources);
  obs.push_back(static_cast<double>(step_) / config_.episode_length);
  return obs;
}

void ResourceEnv::check_invariants() const {
  if (slots_.size() != static_cast<std::size_t>(config_.num_resources)) {
    throw StateError("slot count differs from num_resources");
  }
  std::unordered_set<std::uint64_t> seen;
  for (const auto& s : slots_) {
    if (s.status == SlotStatus::Held) {
      if (s.remaining < 1) throw StateError("held slot with no remaining hold");
      if (!seen.insert(s.item_id).second) throw StateError("item held by two slots");
    } else if (s.status == SlotStatus::Cooldown && s.remaining < 1) {
      throw StateError("cooldown slot with no remaining time");
    }
  }
  for (const auto& w : queue_) {
    if (!seen.insert(w.item_id).second) throw StateError("item present in two places");
  }
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows) {
  out << "step,action,reward,unutilized,items_performing,resources_utilized,queue_len\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.action << ',' << r.reward << ',' << r.info.unutilized << ','
        << r.info.items_performing << ',' << r.info.resources_utilized << ','
        << r.info.queue_len << '\n';
  }
}

}  // namespace resalloc::env
