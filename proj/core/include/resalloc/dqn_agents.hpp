#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "resalloc/replay_memory.hpp"
#include "resalloc/rng.hpp"
#include "resalloc/sim_env.hpp"
#include "resalloc/tensor_nn.hpp"

namespace resalloc::agents {

using env::Observation;

struct VariantSwitches {
  bool dueling = false;
  bool noisy = false;
  bool prioritized = false;
  bool bagging = false;

  bool operator==(const VariantSwitches&) const = default;
};

// Variants 1..8 of the comparison table.
VariantSwitches variant_switches(int variant_id);
std::string variant_name(int variant_id);
inline constexpr int kNumVariants = 8;

enum class Aggregator { MajorityVote, RandomHead };

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  long decay_steps = 10'000;  // environment steps

  double at(long env_steps) const;
};

struct AgentConfig {
  VariantSwitches switches;
  double gamma = 0.99;
  nn::AdamConfig adam;
  int batch_size = 32;
  long target_sync_period = 1000;  // learn steps
  EpsilonSchedule epsilon;
  int ensemble_size = 5;
  Aggregator aggregator = Aggregator::MajorityVote;
  double mask_prob = 0.5;
  std::size_t memory_capacity = 10'000;
  std::size_t warmup = 500;
  double per_alpha = 0.6;
  double per_beta_start = 0.4;
  double per_beta_end = 1.0;
  long per_beta_steps = 50'000;  // learn steps over which beta is annealed
  double per_eps = 1e-6;
  double huber_delta = 1.0;
  double sigma0 = 0.5;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const AgentConfig& c);
// Applies the keys present in j on top of c; unknown keys are rejected.
void from_json(const nlohmann::json& j, AgentConfig& c);

// Modal action; ties go to the lowest action index. RandomHead returns a
// uniformly chosen head's proposal.
int aggregate_votes(std::span<const int> proposals, Aggregator mode, Rng& rng);

struct QHead {
  nn::NetworkParams policy;
  nn::NetworkParams target;
};

struct LearnResult {
  double loss = 0.0;
  std::vector<double> td_errors;
};

/// One DQN-family agent. The five switches compose: double-Q targets are
/// always on; dueling changes the head; noisy replaces epsilon-greedy with
/// parameter noise; prioritized swaps uniform replay for a sum-tree; bagging
/// trains an ensemble of heads on bootstrap-masked views of one memory.
class Agent {
 public:
  Agent(AgentConfig config, int input_dim, int num_actions);

  int select_action(const Observation& obs, bool training);

  // Zero-noise greedy action; `rng` is only used by the RandomHead aggregator.
  int greedy_action(const Observation& obs, Rng& rng) const;

  // Stores the transition; returns the bootstrap mask (all ones without bagging).
  replay::Mask observe(replay::Transition t);

  // nullopt while the memory is under warm-up or no head has a full batch.
  std::optional<double> learn_step();

  // Double-Q targets y = r + gamma * (1 - terminal) * Q_target(s', argmax_a Q_policy(s', a)),
  // computed with zero noise by head `head`.
  std::vector<double> compute_targets(std::span<const replay::Transition* const> batch,
                                      int head = 0) const;

  // One gradient step of head `head` on a fixed batch and targets, using
  // `noise` for the policy forward pass.
  LearnResult train_head_on_batch(int head, std::span<const replay::Transition* const> batch,
                                  std::span<const double> targets, std::span<const double> weights,
                                  const nn::NoiseSample& noise);

  void sync_targets();

  const AgentConfig& config() const { return config_; }
  const nn::NetworkSpec& spec() const { return spec_; }
  const std::vector<QHead>& heads() const { return heads_; }
  std::vector<QHead>& mutable_heads() { return heads_; }
  int num_actions() const { return spec_.num_actions; }
  long learn_steps() const { return learn_steps_; }
  long env_steps() const { return env_steps_; }
  double epsilon() const;
  double per_beta() const;
  std::size_t memory_size() const;

  // Times the epsilon-greedy branch was entered.
  long epsilon_branch_visits() const { return epsilon_branch_visits_; }

  // Exploration diagnostics accumulated since the last reset_exploration_stats().
  struct ExplorationStats {
    double noise_magnitude_sum = 0.0;
    long noise_samples = 0;
    double disagreement_sum = 0.0;
    long votes = 0;
  };
  const ExplorationStats& exploration_stats() const { return stats_; }
  void reset_exploration_stats() { stats_ = {}; }

  using Memory = std::variant<replay::UniformMemory, replay::PrioritizedMemory, replay::BootstrapMemory>;
  const Memory& memory() const { return memory_; }

 private:
  std::optional<replay::Batch> sample(int head);

  AgentConfig config_;
  nn::NetworkSpec spec_;
  std::vector<QHead> heads_;
  Memory memory_;
  Rng action_rng_;
  Rng noise_rng_;
  Rng sample_rng_;
  Rng mask_rng_;
  long learn_steps_ = 0;
  long env_steps_ = 0;
  long epsilon_branch_visits_ = 0;
  ExplorationStats stats_;
};

// Mean over noisy layers of the mean |sigma_W * f(eps_out) f(eps_in)^T| entry.
double noise_magnitude(const nn::NetworkParams& params, const nn::NoiseSample& noise);

// Agent for a table variant on an environment: input 2M+3, outputs M+1.
// Throws ConfigError for an unknown variant.
Agent make_agent(int variant_id, const env::EnvConfig& env_config,
                 const nlohmann::json& hyper_overrides);
AgentConfig make_agent_config(int variant_id, const nlohmann::json& hyper_overrides);

}  // namespace resalloc::agents
