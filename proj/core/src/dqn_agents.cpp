#include "resalloc/dqn_agents.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "resalloc/errors.hpp"

namespace resalloc::agents {

namespace {

struct VariantInfo {
  VariantSwitches switches;
  const char* name;
};

// Variant 7 drops the dueling head: its label is the only bagging one without "D3".
constexpr VariantInfo kVariants[kNumVariants] = {
    {{false, false, false, false}, "Double Deep Q Learning"},
    {{true, false, false, false}, "D3 Q Learning"},
    {{true, true, false, false}, "Noisy D3 Q Learning"},
    {{false, false, true, false}, "Prioritised Replay DDQN"},
    {{true, true, true, false}, "Prioritised Replay Noisy D3 Q Learning"},
    {{true, false, false, true}, "Bagging D3 Q Learning"},
    {{false, true, false, true}, "Noisy Bagging"},
    {{true, true, false, true}, "Noisy Bagging D3 Q Learning"},
};

const VariantInfo& variant_info(int id) {
  if (id < 1 || id > kNumVariants) {
    throw ConfigError("unknown variant " + std::to_string(id) + " (expected 1..8)");
  }
  return kVariants[id - 1];
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid AgentConfig: " + what);
}

double huber(double x, double delta) {
  const double a = std::abs(x);
  return a <= delta ? 0.5 * x * x : delta * (a - 0.5 * delta);
}

std::vector<const nn::Vector*> column_ptrs(std::span<const replay::Transition* const> batch,
                                           bool next) {
  std::vector<const nn::Vector*> cols;
  cols.reserve(batch.size());
  for (const auto* t : batch) cols.push_back(next ? &t->next_state : &t->state);
  return cols;
}

}  // namespace

VariantSwitches variant_switches(int variant_id) { return variant_info(variant_id).switches; }
std::string variant_name(int variant_id) { return variant_info(variant_id).name; }

double EpsilonSchedule::at(long env_steps) const {
  if (env_steps >= decay_steps) return end;
  const double frac = static_cast<double>(env_steps) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void AgentConfig::validate() const {
  require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
  require(adam.lr > 0.0 && adam.eps > 0.0, "lr and adam_eps must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          "adam betas must be in [0, 1)");
  require(batch_size >= 1, "batch_size must be positive");
  require(target_sync_period >= 1, "target_sync_period must be positive");
  require(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= 1.0,
          "epsilon schedule must stay in [0, 1]");
  require(ensemble_size >= 1 && ensemble_size <= replay::kMaxHeads, "ensemble_size must be in [1, 64]");
  require(mask_prob >= 0.0 && mask_prob <= 1.0, "mask_prob must be in [0, 1]");
  require(memory_capacity >= 1, "memory_capacity must be positive");
  require(per_alpha >= 0.0 && per_eps > 0.0, "per_alpha >= 0 and per_eps > 0");
  require(per_beta_start >= 0.0 && per_beta_end >= 0.0, "per_beta must be non-negative");
  require(huber_delta > 0.0, "huber_delta must be positive");
  require(sigma0 >= 0.0, "sigma0 must be non-negative");
  require(!hidden.empty() && std::all_of(hidden.begin(), hidden.end(), [](int w) { return w > 0; }),
          "hidden widths must be positive");
  require(!(switches.prioritized && switches.bagging),
          "prioritized replay and bagging cannot be combined");
}

void to_json(nlohmann::json& j, const AgentConfig& c) {
  j = nlohmann::json{
      {"dueling", c.switches.dueling},
      {"noisy", c.switches.noisy},
      {"prioritized", c.switches.prioritized},
      {"bagging", c.switches.bagging},
      {"gamma", c.gamma},
      {"lr", c.adam.lr},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"adam_eps", c.adam.eps},
      {"batch_size", c.batch_size},
      {"target_sync_period", c.target_sync_period},
      {"epsilon_start", c.epsilon.start},
      {"epsilon_end", c.epsilon.end},
      {"epsilon_decay_steps", c.epsilon.decay_steps},
      {"ensemble_size", c.ensemble_size},
      {"aggregator", c.aggregator == Aggregator::MajorityVote ? "majority_vote" : "random_head"},
      {"mask_prob", c.mask_prob},
      {"memory_capacity", c.memory_capacity},
      {"warmup", c.warmup},
      {"per_alpha", c.per_alpha},
      {"per_beta_start", c.per_beta_start},
      {"per_beta_end", c.per_beta_end},
      {"per_beta_steps", c.per_beta_steps},
      {"per_eps", c.per_eps},
      {"huber_delta", c.huber_delta},
      {"sigma0", c.sigma0},
      {"hidden", c.hidden},
      {"seed", c.seed},
  };
}

void from_json(const nlohmann::json& j, AgentConfig& c) {
  if (!j.is_object()) throw ConfigError("AgentConfig must be a JSON object");
  nlohmann::json known;
  to_json(known, c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown AgentConfig field: " + key);
  }
  try {
    c.switches.dueling = j.value("dueling", c.switches.dueling);
    c.switches.noisy = j.value("noisy", c.switches.noisy);
    c.switches.prioritized = j.value("prioritized", c.switches.prioritized);
    c.switches.bagging = j.value("bagging", c.switches.bagging);
    c.gamma = j.value("gamma", c.gamma);
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.eps = j.value("adam_eps", c.adam.eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.target_sync_period = j.value("target_sync_period", c.target_sync_period);
    c.epsilon.start = j.value("epsilon_start", c.epsilon.start);
    c.epsilon.end = j.value("epsilon_end", c.epsilon.end);
    c.epsilon.decay_steps = j.value("epsilon_decay_steps", c.epsilon.decay_steps);
    c.ensemble_size = j.value("ensemble_size", c.ensemble_size);
    if (j.contains("aggregator")) {
      const auto mode = j.at("aggregator").get<std::string>();
      if (mode == "majority_vote") {
        c.aggregator = Aggregator::MajorityVote;
      } else if (mode == "random_head") {
        c.aggregator = Aggregator::RandomHead;
      } else {
        throw ConfigError("aggregator must be majority_vote or random_head");
      }
    }
    c.mask_prob = j.value("mask_prob", c.mask_prob);
    c.memory_capacity = j.value("memory_capacity", c.memory_capacity);
    c.warmup = j.value("warmup", c.warmup);
    c.per_alpha = j.value("per_alpha", c.per_alpha);
    c.per_beta_start = j.value("per_beta_start", c.per_beta_start);
    c.per_beta_end = j.value("per_beta_end", c.per_beta_end);
    c.per_beta_steps = j.value("per_beta_steps", c.per_beta_steps);
    c.per_eps = j.value("per_eps", c.per_eps);
    c.huber_delta = j.value("huber_delta", c.huber_delta);
    c.sigma0 = j.value("sigma0", c.sigma0);
    c.hidden = j.value("hidden", c.hidden);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("AgentConfig: ") + e.what());
  }
}

int aggregate_votes(std::span<const int> proposals, Aggregator mode, Rng& rng) {
  if (proposals.empty()) throw ContractError("aggregate_votes needs at least one proposal");
  if (mode == Aggregator::RandomHead) return proposals[rng.uniform_index(proposals.size())];
  std::map<int, int> counts;
  for (int a : proposals) ++counts[a];
  int best = counts.begin()->first;
  int best_count = 0;
  for (const auto& [action, count] : counts) {
    if (count > best_count) {
      best = action;
      best_count = count;
    }
  }
  return best;
}

double noise_magnitude(const nn::NetworkParams& params, const nn::NoiseSample& noise) {
  if (noise.is_zero()) return 0.0;
  double total = 0.0;
  int layers = 0;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (!params.layers[l].noisy()) continue;
    const nn::Matrix m = nn::weight_perturbation(params.layers[l], noise.layers[l]);
    double sum = 0.0;
    for (double v : m.values()) sum += std::abs(v);
    total += sum / static_cast<double>(m.size());
    ++layers;
  }
  return layers == 0 ? 0.0 : total / layers;
}

Agent::Agent(AgentConfig config, int input_dim, int num_actions)
    : config_(std::move(config)),
      memory_(replay::UniformMemory(1)),
      action_rng_(mix_seed(config_.seed, 2)),
      noise_rng_(mix_seed(config_.seed, 3)),
      sample_rng_(mix_seed(config_.seed, 4)),
      mask_rng_(mix_seed(config_.seed, 5)) {
  config_.validate();
  const auto& sw = config_.switches;
  spec_ = nn::make_q_network_spec(input_dim, num_actions, sw.dueling, sw.noisy, config_.hidden);

  // Heads draw their initial weights one after another from a single stream,
  // so head 0 matches the single network of the non-ensemble agent.
  Rng init_rng(mix_seed(config_.seed, 1));
  const int heads = sw.bagging ? config_.ensemble_size : 1;
  for (int k = 0; k < heads; ++k) {
    QHead h;
    h.policy = nn::init_params(spec_, init_rng, config_.sigma0);
    h.target = nn::clone_params(h.policy);
    heads_.push_back(std::move(h));
  }

  if (sw.bagging) {
    memory_ = replay::BootstrapMemory(config_.memory_capacity, heads, config_.mask_prob);
  } else if (sw.prioritized) {
    memory_ = replay::PrioritizedMemory(config_.memory_capacity);
  } else {
    memory_ = replay::UniformMemory(config_.memory_capacity);
  }
}

double Agent::epsilon() const {
  return config_.switches.noisy ? 0.0 : config_.epsilon.at(env_steps_);
}

double Agent::per_beta() const {
  const double frac = config_.per_beta_steps <= 0
                          ? 1.0
                          : std::min(1.0, static_cast<double>(learn_steps_) /
                                              static_cast<double>(config_.per_beta_steps));
  return config_.per_beta_start + (config_.per_beta_end - config_.per_beta_start) * frac;
}

std::size_t Agent::memory_size() const {
  return std::visit([](const auto& m) { return m.size(); }, memory_);
}

int Agent::select_action(const Observation& obs, bool training) {
  if (obs.size() != static_cast<std::size_t>(spec_.input_dim)) {
    throw ContractError("observation length does not match the network input");
  }
  if (!training) return greedy_action(obs, action_rng_);

  const auto& sw = config_.switches;
  if (!sw.noisy) {
    ++epsilon_branch_visits_;
    if (action_rng_.uniform() < epsilon()) {
      return static_cast<int>(action_rng_.uniform_index(static_cast<std::uint64_t>(num_actions())));
    }
  }

  // One noise sample per call, shared by every head.
  const nn::NoiseSample noise = sw.noisy ? nn::sample_noise(spec_, noise_rng_) : nn::NoiseSample{};
  std::vector<int> proposals;
  proposals.reserve(heads_.size());
  for (const auto& h : heads_) {
    if (sw.noisy) {
      stats_.noise_magnitude_sum += noise_magnitude(h.policy, noise);
      ++stats_.noise_samples;
    }
    proposals.push_back(nn::argmax(nn::forward(h.policy, spec_, obs, noise)));
  }
  if (!sw.bagging) return proposals.front();

  const int action = aggregate_votes(proposals, config_.aggregator, action_rng_);
  const auto dissent = std::count_if(proposals.begin(), proposals.end(), [&](int a) { return a != action; });
  stats_.disagreement_sum += static_cast<double>(dissent) / static_cast<double>(proposals.size());
  ++stats_.votes;
  return action;
}

int Agent::greedy_action(const Observation& obs, Rng& rng) const {
  if (obs.size() != static_cast<std::size_t>(spec_.input_dim)) {
    throw ContractError("observation length does not match the network input");
  }
  std::vector<int> proposals;
  proposals.reserve(heads_.size());
  for (const auto& h : heads_) proposals.push_back(nn::argmax(nn::forward(h.policy, spec_, obs)));
  if (!config_.switches.bagging) return proposals.front();
  return aggregate_votes(proposals, config_.aggregator, rng);
}

replay::Mask Agent::observe(replay::Transition t) {
  ++env_steps_;
  return std::visit(
      [&](auto& m) -> replay::Mask {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, replay::BootstrapMemory>) {
          return m.push(std::move(t), mask_rng_);
        } else {
          m.push(std::move(t));
          return ~replay::Mask{0};
        }
      },
      memory_);
}

std::optional<replay::Batch> Agent::sample(int head) {
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  return std::visit(
      [&](auto& m) -> std::optional<replay::Batch> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, replay::UniformMemory>) {
          return m.sample_uniform(batch, sample_rng_, config_.warmup);
        } else if constexpr (std::is_same_v<M, replay::PrioritizedMemory>) {
          return m.sample_prioritized(batch, per_beta(), sample_rng_, config_.warmup);
        } else {
          if (m.size() < config_.warmup) return std::nullopt;
          return m.sample_for_head(head, batch, sample_rng_);
        }
      },
      memory_);
}

std::vector<double> Agent::compute_targets(std::span<const replay::Transition* const> batch,
                                           int head) const {
  if (batch.empty()) throw ContractError("compute_targets on an empty batch");
  const auto& h = heads_.at(static_cast<std::size_t>(head));
  const auto cols = column_ptrs(batch, true);
  const nn::Matrix next = nn::make_batch(cols);
  const nn::Matrix q_policy = nn::forward_batch(h.policy, spec_, next, nn::NoiseSample::zero());
  const nn::Matrix q_target = nn::forward_batch(h.target, spec_, next, nn::NoiseSample::zero());

  std::vector<double> targets(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_policy.rows(); ++a)
      if (q_policy(a, j) > q_policy(best, j)) best = a;
    const double bootstrap = q_target(best, j);
    if (!std::isfinite(bootstrap) || !std::isfinite(q_policy(best, j))) {
      throw NumericError("non-finite Q value while computing targets");
    }
    const auto& t = *batch[j];
    targets[j] = t.terminal ? t.reward : t.reward + config_.gamma * bootstrap;
  }
  return targets;
}

LearnResult Agent::train_head_on_batch(int head, std::span<const replay::Transition* const> batch,
                                       std::span<const double> targets,
                                       std::span<const double> weights,
                                       const nn::NoiseSample& noise) {
  if (batch.empty() || targets.size() != batch.size() || weights.size() != batch.size()) {
    throw ContractError("batch, targets and weights must have equal non-zero length");
  }
  auto& policy = heads_.at(static_cast<std::size_t>(head)).policy;
  const auto cols = column_ptrs(batch, false);
  nn::ForwardCache cache;
  const nn::Matrix q = nn::forward_batch(policy, spec_, nn::make_batch(cols), noise, &cache);

  const double n = static_cast<double>(batch.size());
  const double delta = config_.huber_delta;
  nn::Matrix grad(q.rows(), q.cols());
  LearnResult result;
  result.td_errors.resize(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto a = static_cast<std::size_t>(batch[j]->action);
    if (a >= q.rows()) throw ContractError("stored action outside the network's action range");
    const double td = targets[j] - q(a, j);
    result.td_errors[j] = td;
    result.loss += weights[j] * huber(td, delta);
    grad(a, j) = -weights[j] * std::clamp(td, -delta, delta) / n;
  }
  result.loss /= n;
  if (!std::isfinite(result.loss)) throw NumericError("non-finite TD loss");

  nn::adam_step(policy, nn::backward_batch(policy, spec_, cache, grad), config_.adam);
  return result;
}

std::optional<double> Agent::learn_step() {
  if (memory_size() < std::max<std::size_t>(config_.warmup, 1)) return std::nullopt;
  const auto& sw = config_.switches;
  double loss_sum = 0.0;
  int trained = 0;
  const nn::NoiseSample noise = sw.noisy ? nn::sample_noise(spec_, noise_rng_) : nn::NoiseSample{};
  for (int k = 0; k < static_cast<int>(heads_.size()); ++k) {
    const auto batch = sample(k);
    if (!batch) continue;
    std::vector<const replay::Transition*> transitions;
    std::vector<double> weights;
    transitions.reserve(batch->size());
    weights.reserve(batch->size());
    for (const auto& s : *batch) {
      transitions.push_back(s.transition);
      weights.push_back(sw.prioritized ? s.is_weight : 1.0);
    }
    const auto targets = compute_targets(transitions, k);
    const LearnResult r = train_head_on_batch(k, transitions, targets, weights, noise);

    if (auto* per = std::get_if<replay::PrioritizedMemory>(&memory_)) {
      std::vector<std::size_t> indices;
      indices.reserve(batch->size());
      for (const auto& s : *batch) indices.push_back(s.index);
      per->update_priorities(indices, r.td_errors, config_.per_alpha, config_.per_eps);
    }
    loss_sum += r.loss;
    ++trained;
  }
  if (trained == 0) return std::nullopt;

  ++learn_steps_;
  if (learn_steps_ % config_.target_sync_period == 0) sync_targets();
  return loss_sum / trained;
}

void Agent::sync_targets() {
  for (auto& h : heads_) h.target = nn::clone_params(h.policy);
}

AgentConfig make_agent_config(int variant_id, const nlohmann::json& hyper_overrides) {
  AgentConfig config;
  config.switches = variant_switches(variant_id);
  if (!hyper_overrides.is_null()) {
    for (const char* key : {"dueling", "noisy", "prioritized", "bagging"}) {
      if (hyper_overrides.contains(key)) {
        throw ConfigError(std::string("variant switch '") + key + "' cannot be overridden");
      }
    }
    from_json(hyper_overrides, config);
  }
  config.validate();
  return config;
}

Agent make_agent(int variant_id, const env::EnvConfig& env_config,
                 const nlohmann::json& hyper_overrides) {
  env_config.validate();
  return Agent(make_agent_config(variant_id, hyper_overrides), env_config.observation_size(),
               env_config.num_actions());
}

}  // namespace resalloc::agents
