#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "resalloc/errors.hpp"
#include "resalloc/rng.hpp"
#include "resalloc/sim_env.hpp"
#include "support/oracles.hpp"

using namespace resalloc;
using namespace resalloc::env;
using resalloc::oracle::HandSim;

namespace {

void expect_matches_hand_simulation(const EnvConfig& cfg, std::uint64_t seed,
                                    const std::vector<int>& actions) {
  ResourceEnv env(cfg);
  env.reset(seed);
  HandSim sim(cfg, seed);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    SCOPED_TRACE(i);
    const StepResult r = env.step(actions[i]);
    const HandSim::Out o = sim.step(actions[i]);
    ASSERT_EQ(r.reward, o.reward);
    ASSERT_EQ(r.info.unutilized, o.unutilized);
    ASSERT_EQ(r.info.items_performing, o.performing);
    ASSERT_EQ(r.info.resources_utilized, o.utilized);
    ASSERT_EQ(r.info.dropped_arrivals, o.dropped);
    ASSERT_EQ(r.info.queue_len, o.queue_len);
    ASSERT_EQ(r.info.allocated, o.allocated);
    ASSERT_EQ(r.observation, o.obs);
  }
}

}  // namespace

TEST(SimEnv, ScriptedTrajectoryMatchesHandSimulation) {
  const std::vector<int> actions = {0, 3, 10, 1, 2, 0, 5, 5, 4, 7, 0, 0, 10, 2, 1, 3, 6, 8, 9, 10};
  expect_matches_hand_simulation(EnvConfig{}, 2024, actions);
}

TEST(SimEnv, ScriptedTrajectoryWithFrequentChangeRequests) {
  EnvConfig cfg;
  cfg.num_resources = 5;
  cfg.target_unutilized = 1;
  cfg.arrival_rate = 3.0;
  cfg.change_request_prob = 0.4;
  cfg.reallocation_delay = 3;
  cfg.max_queue = 4;
  cfg.mean_hold = 6.0;
  cfg.min_hold = 2;
  cfg.episode_length = 20;
  const std::vector<int> actions = {5, 5, 1, 0, 2, 5, 3, 3, 0, 5, 4, 1, 1, 5, 2, 0, 5, 5, 3, 4};
  for (std::uint64_t seed : {1u, 2u, 3u}) expect_matches_hand_simulation(cfg, seed, actions);
}

TEST(SimEnv, ScriptedTrajectoryWithoutDelay) {
  EnvConfig cfg;
  cfg.reallocation_delay = 0;
  cfg.change_request_prob = 0.3;
  std::vector<int> actions;
  for (int i = 0; i < 20; ++i) actions.push_back((i * 7) % 11);
  expect_matches_hand_simulation(cfg, 99, actions);
}

TEST(SimEnv, ResetObservationAllFree) {
  EnvConfig cfg;
  cfg.num_resources = 4;
  cfg.target_unutilized = 1;
  ResourceEnv env(cfg);
  const Observation obs = env.reset(7);
  const Observation expected = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0, 0};
  EXPECT_EQ(obs, expected);
  EXPECT_TRUE(env.queue().empty());
  EXPECT_EQ(env.current_step(), 0);
}

TEST(SimEnv, ResetDeterministic) {
  ResourceEnv a(EnvConfig{}), b(EnvConfig{});
  EXPECT_EQ(a.reset(5), b.reset(5));
  for (int i = 0; i < 100; ++i) {
    const auto ra = a.step(i % 11);
    const auto rb = b.step(i % 11);
    ASSERT_EQ(ra.observation, rb.observation);
    ASSERT_EQ(ra.reward, rb.reward);
  }
}

TEST(SimEnv, DefaultObservationLength) {
  ResourceEnv env(EnvConfig{});
  EXPECT_EQ(env.reset(0).size(), 23u);
  EXPECT_EQ(EnvConfig{}.num_actions(), 11);
}

TEST(SimEnv, RewardExamples) {
  EXPECT_EQ(reward_for(5, 3), -2.0);
  EXPECT_EQ(reward_for(3, 3), 0.0);
  EXPECT_EQ(reward_for(0, 2), -2.0);
}

TEST(SimEnv, CountersDistinguishCooldown) {
  const std::vector<ResourceSlot> slots = {{SlotStatus::Held, 1, 3},
                                           {SlotStatus::Held, 2, 1},
                                           {SlotStatus::Cooldown, 0, 2}};
  const StepInfo info = count_slots(slots);
  EXPECT_EQ(info.items_performing, 2);
  EXPECT_EQ(info.resources_utilized, 3);
  EXPECT_EQ(info.unutilized, 0);
}

TEST(SimEnv, InvalidConfigRejected) {
  EnvConfig cfg;
  cfg.target_unutilized = cfg.num_resources;
  EXPECT_THROW(ResourceEnv{cfg}, ConfigError);
  cfg = EnvConfig{};
  cfg.min_hold = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.change_request_prob = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.mean_hold = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.arrival_rate = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.episode_length = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SimEnv, ActionOutOfRange) {
  ResourceEnv env(EnvConfig{});
  env.reset(1);
  EXPECT_THROW(env.step(-1), ContractError);
  EXPECT_THROW(env.step(11), ContractError);
}

TEST(SimEnv, StepAfterTerminal) {
  EnvConfig cfg;
  cfg.episode_length = 3;
  ResourceEnv env(cfg);
  env.reset(1);
  EXPECT_FALSE(env.step(1).terminal);
  EXPECT_FALSE(env.step(1).terminal);
  EXPECT_TRUE(env.step(1).terminal);
  EXPECT_THROW(env.step(0), StateError);
}

TEST(SimEnv, StepBeforeReset) {
  ResourceEnv env(EnvConfig{});
  EXPECT_THROW(env.step(0), StateError);
}

TEST(SimEnv, FuzzInvariants) {
  EnvConfig cfg;
  cfg.change_request_prob = 0.2;
  ResourceEnv env(cfg);
  Rng actions(77);
  env.reset(3);
  for (int i = 0; i < 20000; ++i) {
    if (env.done()) env.reset(static_cast<std::uint64_t>(i));
    const long now = env.current_step();
    const auto r = env.step(static_cast<int>(actions.uniform_index(11)));
    ASSERT_LE(r.reward, 0.0);
    ASSERT_LE(r.info.items_performing, r.info.resources_utilized);
    ASSERT_LE(r.info.resources_utilized, cfg.num_resources);
    ASSERT_EQ(static_cast<int>(r.observation.size()), cfg.observation_size());
    for (double v : r.observation) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    for (const auto& w : env.last_allocations()) ASSERT_LE(w.eligible_at, now);
    env.check_invariants();
  }
}

TEST(SimEnv, ChangeRequestRequeuesWithDelay) {
  EnvConfig cfg;
  cfg.num_resources = 2;
  cfg.target_unutilized = 0;
  cfg.change_request_prob = 1.0;
  cfg.reallocation_delay = 2;
  cfg.arrival_rate = 20.0;
  ResourceEnv env(cfg);
  env.reset(1);
  env.step(0);  // arrivals become eligible at step 1
  ASSERT_GE(env.queue().size(), 1u);
  const std::uint64_t first = env.queue().front().item_id;
  env.step(1);
  EXPECT_EQ(env.slots()[0].status, SlotStatus::Cooldown);
  EXPECT_EQ(env.slots()[0].remaining, 2);
  EXPECT_EQ(env.queue().front().item_id, first);
  EXPECT_EQ(env.queue().front().eligible_at, 4);
  for (int i = 0; i < 2; ++i) {
    env.step(2);
    for (const auto& w : env.last_allocations()) EXPECT_NE(w.item_id, first);
  }
}

TEST(SimEnv, ConfigJsonRoundTrip) {
  EnvConfig cfg;
  cfg.num_resources = 6;
  cfg.seed = 123456789012345ull;
  const nlohmann::json j = cfg;
  const EnvConfig back = j.get<EnvConfig>();
  EXPECT_EQ(back.num_resources, 6);
  EXPECT_EQ(back.seed, 123456789012345ull);
  nlohmann::json bad = j;
  bad["bogus"] = 1;
  EXPECT_THROW(bad.get<EnvConfig>(), ConfigError);
}

TEST(SimEnv, TrajectoryCsvHeader) {
  std::ostringstream out;
  std::vector<TrajectoryRow> rows(1);
  rows[0].reward = -1;
  write_trajectory_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "step,action,reward,unutilized,items_performing,resources_utilized,queue_len");
}
