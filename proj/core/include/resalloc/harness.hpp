#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resalloc/dqn_agents.hpp"
#include "resalloc/sim_env.hpp"

namespace resalloc::harness {

struct RunConfig {
  int variant_id = 8;
  env::EnvConfig env;
  nlohmann::json agent = nlohmann::json::object();  // AgentConfig overrides
  int training_episodes = 500;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "out";

  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

struct EpisodeLog {
  int episode = 0;
  double cumulative_reward = 0.0;
  double epsilon = 0.0;             // at episode end; 0 for noisy variants
  double noise_magnitude = 0.0;     // mean over the episode's action selections
  double vote_disagreement = 0.0;   // mean fraction of heads outvoted
  double mean_loss = 0.0;           // over learn steps taken this episode
  long learn_steps = 0;             // cumulative
};

struct TrainingLog {
  int variant_id = 0;
  std::vector<EpisodeLog> episodes;
};

// Exploration measure used for plotting: vote disagreement for ensembles,
// noise magnitude for noisy single networks, epsilon otherwise.
double exploration_measure(const agents::VariantSwitches& sw, const EpisodeLog& row);

struct TrainHooks {
  // Called after every learn step that actually updated the networks.
  std::function<void(const agents::Agent&)> after_learn_step;
  // Called after every environment step with the stored transition's mask.
  std::function<void(const replay::TransitionLogRow&)> after_env_step;
};

struct TrainResult {
  agents::Agent agent;
  TrainingLog log;
};

// Runs the training loop: per episode reset, then per step select, step,
// store, learn. Episodes truncate at episode_length and are stored with
// terminal = false. NumericError is rethrown with the offending step index.
TrainResult train(const RunConfig& config, std::uint64_t seed, const TrainHooks& hooks = {});

struct UtilizationPoint {
  long period = 0;
  int items_performing = 0;
  int resources_utilized = 0;
  int unutilized = 0;
};

struct MetricsReport {
  long periods = 0;
  long time_periods_under_capacity = 0;  // unutilized > target
  long time_periods_over_capacity = 0;   // unutilized < target
  long time_periods_at_target = 0;
  long total_items_performing = 0;
  long total_resources_utilized = 0;
  double efficiency_percent = 0.0;
  double mean_eval_reward = 0.0;         // mean episode return
  double mean_abs_deviation = 0.0;       // mean |unutilized - target| per period
  std::vector<double> episode_rewards;
  std::vector<UtilizationPoint> utilization;
  std::vector<env::TrajectoryRow> trajectory;  // every evaluation step, in order
};

// 100 * items / resources; 0 when no resource was utilized.
double efficiency_percent(double items_performing, double resources_utilized);
double round_to(double value, int decimals);

using Policy = std::function<int(const env::Observation&, Rng&)>;

// Greedy zero-noise evaluation. Episode e uses env seed mix_seed(seed, e).
MetricsReport evaluate(const agents::Agent& agent, const env::EnvConfig& env_config,
                       int eval_episodes, std::uint64_t seed);
MetricsReport evaluate_policy(const Policy& policy, const env::EnvConfig& env_config,
                              int eval_episodes, std::uint64_t seed);
Policy uniform_random_policy(int num_actions);

// Seed of the evaluation stream for a run seed.
std::uint64_t eval_seed_for(std::uint64_t run_seed);

struct RunOutcome {
  int variant_id = 0;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> report;
  std::optional<TrainingLog> log;
  std::string error;  // empty on success
};

// Trains then evaluates one (variant, seed) cell.
RunOutcome run_once(const RunConfig& config, std::uint64_t seed);

struct ComparisonRow {
  int variant_id = 0;
  std::string seed;  // decimal seed or "median"
  std::string status = "ok";
  double under_capacity = 0.0;
  double over_capacity = 0.0;
  double at_target = 0.0;
  double average_items_performing = 0.0;   // per evaluation window
  double average_resources_utilized = 0.0;
  double efficiency_percent = 0.0;
  double mean_eval_reward = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::vector<RunOutcome> outcomes;
};

ComparisonRow row_from_report(int variant_id, const std::string& seed, const MetricsReport& r,
                              int eval_episodes);
// Elementwise median of successful rows (mean of the middle pair for even counts).
ComparisonRow median_row(int variant_id, std::span<const ComparisonRow> rows);

// Runs every (config, seed) cell, up to `jobs` at a time. Failures are kept
// per cell. Rows are grouped per config in input order: per-seed rows, then median.
ComparisonTable compare_variants(std::span<const RunConfig> matrix, int jobs = 1);

// Columns: variant,seed,status,time_periods_under_capacity,time_periods_over_capacity,
// time_periods_at_target,average_items_performing,average_resources_utilized,
// efficiency_percent,mean_eval_reward
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
void write_metrics_csv(std::ostream& out, int variant_id, std::uint64_t seed, const MetricsReport& r);
void write_training_log_csv(std::ostream& out, const TrainingLog& log);

struct PlotSeries {
  int variant_id = 0;
  const TrainingLog* log = nullptr;
  const MetricsReport* report = nullptr;
};

// Writes exploration_vs_reward.csv (variant,episode,exploration_measure,cumulative_reward)
// and utilization_timeseries.csv (variant,period,items_performing,resources_utilized,unutilized).
void emit_plot_data(std::span<const PlotSeries> series, const std::filesystem::path& out_dir);

// Renders line charts from the two CSVs above into out_dir as .svg files.
void render_svg_charts(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

// Writes `content` to path, creating parent directories. IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace resalloc::harness
