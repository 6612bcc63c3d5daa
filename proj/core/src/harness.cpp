#include "resalloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "resalloc/errors.hpp"

namespace resalloc::harness {

namespace {

constexpr std::uint64_t kTrainEnvStream = 11;
constexpr std::uint64_t kEvalStream = 13;
constexpr std::uint64_t kAgentStream = 17;
constexpr std::uint64_t kPolicyStream = 19;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

// ---- configuration --------------------------------------------------------

void RunConfig::validate() const {
  if (variant_id < 1 || variant_id > agents::kNumVariants) {
    throw ConfigError("variant_id must be in 1..8");
  }
  env.validate();
  if (training_episodes < 0) throw ConfigError("training_episodes must be >= 0");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  agents::make_agent_config(variant_id, agent);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"variant_id", c.variant_id},
                     {"env", c.env},
                     {"agent", c.agent},
                     {"training_episodes", c.training_episodes},
                     {"eval_episodes", c.eval_episodes},
                     {"seeds", c.seeds},
                     {"output_dir", c.output_dir}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("RunConfig must be a JSON object");
  static const std::unordered_set<std::string> known = {
      "variant_id", "env", "agent", "training_episodes", "eval_episodes", "seeds", "output_dir"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown RunConfig field: " + key);
  }
  try {
    c.variant_id = j.value("variant_id", c.variant_id);
    if (j.contains("env")) {
      env::EnvConfig e = c.env;
      from_json(j.at("env"), e);
      c.env = e;
    }
    if (j.contains("agent")) {
      if (!j.at("agent").is_object()) throw ConfigError("agent overrides must be an object");
      c.agent = j.at("agent");
    }
    c.training_episodes = j.value("training_episodes", c.training_episodes);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.seeds = j.value("seeds", c.seeds);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("RunConfig: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c;
  from_json(j, c);
  c.validate();
  return c;
}

// ---- training -------------------------------------------------------------

double exploration_measure(const agents::VariantSwitches& sw, const EpisodeLog& row) {
  if (sw.bagging) return row.vote_disagreement;
  if (sw.noisy) return row.noise_magnitude;
  return row.epsilon;
}

TrainResult train(const RunConfig& config, std::uint64_t seed, const TrainHooks& hooks) {
  config.validate();
  agents::AgentConfig agent_config = agents::make_agent_config(config.variant_id, config.agent);
  agent_config.seed = mix_seed(mix_seed(seed, kAgentStream), agent_config.seed);
  if (!config.agent.contains("per_beta_steps")) {
    agent_config.per_beta_steps =
        std::max<long>(1, static_cast<long>(config.training_episodes) * config.env.episode_length);
  }

  TrainResult result{agents::Agent(agent_config, config.env.observation_size(), config.env.num_actions()),
                     TrainingLog{config.variant_id, {}}};
  auto& agent = result.agent;
  env::ResourceEnv sim(config.env);
  const std::uint64_t env_base = mix_seed(mix_seed(seed, kTrainEnvStream), config.env.seed);

  long global_step = 0;
  try {
    for (int episode = 0; episode < config.training_episodes; ++episode) {
      env::Observation obs = sim.reset(mix_seed(env_base, static_cast<std::uint64_t>(episode)));
      agent.reset_exploration_stats();
      EpisodeLog row;
      row.episode = episode;
      double loss_sum = 0.0;
      long losses = 0;
      while (!sim.done()) {
        const int action = agent.select_action(obs, true);
        env::StepResult step = sim.step(action);
        row.cumulative_reward += step.reward;
        // Truncation at the episode limit is not a true terminal state.
        const replay::Mask mask = agent.observe({obs, action, step.reward, step.observation, false});
        if (hooks.after_env_step) {
          hooks.after_env_step({{sim.current_step() - 1, action, step.reward, step.info}, mask});
        }
        if (const auto loss = agent.learn_step()) {
          loss_sum += *loss;
          ++losses;
          if (hooks.after_learn_step) hooks.after_learn_step(agent);
        }
        obs = std::move(step.observation);
        ++global_step;
      }
      const auto& stats = agent.exploration_stats();
      row.epsilon = agent.epsilon();
      row.noise_magnitude = stats.noise_samples ? stats.noise_magnitude_sum / stats.noise_samples : 0.0;
      row.vote_disagreement = stats.votes ? stats.disagreement_sum / stats.votes : 0.0;
      row.mean_loss = losses ? loss_sum / losses : 0.0;
      row.learn_steps = agent.learn_steps();
      result.log.episodes.push_back(row);
    }
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " (at training step " + std::to_string(global_step) + ")");
  }
  return result;
}

// ---- evaluation -----------------------------------------------------------

double efficiency_percent(double items_performing, double resources_utilized) {
  if (resources_utilized <= 0.0) return 0.0;
  return 100.0 * items_performing / resources_utilized;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

std::uint64_t eval_seed_for(std::uint64_t run_seed) { return mix_seed(run_seed, kEvalStream); }

MetricsReport evaluate_policy(const Policy& policy, const env::EnvConfig& env_config,
                              int eval_episodes, std::uint64_t seed) {
  env::ResourceEnv sim(env_config);
  Rng policy_rng(mix_seed(seed, kPolicyStream));
  MetricsReport report;
  double deviation = 0.0;
  for (int e = 0; e < eval_episodes; ++e) {
    env::Observation obs = sim.reset(mix_seed(seed, static_cast<std::uint64_t>(e)));
    double episode_reward = 0.0;
    while (!sim.done()) {
      const long t = sim.current_step();
      const int action = policy(obs, policy_rng);
      const env::StepResult step = sim.step(action);
      const auto& info = step.info;
      report.trajectory.push_back({t, action, step.reward, info});
      episode_reward += step.reward;
      deviation += -step.reward;
      if (info.unutilized > env_config.target_unutilized) {
        ++report.time_periods_under_capacity;
      } else if (info.unutilized < env_config.target_unutilized) {
        ++report.time_periods_over_capacity;
      } else {
        ++report.time_periods_at_target;
      }
      report.total_items_performing += info.items_performing;
      report.total_resources_utilized += info.resources_utilized;
      report.utilization.push_back(
          {report.periods, info.items_performing, info.resources_utilized, info.unutilized});
      ++report.periods;
      obs = step.observation;
    }
    report.episode_rewards.push_back(episode_reward);
  }
  report.efficiency_percent = efficiency_percent(static_cast<double>(report.total_items_performing),
                                                 static_cast<double>(report.total_resources_utilized));
  double total_reward = 0.0;
  for (double r : report.episode_rewards) total_reward += r;
  report.mean_eval_reward = eval_episodes > 0 ? total_reward / eval_episodes : 0.0;
  report.mean_abs_deviation = report.periods > 0 ? deviation / static_cast<double>(report.periods) : 0.0;
  return report;
}

MetricsReport evaluate(const agents::Agent& agent, const env::EnvConfig& env_config,
                       int eval_episodes, std::uint64_t seed) {
  return evaluate_policy(
      [&agent](const env::Observation& obs, Rng& rng) { return agent.greedy_action(obs, rng); },
      env_config, eval_episodes, seed);
}

Policy uniform_random_policy(int num_actions) {
  return [num_actions](const env::Observation&, Rng& rng) {
    return static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(num_actions)));
  };
}

RunOutcome run_once(const RunConfig& config, std::uint64_t seed) {
  RunOutcome out;
  out.variant_id = config.variant_id;
  out.seed = seed;
  try {
    TrainResult trained = train(config, seed);
    out.report = evaluate(trained.agent, config.env, config.eval_episodes, eval_seed_for(seed));
    out.log = std::move(trained.log);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// ---- comparison -----------------------------------------------------------

ComparisonRow row_from_report(int variant_id, const std::string& seed, const MetricsReport& r,
                              int eval_episodes) {
  const double windows = std::max(1, eval_episodes);
  ComparisonRow row;
  row.variant_id = variant_id;
  row.seed = seed;
  row.under_capacity = static_cast<double>(r.time_periods_under_capacity) / windows;
  row.over_capacity = static_cast<double>(r.time_periods_over_capacity) / windows;
  row.at_target = static_cast<double>(r.time_periods_at_target) / windows;
  row.average_items_performing = static_cast<double>(r.total_items_performing) / windows;
  row.average_resources_utilized = static_cast<double>(r.total_resources_utilized) / windows;
  row.efficiency_percent = r.efficiency_percent;
  row.mean_eval_reward = r.mean_eval_reward;
  return row;
}

ComparisonRow median_row(int variant_id, std::span<const ComparisonRow> rows) {
  ComparisonRow out;
  out.variant_id = variant_id;
  out.seed = "median";
  std::vector<const ComparisonRow*> ok;
  for (const auto& r : rows)
    if (r.status == "ok") ok.push_back(&r);
  if (ok.empty()) {
    out.status = "error: no successful runs";
    return out;
  }
  auto median = [&](double ComparisonRow::*field) {
    std::vector<double> v;
    for (const auto* r : ok) v.push_back(r->*field);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  };
  out.under_capacity = median(&ComparisonRow::under_capacity);
  out.over_capacity = median(&ComparisonRow::over_capacity);
  out.at_target = median(&ComparisonRow::at_target);
  out.average_items_performing = median(&ComparisonRow::average_items_performing);
  out.average_resources_utilized = median(&ComparisonRow::average_resources_utilized);
  out.efficiency_percent = median(&ComparisonRow::efficiency_percent);
  out.mean_eval_reward = median(&ComparisonRow::mean_eval_reward);
  return out;
}

ComparisonTable compare_variants(std::span<const RunConfig> matrix, int jobs) {
  struct Cell {
    std::size_t config;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    if (matrix[c].seeds.empty()) throw ConfigError("every compared config needs at least one seed");
    for (auto s : matrix[c].seeds) cells.push_back({c, s});
  }

  std::vector<RunOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      outcomes[i] = run_once(matrix[cells[i].config], cells[i].seed);
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ComparisonTable table;
  std::size_t i = 0;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    std::vector<ComparisonRow> per_seed;
    for (std::size_t s = 0; s < matrix[c].seeds.size(); ++s, ++i) {
      const auto& o = outcomes[i];
      ComparisonRow row;
      if (o.report) {
        row = row_from_report(o.variant_id, std::to_string(o.seed), *o.report, matrix[c].eval_episodes);
      } else {
        row.variant_id = o.variant_id;
        row.seed = std::to_string(o.seed);
        row.status = "error: " + o.error;
      }
      per_seed.push_back(row);
    }
    table.rows.insert(table.rows.end(), per_seed.begin(), per_seed.end());
    table.rows.push_back(median_row(matrix[c].variant_id, per_seed));
  }
  table.outcomes = std::move(outcomes);
  return table;
}

// ---- CSV output -----------------------------------------------------------

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << "variant,seed,status,time_periods_under_capacity,time_periods_over_capacity,"
         "time_periods_at_target,average_items_performing,average_resources_utilized,"
         "efficiency_percent,mean_eval_reward\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.variant_id << ',' << r.seed << ',' << status << ',' << num(r.under_capacity) << ','
        << num(r.over_capacity) << ',' << num(r.at_target) << ',' << num(r.average_items_performing)
        << ',' << num(r.average_resources_utilized) << ',' << num(r.efficiency_percent) << ','
        << num(r.mean_eval_reward) << '\n';
  }
}

void write_metrics_csv(std::ostream& out, int variant_id, std::uint64_t seed, const MetricsReport& r) {
  out << "variant,seed,periods,time_periods_under_capacity,time_periods_over_capacity,"
         "time_periods_at_target,total_items_performing,total_resources_utilized,"
         "efficiency_percent,mean_eval_reward,mean_abs_deviation\n";
  out << variant_id << ',' << seed << ',' << r.periods << ',' << r.time_periods_under_capacity << ','
      << r.time_periods_over_capacity << ',' << r.time_periods_at_target << ','
      << r.total_items_performing << ',' << r.total_resources_utilized << ','
      << num(r.efficiency_percent) << ',' << num(r.mean_eval_reward) << ','
      << num(r.mean_abs_deviation) << '\n';
}

void write_training_log_csv(std::ostream& out, const TrainingLog& log) {
  out << "variant,episode,cumulative_reward,epsilon,noise_magnitude,vote_disagreement,mean_loss,"
         "learn_steps\n";
  for (const auto& e : log.episodes) {
    out << log.variant_id << ',' << e.episode << ',' << num(e.cumulative_reward) << ','
        << num(e.epsilon) << ',' << num(e.noise_magnitude) << ',' << num(e.vote_disagreement) << ','
        << num(e.mean_loss) << ',' << e.learn_steps << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void emit_plot_data(std::span<const PlotSeries> series, const std::filesystem::path& out_dir) {
  std::ostringstream exploration;
  std::ostringstream utilization;
  exploration << "variant,episode,exploration_measure,cumulative_reward\n";
  utilization << "variant,period,items_performing,resources_utilized,unutilized\n";
  for (const auto& s : series) {
    if (s.log) {
      const auto sw = agents::variant_switches(s.variant_id);
      for (const auto& e : s.log->episodes) {
        exploration << s.variant_id << ',' << e.episode << ',' << num(exploration_measure(sw, e)) << ','
                    << num(e.cumulative_reward) << '\n';
      }
    }
    if (s.report) {
      for (const auto& p : s.report->utilization) {
        utilization << s.variant_id << ',' << p.period << ',' << p.items_performing << ','
                    << p.resources_utilized << ',' << p.unutilized << '\n';
      }
    }
  }
  write_text_file(out_dir / "exploration_vs_reward.csv", exploration.str());
  write_text_file(out_dir / "utilization_timeseries.csv", utilization.str());
}

}  // namespace resalloc::harness
