// resalloc: train, evaluate and compare DQN variants on the resource-allocation simulator.
//
//   resalloc run --variant <1..8> --seed <u64> --episodes <n> --config <path> --out <dir>
//   resalloc compare --variants all --seeds 1,2,3 --config <path> --out <dir>
//   resalloc plot --in <dir> --out <dir>
//
// Exit codes: 0 success, 1 configuration error, 2 numeric error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "resalloc/errors.hpp"
#include "resalloc/harness.hpp"

namespace fs = std::filesystem;
using namespace resalloc;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kNumeric = 2, kIo = 3 };

harness::RunConfig base_config(const std::string& path) {
  if (path.empty()) {
    harness::RunConfig c;
    c.validate();
    return c;
  }
  return harness::load_run_config(path);
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

std::vector<int> parse_variants(const std::string& spec) {
  std::vector<int> out;
  if (spec == "all") {
    for (int v = 1; v <= agents::kNumVariants; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad variant list: " + spec);
    }
  }
  if (out.empty()) throw ConfigError("empty variant list");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("bad seed list: " + spec);
    }
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

struct RunArgs {
  int variant = 0;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> eval_episodes;
  std::string config;
  std::string out;
  bool checkpoints = false;
  bool transition_log = false;
};

int cmd_run(const RunArgs& args) {
  harness::RunConfig config = base_config(args.config);
  if (args.variant != 0) config.variant_id = args.variant;
  if (args.episodes) config.training_episodes = *args.episodes;
  if (args.eval_episodes) config.eval_episodes = *args.eval_episodes;
  if (!args.out.empty()) config.output_dir = args.out;
  const std::uint64_t seed = args.seed.value_or(config.seeds.front());
  config.seeds = {seed};
  config.validate();

  const fs::path out_dir = config.output_dir;
  std::vector<replay::TransitionLogRow> transitions;
  harness::TrainHooks hooks;
  if (args.transition_log) {
    hooks.after_env_step = [&](const replay::TransitionLogRow& row) { transitions.push_back(row); };
  }

  harness::TrainResult trained = harness::train(config, seed, hooks);
  const harness::MetricsReport report =
      harness::evaluate(trained.agent, config.env, config.eval_episodes, harness::eval_seed_for(seed));

  nlohmann::json run_json = config;
  harness::write_text_file(out_dir / "run_config.json", run_json.dump(2) + "\n");
  nlohmann::json agent_json = trained.agent.config();
  harness::write_text_file(out_dir / "agent_config.json", agent_json.dump(2) + "\n");
  harness::write_text_file(out_dir / "metrics.csv", render([&](std::ostream& o) {
    harness::write_metrics_csv(o, config.variant_id, seed, report);
  }));
  harness::write_text_file(out_dir / "training_log.csv", render([&](std::ostream& o) {
    harness::write_training_log_csv(o, trained.log);
  }));
  harness::write_text_file(out_dir / "trajectory.csv", render([&](std::ostream& o) {
    env::write_trajectory_csv(o, report.trajectory);
  }));
  if (args.transition_log) {
    const int heads = static_cast<int>(trained.agent.heads().size());
    harness::write_text_file(out_dir / "transition_log.csv", render([&](std::ostream& o) {
      replay::write_transition_log_csv(o, transitions, heads);
    }));
  }
  const harness::PlotSeries series{config.variant_id, &trained.log, &report};
  harness::emit_plot_data({&series, 1}, out_dir);

  if (args.checkpoints) {
    const auto& heads = trained.agent.heads();
    fs::create_directories(out_dir / "checkpoints");
    for (std::size_t k = 0; k < heads.size(); ++k) {
      nn::save_checkpoint(heads[k].policy, out_dir / "checkpoints" / ("head" + std::to_string(k) + "_policy.json"));
      nn::save_checkpoint(heads[k].target, out_dir / "checkpoints" / ("head" + std::to_string(k) + "_target.json"));
    }
  }

  std::cout << "variant " << config.variant_id << " (" << agents::variant_name(config.variant_id)
            << "), seed " << seed << ": efficiency " << harness::round_to(report.efficiency_percent, 1)
            << "%, mean eval reward " << report.mean_eval_reward << ", mean |unutilized - target| "
            << report.mean_abs_deviation << "\n";
  return kOk;
}

struct CompareArgs {
  std::string variants = "all";
  std::string seeds;
  std::optional<int> episodes;
  std::optional<int> eval_episodes;
  std::string config;
  std::string out;
  int jobs = 0;
};

int cmd_compare(const CompareArgs& args) {
  harness::RunConfig base = base_config(args.config);
  if (args.episodes) base.training_episodes = *args.episodes;
  if (args.eval_episodes) base.eval_episodes = *args.eval_episodes;
  if (!args.seeds.empty()) base.seeds = parse_seeds(args.seeds);
  if (!args.out.empty()) base.output_dir = args.out;

  std::vector<harness::RunConfig> matrix;
  for (int v : parse_variants(args.variants)) {
    harness::RunConfig c = base;
    c.variant_id = v;
    c.validate();
    matrix.push_back(c);
  }
  const int jobs = args.jobs > 0 ? args.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const harness::ComparisonTable table = harness::compare_variants(matrix, jobs);

  const fs::path out_dir = base.output_dir;
  harness::write_text_file(out_dir / "comparison.csv", render([&](std::ostream& o) {
    harness::write_comparison_csv(o, table.rows);
  }));

  // Plot data uses the first successful seed of each variant.
  std::vector<harness::PlotSeries> series;
  for (const auto& c : matrix) {
    for (const auto& o : table.outcomes) {
      if (o.variant_id == c.variant_id && o.report) {
        series.push_back({o.variant_id, &*o.log, &*o.report});
        break;
      }
    }
  }
  harness::emit_plot_data(series, out_dir);

  int failures = 0;
  for (const auto& r : table.rows) {
    if (r.seed == "median") {
      std::cout << "variant " << r.variant_id << " median efficiency "
                << harness::round_to(r.efficiency_percent, 1) << "%, mean eval reward "
                << r.mean_eval_reward << " [" << r.status << "]\n";
    } else if (r.status != "ok") {
      ++failures;
      std::cerr << "variant " << r.variant_id << " seed " << r.seed << ": " << r.status << "\n";
    }
  }
  return failures == 0 ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Q-learning variants for resource allocation under uncertainty"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Train and evaluate one variant");
  run->add_option("--variant", run_args.variant, "Variant id 1..8")->check(CLI::Range(1, 8));
  run->add_option("--seed", run_args.seed, "Run seed");
  run->add_option("--episodes", run_args.episodes, "Training episodes");
  run->add_option("--eval-episodes", run_args.eval_episodes, "Evaluation episodes");
  run->add_option("--config", run_args.config, "RunConfig JSON file");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_flag("--checkpoints", run_args.checkpoints, "Write policy/target checkpoints");
  run->add_flag("--transition-log", run_args.transition_log, "Write transition_log.csv");

  CompareArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "Train and evaluate a variant x seed matrix");
  compare->add_option("--variants", cmp_args.variants, "'all' or a comma list of ids");
  compare->add_option("--seeds", cmp_args.seeds, "Comma-separated seeds");
  compare->add_option("--episodes", cmp_args.episodes, "Training episodes");
  compare->add_option("--eval-episodes", cmp_args.eval_episodes, "Evaluation episodes");
  compare->add_option("--config", cmp_args.config, "RunConfig JSON file");
  compare->add_option("--out", cmp_args.out, "Output directory");
  compare->add_option("--jobs", cmp_args.jobs, "Concurrent runs (default: hardware threads)");

  std::string plot_in;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Render SVG charts from plot-data CSVs");
  plot->add_option("--in", plot_in, "Directory with exploration_vs_reward.csv and utilization_timeseries.csv")
      ->required();
  plot->add_option("--out", plot_out, "Directory for .svg files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(cmp_args);
    harness::render_svg_charts(plot_in, plot_out);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const ContractError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  }
}
