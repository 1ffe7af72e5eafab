#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdsra/agent.hpp"
#include "sdsra/config.hpp"

namespace sdsra {

/// Keeps batch-sized temporaries (about 128 KiB) on the heap instead of a
/// fresh mmap per allocation. Call once at program start; no-op off glibc.
void configure_allocator();

/// `SDSRA_OUT` when set and non-empty, otherwise config.output_dir.
std::filesystem::path output_root(const RunConfig& config);
/// `<name>_<mode>_<env>_seed<S>`
std::string run_stem(const RunConfig& config, std::uint64_t seed);

struct SeedTraining {
  RunLog log;
  std::unique_ptr<Agent> agent;
};

/// Trains one seed in memory; no files are touched.
SeedTraining train_seed(const RunConfig& config, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string stem;
  RunLog log;
  std::filesystem::path csv, eval_csv, checkpoint;
  std::optional<std::string> error;
  /// CPU time of the training thread.
  double cpu_seconds = 0.0;
};

struct TrainSummary {
  std::vector<SeedOutcome> runs;
  std::filesystem::path svg;
  bool ok() const;
};

/// Trains every seed concurrently, then writes per seed a CSV log, an eval
/// CSV and a checkpoint directory, plus one SVG of all return curves. A seed
/// that aborts leaves `<stem>.dump` and is reported in its outcome.
TrainSummary run_train(const RunConfig& config, std::ostream& progress);

/// Episode-return curve (step at episode end, return) from a training log.
std::vector<std::pair<double, double>> return_curve(const RunLog& log);

/// First eval step at which the trailing `window`-point mean of eval returns
/// reaches `threshold`.
std::optional<std::size_t> steps_to_threshold(const std::vector<EvalRecord>& evals, double threshold,
                                              std::size_t window);
/// Mean of the last `last` eval returns.
double final_mean_return(const std::vector<EvalRecord>& evals, std::size_t last = 10);
double mean_eval_entropy(const std::vector<EvalRecord>& evals);

struct CompareRow {
  std::string label;
  std::uint64_t seed = 0;
  std::optional<std::size_t> steps_to_threshold;
  double final_return = 0.0;
  double mean_entropy = 0.0;
};

struct CompareAggregate {
  std::string label;
  std::size_t seeds = 0;
  std::size_t reached = 0;
  /// Seeds that never reach the threshold count as total_steps.
  double mean_steps = 0.0;
  double final_return = 0.0, final_return_se = 0.0;
  double entropy = 0.0, entropy_se = 0.0;
};

struct EntropyTracePoint {
  std::size_t step = 0;
  double a = 0.0, b = 0.0;
};

struct CompareReport {
  double threshold = 0.0;
  std::size_t window = 1;
  std::size_t total_steps = 0;
  std::vector<CompareRow> rows;
  std::vector<CompareAggregate> aggregates;
  /// Seed-averaged eval entropy of each side at the shared eval steps.
  std::vector<EntropyTracePoint> entropy_trace;

  void print(std::ostream& out) const;
  std::string entropy_trace_csv() const;
};

CompareReport compare_logs(const std::string& label_a, const std::vector<std::pair<std::uint64_t, RunLog>>& a,
                           const std::string& label_b, const std::vector<std::pair<std::uint64_t, RunLog>>& b,
                           double threshold, std::size_t window, std::size_t total_steps);

struct CompareOutcome {
  CompareReport report;
  TrainSummary a, b;
  std::filesystem::path svg, report_file, entropy_csv;
};

/// Runs both configs through run_train and compares them. Both must share
/// env and total_steps; the threshold and window come from config_a.
CompareOutcome run_compare(const RunConfig& config_a, const RunConfig& config_b, std::ostream& progress);

/// Loads a checkpoint directory into an agent built from `config` and runs
/// config.eval_episodes deterministic evaluation episodes.
EvalResult run_eval(const std::filesystem::path& checkpoint, const RunConfig& config);

/// Mean return of uniformly random actions over `episodes` seeded episodes.
double random_rollout_return(const Env& env, std::size_t episodes, std::uint64_t seed);

}  // namespace sdsra
