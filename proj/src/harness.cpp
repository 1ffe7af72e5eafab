#include "sdsra/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "sdsra/run_log.hpp"
#include "sdsra/svg.hpp"

namespace sdsra {

namespace fs = std::filesystem;

void configure_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

fs::path output_root(const RunConfig& config) {
  if (const char* env = std::getenv("SDSRA_OUT"); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

std::string run_stem(const RunConfig& config, std::uint64_t seed) {
  return config.name + "_" + std::string(mode_name(config.agent.mode)) + "_" + config.env + "_seed" +
         std::to_string(seed);
}

SeedTraining train_seed(const RunConfig& config, std::uint64_t seed) {
  auto env = make_env(config.env);
  auto agent_config = config.agent;
  agent_config.seed = seed;
  SeedTraining out;
  out.agent = std::make_unique<Agent>(agent_config, env->spec());
  out.log = out.agent->train(*env, {config.total_steps, config.log_interval, config.eval_interval,
                                    config.eval_episodes});
  return out;
}

bool TrainSummary::ok() const {
  return std::none_of(runs.begin(), runs.end(), [](const auto& r) { return r.error.has_value(); });
}

std::vector<std::pair<double, double>> return_curve(const RunLog& log) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : log.records)
    if (r.episode_return) pts.emplace_back(static_cast<double>(r.step), *r.episode_return);
  return pts;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string to_string(const RunLog& log, bool eval) {
  std::ostringstream os;
  eval ? write_eval_csv(os, log) : write_csv(os, log);
  return os.str();
}

double thread_cpu_seconds() {
  timespec ts{};
  if (clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) != 0) return 0.0;
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

}  // namespace

TrainSummary run_train(const RunConfig& config, std::ostream& progress) {
  const auto root = output_root(config);
  fs::create_directories(root);

  struct Result {
    SeedTraining training;
    std::optional<std::string> error, dump;
    double seconds = 0, cpu_seconds = 0;
  };
  std::vector<std::future<Result>> jobs;
  for (auto seed : config.seeds)
    jobs.push_back(std::async(std::launch::async, [&config, seed] {
      Result r;
      const auto start = std::chrono::steady_clock::now();
      try {
        r.training = train_seed(config, seed);
      } catch (const TrainingAborted& e) {
        r.error = e.what();
        r.dump = e.dump();
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      r.cpu_seconds = thread_cpu_seconds();
      return r;
    }));

  TrainSummary summary;
  std::vector<CurveSeries> curves;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    auto r = jobs[k].get();
    SeedOutcome out;
    out.seed = config.seeds[k];
    out.stem = run_stem(config, out.seed);
    out.error = r.error;
    out.cpu_seconds = r.cpu_seconds;
    if (r.error) {
      if (r.dump) write_file_atomically(root / (out.stem + ".dump"), *r.error + "\n" + *r.dump);
      progress << out.stem << ": aborted after " << r.seconds << " s: " << *r.error << "\n";
      summary.runs.push_back(std::move(out));
      continue;
    }
    out.log = std::move(r.training.log);
    out.csv = root / (out.stem + ".csv");
    out.eval_csv = root / (out.stem + "_eval.csv");
    out.checkpoint = root / out.stem;
    write_file_atomically(out.csv, to_string(out.log, false));
    write_file_atomically(out.eval_csv, to_string(out.log, true));
    r.training.agent->save(out.checkpoint);
    char line[200];
    std::snprintf(line, sizeof line, "%s: %zu steps in %.1f s (%.1f s CPU)", out.stem.c_str(), config.total_steps,
                  r.seconds, r.cpu_seconds);
    progress << line;
    if (!out.log.evals.empty()) progress << ", last eval return " << out.log.evals.back().mean_return;
    progress << "\n";
    curves.push_back({"seed " + std::to_string(out.seed), kPalette[k % std::size(kPalette)], return_curve(out.log)});
    summary.runs.push_back(std::move(out));
  }

  summary.svg = root / (config.name + "_" + std::string(mode_name(config.agent.mode)) + "_" + config.env + ".svg");
  write_file_atomically(summary.svg, learning_curve_svg(config.name + " (" + std::string(mode_name(config.agent.mode)) +
                                                            ", " + config.env + ")",
                                                        curves));
  return summary;
}

std::optional<std::size_t> steps_to_threshold(const std::vector<EvalRecord>& evals, double threshold,
                                              std::size_t window) {
  if (window == 0) throw std::invalid_argument("steps_to_threshold: window must be positive");
  double sum = 0;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    sum += evals[i].mean_return;
    if (i >= window) sum -= evals[i - window].mean_return;
    if (sum / static_cast<double>(std::min(i + 1, window)) >= threshold) return evals[i].step;
  }
  return std::nullopt;
}

double final_mean_return(const std::vector<EvalRecord>& evals, std::size_t last) {
  if (evals.empty()) return std::nan("");
  const auto n = std::min(last, evals.size());
  double s = 0;
  for (auto it = evals.end() - static_cast<std::ptrdiff_t>(n); it != evals.end(); ++it) s += it->mean_return;
  return s / static_cast<double>(n);
}

double mean_eval_entropy(const std::vector<EvalRecord>& evals) {
  if (evals.empty()) return std::nan("");
  double s = 0;
  for (const auto& e : evals) s += e.mean_entropy;
  return s / static_cast<double>(evals.size());
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

std::string steps_text(const std::optional<std::size_t>& s) { return s ? std::to_string(*s) : "not reached"; }

}  // namespace

CompareReport compare_logs(const std::string& label_a, const std::vector<std::pair<std::uint64_t, RunLog>>& a,
                           const std::string& label_b, const std::vector<std::pair<std::uint64_t, RunLog>>& b,
                           double threshold, std::size_t window, std::size_t total_steps) {
  CompareReport report;
  report.threshold = threshold;
  report.window = window;
  report.total_steps = total_steps;

  auto side = [&](const std::string& label, const std::vector<std::pair<std::uint64_t, RunLog>>& runs) {
    CompareAggregate agg;
    agg.label = label;
    agg.seeds = runs.size();
    std::vector<double> steps, finals, entropies;
    for (const auto& [seed, log] : runs) {
      CompareRow row{label, seed, steps_to_threshold(log.evals, threshold, window), final_mean_return(log.evals),
                     mean_eval_entropy(log.evals)};
      if (row.steps_to_threshold) ++agg.reached;
      steps.push_back(static_cast<double>(row.steps_to_threshold.value_or(total_steps)));
      finals.push_back(row.final_return);
      entropies.push_back(row.mean_entropy);
      report.rows.push_back(row);
    }
    agg.mean_steps = mean_and_se(steps).first;
    std::tie(agg.final_return, agg.final_return_se) = mean_and_se(finals);
    std::tie(agg.entropy, agg.entropy_se) = mean_and_se(entropies);
    report.aggregates.push_back(agg);
  };
  side(label_a, a);
  side(label_b, b);

  auto averaged = [](const std::vector<std::pair<std::uint64_t, RunLog>>& runs) {
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& [seed, log] : runs)
      for (const auto& e : log.evals) {
        auto& [sum, n] = acc[e.step];
        sum += e.mean_entropy;
        ++n;
      }
    return acc;
  };
  const auto ea = averaged(a), eb = averaged(b);
  for (const auto& [step, va] : ea)
    if (auto it = eb.find(step); it != eb.end())
      report.entropy_trace.push_back({step, va.first / static_cast<double>(va.second),
                                      it->second.first / static_cast<double>(it->second.second)});
  return report;
}

void CompareReport::print(std::ostream& out) const {
  char line[256];
  std::snprintf(line, sizeof line, "threshold %.6g (trailing mean of %zu evals), total steps %zu\n", threshold, window,
                total_steps);
  out << line;
  std::snprintf(line, sizeof line, "%-24s %6s %18s %14s %12s\n", "run", "seed", "steps_to_threshold", "final_return",
                "entropy");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %6llu %18s %14.3f %12.5f\n", r.label.c_str(),
                  static_cast<unsigned long long>(r.seed), steps_text(r.steps_to_threshold).c_str(), r.final_return,
                  r.mean_entropy);
    out << line;
  }
  for (const auto& g : aggregates) {
    std::snprintf(line, sizeof line,
                  "%-24s %6s %18.1f %7.3f+-%-6.3f %5.4f+-%.4f  (%zu/%zu reached)\n", g.label.c_str(), "mean",
                  g.mean_steps, g.final_return, g.final_return_se, g.entropy, g.entropy_se, g.reached, g.seeds);
    out << line;
  }
}

std::string CompareReport::entropy_trace_csv() const {
  std::string s = "step,entropy_a,entropy_b\n";
  char line[96];
  for (const auto& p : entropy_trace) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", p.step, p.a, p.b);
    s += line;
  }
  return s;
}

CompareOutcome run_compare(const RunConfig& config_a, const RunConfig& config_b, std::ostream& progress) {
  if (config_a.env != config_b.env)
    throw ConfigError(0, "compare needs one env, got " + config_a.env + " and " + config_b.env);
  if (config_a.total_steps != config_b.total_steps) throw ConfigError(0, "compare needs equal total_steps");

  CompareOutcome out;
  out.a = run_train(config_a, progress);
  out.b = run_train(config_b, progress);
  if (!out.a.ok() || !out.b.ok()) throw std::runtime_error("compare: a training run aborted");

  auto label = [](const RunConfig& c) { return c.name + "_" + std::string(mode_name(c.agent.mode)); };
  auto logs = [](const TrainSummary& s) {
    std::vector<std::pair<std::uint64_t, RunLog>> v;
    for (const auto& r : s.runs) v.emplace_back(r.seed, r.log);
    return v;
  };
  out.report = compare_logs(label(config_a), logs(out.a), label(config_b), logs(out.b), config_a.threshold,
                            config_a.threshold_window, config_a.total_steps);

  std::vector<CurveSeries> curves;
  for (const auto& r : out.a.runs)
    curves.push_back({label(config_a) + " seed " + std::to_string(r.seed), "#1f77b4", return_curve(r.log)});
  for (const auto& r : out.b.runs)
    curves.push_back({label(config_b) + " seed " + std::to_string(r.seed), "#d62728", return_curve(r.log)});

  const auto root = output_root(config_a);
  const auto stem = label(config_a) + "_vs_" + label(config_b) + "_" + config_a.env;
  out.svg = root / (stem + ".svg");
  out.report_file = root / (stem + "_report.txt");
  out.entropy_csv = root / (stem + "_entropy.csv");
  write_file_atomically(out.svg, learning_curve_svg(label(config_a) + " vs " + label(config_b), curves));
  std::ostringstream text;
  out.report.print(text);
  write_file_atomically(out.report_file, text.str());
  write_file_atomically(out.entropy_csv, out.report.entropy_trace_csv());
  return out;
}

EvalResult run_eval(const fs::path& checkpoint, const RunConfig& config) {
  auto env = make_env(config.env);
  auto agent_config = config.agent;
  agent_config.seed = config.seeds.front();
  Agent agent(agent_config, env->spec());
  agent.load(checkpoint);
  return agent.evaluate(*env, config.eval_episodes);
}

double random_rollout_return(const Env& env, std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw std::invalid_argument("random_rollout_return: episodes must be positive");
  auto sim = env.clone();
  const auto& spec = sim->spec();
  Random rng(seed, 0x0a11);
  double total = 0;
  std::vector<double> action(spec.action_dim);
  for (std::size_t k = 0; k < episodes; ++k) {
    sim->reset(rng.next_u64());
    for (;;) {
      for (std::size_t j = 0; j < action.size(); ++j) action[j] = rng.uniform(spec.action_low[j], spec.action_high[j]);
      const auto res = sim->step(action);
      total += res.reward;
      if (res.done) break;
    }
  }
  return total / static_cast<double>(episodes);
}

}  // namespace sdsra
