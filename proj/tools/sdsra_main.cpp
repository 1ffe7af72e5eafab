#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "sdsra/config.hpp"
#include "sdsra/gradcheck.hpp"
#include "sdsra/harness.hpp"
#include "sdsra/tabular_verify.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2, kVerification = 3 };

sdsra::RunConfig load(const std::string& path) {
  auto parsed = sdsra::load_config_file(path);
  for (const auto& d : parsed.applied_defaults) std::cerr << path << ": default " << d << "\n";
  return parsed.config;
}

}  // namespace

int main(int argc, char** argv) {
  sdsra::configure_allocator();
  CLI::App app{"SDSRA and soft actor-critic experiments"};
  app.require_subcommand(1);

  std::string train_config;
  auto* train = app.add_subcommand("train", "train every seed of a config");
  train->add_option("config", train_config, "config file")->required();

  std::string cmp_a, cmp_b;
  auto* compare = app.add_subcommand("compare", "train two configs and compare their learning curves");
  compare->add_option("config_a", cmp_a, "first config")->required();
  compare->add_option("config_b", cmp_b, "second config")->required();

  std::string eval_ckpt, eval_config;
  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint directory");
  eval->add_option("checkpoint", eval_ckpt, "checkpoint directory")->required();
  eval->add_option("config", eval_config, "config the checkpoint was trained with")->required();

  std::uint64_t tv_seed = 1;
  std::size_t tv_cases = 100;
  auto* tabular = app.add_subcommand("tabular-verify", "soft Bellman property suite on random MDPs");
  tabular->add_option("--seed", tv_seed, "RNG seed");
  tabular->add_option("--cases", tv_cases, "number of random MDPs")->check(CLI::PositiveNumber);

  std::uint64_t gc_seed = 1;
  std::size_t gc_cases = 100;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every analytic gradient");
  gradcheck->add_option("--seed", gc_seed, "RNG seed");
  gradcheck->add_option("--cases", gc_cases, "random cases per category")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    if (*train) {
      const auto summary = sdsra::run_train(load(train_config), std::cout);
      std::cout << "curves: " << summary.svg.string() << "\n";
      return summary.ok() ? kOk : kRuntime;
    }
    if (*compare) {
      const auto a = load(cmp_a), b = load(cmp_b);
      const auto out = sdsra::run_compare(a, b, std::cout);
      out.report.print(std::cout);
      std::cout << "curves: " << out.svg.string() << "\nreport: " << out.report_file.string() << "\n";
      return kOk;
    }
    if (*eval) {
      const auto config = load(eval_config);
      const auto r = sdsra::run_eval(eval_ckpt, config);
      std::printf("episodes %zu  mean return %.6f  mean entropy %.6f\n", config.eval_episodes, r.mean_return,
                  r.mean_entropy);
      return kOk;
    }
    if (*tabular) {
      const auto report = sdsra::tabular::run_tabular_verify(tv_seed, tv_cases);
      report.print(std::cout);
      return report.passed() ? kOk : kVerification;
    }
    if (*gradcheck) {
      const auto report = sdsra::run_gradcheck(gc_seed, gc_cases);
      report.print(std::cout);
      return report.passed() ? kOk : kVerification;
    }
  } catch (const sdsra::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
