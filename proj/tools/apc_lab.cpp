// apc_lab: run experiment configs, rebuild reports, list sweeps.

#include <cstdio>
#include <cstdlib>
#include <thread>

#include <CLI11.hpp>

#include "apc/bench.hpp"

namespace fs = std::filesystem;
using namespace apc::bench;

namespace {

fs::path default_out(const ExperimentConfig& config) {
  const char* root = std::getenv("APC_OUT_ROOT");
  return fs::path(root && *root ? root : "runs") / config.name;
}

int run(const std::string& config_path, std::string out, const std::vector<std::string>& arms, std::size_t threads,
        bool quiet) {
  const ExperimentConfig config = ExperimentConfig::load(config_path);
  RunOptions options;
  options.out_dir = out.empty() ? default_out(config) : fs::path(out);
  options.arm_filter = arms;
  options.threads = threads;
  options.quiet = quiet;
  const ExperimentResult result = run_experiment(config, options);
  std::size_t failed = 0;
  for (const ArmResult& a : result.arms) failed += !a.ok();
  std::printf("%s: %zu arms, %zu failed, artifacts in %s\n", config.name.c_str(), result.arms.size(), failed,
              options.out_dir.string().c_str());
  for (const auto& [scope, value] : result.selections) std::printf("  selected %s = %s\n", scope.c_str(), value.c_str());
  return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"APC experiment runner"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir, report_dir;
  std::vector<std::string> arm_filter;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run every arm of an experiment config and emit its report");
  run_cmd->add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory (default $APC_OUT_ROOT/<name> or runs/<name>)");
  run_cmd->add_option("--arms", arm_filter, "Only arms whose id contains one of these substrings");
  run_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--quiet", quiet, "No per-arm progress");

  auto* report_cmd = app.add_subcommand("report", "Rebuild report/ from an existing artifact directory");
  report_cmd->add_option("--dir", report_dir, "Artifact directory")->required();

  auto* list_cmd = app.add_subcommand("sweep-list", "List experiment kinds, or the arms of a config");
  list_cmd->add_option("--config", config_path, "Experiment config (TOML)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(config_path, out_dir, arm_filter, threads, quiet);
    if (*report_cmd) {
      emit_report(report_dir);
      std::printf("report written to %s\n", (fs::path(report_dir) / "report").string().c_str());
      return 0;
    }
    if (*list_cmd) {
      if (config_path.empty()) {
        for (ExperimentKind k : all_kinds()) std::printf("%s\n", kind_name(k));
      } else {
        const ExperimentConfig config = ExperimentConfig::load(config_path);
        for (const ArmPlan& p : plan_arms(config)) std::printf("%s\n", p.id.c_str());
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
