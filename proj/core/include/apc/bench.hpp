#pragma once

// Experiment configuration, sweep orchestration and report emission.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "apc/cloning.hpp"
#include "apc/evaluation.hpp"
#include "apc/experts.hpp"
#include "apc/online.hpp"

namespace apc::bench {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed TOML-subset document: `[section]` headers, `key = value` lines with
/// strings, numbers, booleans or flat arrays, and `#` comments. Keys are
/// flattened to "section.key".
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_numbers(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

 private:
  struct Value {
    bool is_array = false;
    std::vector<std::string> items;  // strings already unquoted
    std::vector<bool> quoted;
    int line = 0;
  };
  const Value& at(const std::string& key) const;

  std::map<std::string, Value> values_;
};

enum class ExperimentKind { OfflineSweep, NoiseGrid, SigmaSAblation, Compression, Privileged, Dagger, Kickstart };

const char* kind_name(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& text);
std::vector<ExperimentKind> all_kinds();

struct ExpertSection {
  std::string tier = "high";
  double native_sigma = 0.2;  // LQR expert's Gaussian head
  std::uint64_t train_steps = 300'000;
  std::uint64_t eval_every = 1'000;
  double learning_rate = 1e-3;
};

struct DaggerSection {
  std::vector<double> betas = {0.0};
  std::vector<std::string> objectives = {"analytic_ce"};
  std::uint64_t env_steps = 600;
  std::uint64_t eval_every = 10;
  std::size_t batch_size = 32;
  double updates_per_timestep = 10.0;
  double error_buffer = 100.0;
  std::size_t replay_capacity = 1'000'000;
  double learning_rate = 1e-3;
  double threshold = 0.9;  // expert-normalized level for "steps to reach"
};

struct KickstartSection {
  std::vector<std::string> tiers = {"medium"};
  std::vector<double> lambdas = {0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0};
  std::uint64_t env_steps = 60'000;
  std::uint64_t eval_every = 3'000;
  double learning_rate = 1e-3;
  double task_weight = 1.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::OfflineSweep;
  std::string env = "lqr";
  std::uint64_t master_seed = 7;
  std::size_t seeds = 3;
  std::vector<cloning::Method> methods = {cloning::Method::BC, cloning::Method::NaiveABC, cloning::Method::APC};

  // dataset
  std::vector<std::size_t> n_trajectories = {1, 2, 3, 5, 10};
  std::vector<double> expert_noise = {0.0};
  data::DatasetMode dataset_mode = data::DatasetMode::Full;
  std::size_t short_length = 0;

  // augmentation
  double apc_sigma_s = 0.1;
  double naive_sigma_s = 0.001;
  std::size_t m = 10;
  std::size_t grid_shift = 0;
  bool perturb_common = true;
  bool perturb_privileged = true;
  std::vector<double> sigma_s_grid = {1e-4, 1e-3, 1e-2, 0.05, 0.1, 1.0, 10.0};

  cloning::TrainConfig train;

  // student
  std::string observation = "state";
  std::vector<std::size_t> torso = {32, 32};
  std::vector<std::vector<std::size_t>> torsos;  // compression grid
  std::vector<cloning::ImageVariant> variants = {cloning::ImageVariant::Plain};

  // evaluation
  std::size_t validation_size = 50;
  std::size_t test_size = 150;
  std::vector<double> student_noise = {0.0, 0.2, 0.5, 1.0};

  ExpertSection expert;
  DaggerSection dagger;
  KickstartSection kickstart;

  static ExperimentConfig from_file(const ConfigFile& file);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Every semantically meaningful field as sorted "key=value" lines; the
  /// experiment name and output location are excluded.
  std::string canonical() const;
  std::uint64_t hash() const;
  void validate() const;
};

std::string torso_to_string(const std::vector<std::size_t>& torso);
std::vector<std::size_t> parse_torso(const std::string& text);

/// Fixed-precision number formatting shared by every CSV writer.
std::string format_number(double value);

using Labels = std::vector<std::pair<std::string, std::string>>;
using Metrics = std::vector<std::pair<std::string, double>>;

struct CurveRow {
  double x = 0.0;
  double mean = 0.0;
  double ci_half_width = 0.0;
};

struct ArmResult {
  std::string id;
  std::uint64_t seed = 0;
  std::size_t seed_index = 0;
  Labels labels;  // excluding the seed
  Metrics metrics;
  std::vector<double> test_returns;
  std::vector<CurveRow> curve;
  std::string curve_x = "iteration";
  std::string eval_mode = "stochastic";
  std::string error;

  bool ok() const { return error.empty(); }
  std::string label(const std::string& key) const;
  double metric(const std::string& key) const;
  bool has_metric(const std::string& key) const;
  /// Labels joined as "k=v/k=v" (no seed): the group an arm averages into.
  std::string group() const;
};

struct ArmPlan {
  std::string id;
  std::size_t seed_index = 0;
  Labels labels;
};

/// Arms in execution (and output) order.
std::vector<ArmPlan> plan_arms(const ExperimentConfig& config);

struct RunOptions {
  std::filesystem::path out_dir;
  std::vector<std::string> arm_filter;  // keep arms whose id contains any entry
  std::size_t threads = 1;
  bool quiet = false;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::filesystem::path dir;
  double expert_test_mean = 0.0;  // reference for normalization
  std::map<std::string, double> expert_reference;  // per tier for kickstarting
  std::vector<ArmResult> arms;
  std::vector<std::pair<std::string, std::string>> selections;  // e.g. sigma_s per method
};

/// Runs every arm (optionally in parallel), then writes results.csv,
/// curves.csv, returns.csv, selections.csv and manifest.json into out_dir and
/// emits the report. Arm failures are recorded, never fatal.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Reads an artifact directory and writes report/ (summary CSVs and SVG
/// plots). Throws before writing anything if the directory is not a complete
/// artifact.
void emit_report(const std::filesystem::path& dir);

/// Group means over seeds for one metric: group -> (mean, 1.96 sem, count).
struct GroupStat {
  std::string group;
  Labels labels;
  double mean = 0.0;
  double ci_half_width = 0.0;
  std::size_t count = 0;
};
std::vector<GroupStat> group_metric(const std::vector<ArmResult>& arms, const std::string& metric);

/// Per-seed binned curves averaged across seeds, for one group.
struct BinnedCurve {
  std::string group;
  std::vector<std::vector<CurveBin>> per_seed;
  std::vector<CurveBin> averaged;  // mean of bin means; CI across seeds
};
std::vector<BinnedCurve> bin_curves(const std::vector<ArmResult>& arms);

}  // namespace apc::bench
