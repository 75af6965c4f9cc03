#pragma once

// Evaluation protocol and learning-curve statistics.

#include <utility>
#include <vector>

#include "apc/envs.hpp"
#include "apc/policy.hpp"

namespace apc::bench {

enum class EvalMode { Stochastic, MeanAction };

struct EvalReport {
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;            // sample standard deviation (n - 1)
  double ci_half_width = 0.0;  // 1.96 * std / sqrt(n)
  std::size_t count = 0;

  static EvalReport from_returns(std::vector<double> returns);
};

/// One episode per instance seed. Stochastic mode executes a ~ N(mu(s), sigma)
/// with the fixed `student_sigma`; MeanAction executes mu(s).
EvalReport evaluate(const policy::Actor& actor, const envs::Environment& env,
                    const envs::InstanceSet& instances, double student_sigma, EvalMode mode);

/// Score relative to an expert: value / expert for reward tasks, expert / value
/// (cost ratio) when returns are costs (expert return < 0). 1 = expert level.
double expert_normalized(double value, double expert_value);

struct CurveBin {
  std::size_t index = 0;
  double x_low = 0.0;
  double x_high = 0.0;
  double mean = 0.0;
  double ci_half_width = 0.0;
  std::size_t count = 0;
};

inline constexpr std::size_t kCurveBins = 10;

/// Ten equal-count bins in x order; bin k holds points [k n / 10, (k+1) n / 10).
std::vector<CurveBin> bin_curve(std::vector<std::pair<double, double>> points);

/// Mean and 1.96 * sem of a sample (sem uses the n - 1 standard deviation).
std::pair<double, double> mean_and_ci(const std::vector<double>& values);

}  // namespace apc::bench
