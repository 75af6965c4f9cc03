#pragma once

// Online cloning: DAgger with a fixed student/expert mixture, and
// kickstarting (actor-critic plus lambda-weighted distillation).

#include <cstdint>
#include <string>
#include <vector>

#include "apc/actor_critic.hpp"
#include "apc/cloning.hpp"
#include "apc/data.hpp"
#include "apc/evaluation.hpp"
#include "apc/experts.hpp"
#include "apc/policy.hpp"

namespace apc::online {

using numcore::Matrix;
using numcore::Vector;

/// Component-then-sample: with probability beta the frozen student acts,
/// otherwise the expert. `used_student` reports the branch taken.
Vector mixture_act(const policy::Actor& student_frozen, const policy::Actor& expert, double beta,
                   const envs::Observation& obs, Rng& rng, bool* used_student = nullptr);

enum class DaggerObjective { AnalyticCe, LogprobOnMean };

const char* objective_name(DaggerObjective objective);
DaggerObjective parse_objective(const std::string& text);

struct DaggerConfig {
  double beta = 0.0;
  DaggerObjective objective = DaggerObjective::AnalyticCe;
  cloning::Method method = cloning::Method::BC;  // BC = no augmentation
  cloning::AugmentationSpec aug;
  data::RateLimiterConfig rate;
  std::size_t replay_capacity = 1'000'000;
  double learning_rate = 1e-4;
  std::uint64_t env_steps = 4'000;
  std::uint64_t eval_every = 200;
  policy::PolicyConfig student;

  void validate() const;
};

/// Mean over valid rows (plus augmented rows at weight 1/(N M)) of
/// H[pi_E(.|s) || pi(.|s)] or -log pi(mu_E(s)|s). APC augmented rows use the
/// expert at s', Naive ABC the expert at s.
cloning::LossResult dagger_update(const policy::PolicyNet& policy, const experts::Expert& expert,
                                  const envs::Environment& env, const cloning::Minibatch& batch,
                                  const DaggerConfig& config, Rng& rng);

struct CurveSample {
  std::uint64_t env_step = 0;
  double mean = 0.0;
  double ci_half_width = 0.0;
};

struct DaggerRun {
  std::vector<CurveSample> curve;
  std::uint64_t env_steps = 0;
  std::uint64_t learner_updates = 0;
  std::uint64_t expert_steps = 0;  // steps acted by the expert branch
  policy::PolicyNet final_policy;

  double updates_per_step() const {
    return env_steps == 0 ? 0.0 : static_cast<double>(learner_updates) / static_cast<double>(env_steps);
  }
};

/// Single-threaded actor/learner alternation gated by the rate limiter. The
/// learner runs whenever the gate allows it; evaluation uses mean actions.
DaggerRun dagger_run(const envs::Environment& env, const experts::Expert& expert, const DaggerConfig& config,
                     const envs::InstanceSet& eval_set, std::uint64_t seed);

struct KickstartConfig {
  double lambda = 0.0;
  double task_weight = 1.0;
  cloning::Method method = cloning::Method::BC;
  cloning::AugmentationSpec aug;
  experts::ActorCriticConfig actor_critic;
  std::uint64_t env_steps = 200'000;
  std::uint64_t eval_every = 5'000;
  policy::PolicyConfig student;

  void validate() const;
};

struct KickstartGradients {
  experts::ActorCriticGradients rl;
  double distillation = 0.0;
};

/// Actor-critic gradients plus lambda * grad of the mean cross-entropy
/// H[pi_E(.|s) || pi(.|s)]. Augmentation only touches the distillation rows;
/// the critic never sees perturbed states.
KickstartGradients kickstart_update(const policy::PolicyNet& policy, const experts::ValueNet& critic,
                                    const experts::Expert& expert, const envs::Environment& env,
                                    const experts::OnPolicyBatch& batch, const KickstartConfig& config, Rng& rng);

struct KickstartRun {
  std::vector<CurveSample> curve;
  double final_validation = 0.0;
  bench::EvalReport final_test;
  policy::PolicyNet final_policy;
};

/// Free-running (no rate limiter). lambda = 0 is the scratch baseline.
KickstartRun kickstart_run(const envs::Environment& env, const experts::Expert& expert,
                           const KickstartConfig& config, const envs::InstanceSet& validation,
                           const envs::InstanceSet& test, std::uint64_t seed);

/// Plain actor-critic with the same seeding, network and evaluation schedule
/// as kickstart_run but no expert anywhere in the loop.
KickstartRun scratch_run(const envs::Environment& env, const KickstartConfig& config,
                         const envs::InstanceSet& validation, const envs::InstanceSet& test, std::uint64_t seed);

}  // namespace apc::online
