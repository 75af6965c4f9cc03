#pragma once

// n-step advantage actor-critic: the reinforcement learner behind trained
// experts and behind the task term of kickstarting.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "apc/envs.hpp"
#include "apc/experts.hpp"
#include "apc/numcore.hpp"
#include "apc/policy.hpp"
#include "apc/random.hpp"

namespace apc::experts {

/// State-value critic V(s). It always reads the full state, whatever the
/// policy observes; the critic is discarded after training.
class ValueNet {
 public:
  ValueNet() = default;
  ValueNet(const envs::EnvSpec& env, std::vector<std::size_t> torso, std::uint64_t seed);

  Vector forward(const ObsBatch& batch, numcore::ForwardTape* tape = nullptr) const;
  /// Accumulates dL/dparams given dL/dV per row.
  void backward(const numcore::ForwardTape& tape, const Vector& d_value, std::span<double> grad) const;

  std::span<const double> flat() const { return params_.flat(); }
  std::span<double> flat() { return params_.flat(); }
  std::size_t param_count() const { return params_.size(); }
  bool operator==(const ValueNet& other) const { return params_ == other.params_; }

 private:
  std::size_t state_dim_ = 0;
  numcore::MlpParams params_;
};

/// num_envs x n_step transitions, flattened env-major.
struct OnPolicyBatch {
  std::vector<envs::Observation> observations;
  ObsBatch obs;
  Matrix actions;
  Vector returns;  // n-step bootstrapped targets
  std::uint64_t env_steps = 0;
  std::vector<double> finished_episode_returns;
};

struct ActorCriticGradients {
  std::vector<double> policy;
  std::vector<double> critic;
  double policy_loss = 0.0;
  double critic_loss = 0.0;
  double mean_entropy = 0.0;
};

/// Policy loss: -task_weight * mean(A * log pi(a|s)) - entropy_bonus * mean H;
/// critic loss: 0.5 * mean (V(s) - G)^2 with A = G - V(s) held constant.
ActorCriticGradients actor_critic_gradients(const policy::PolicyNet& policy, const ValueNet& critic,
                                            const OnPolicyBatch& batch, const ActorCriticConfig& config,
                                            double task_weight = 1.0);

/// Owns the policy, critic, optimizers and num_envs running environments.
class ActorCriticLearner {
 public:
  ActorCriticLearner(const envs::Environment& prototype, policy::PolicyNet policy,
                     const ActorCriticConfig& config, std::uint64_t seed);

  /// Steps every environment n_step times with the current policy's native
  /// noise; finished episodes restart on fresh derived seeds.
  OnPolicyBatch collect();
  void apply(std::span<const double> policy_grad, std::span<const double> critic_grad);

  const policy::PolicyNet& policy() const { return policy_; }
  const ValueNet& critic() const { return critic_; }
  std::uint64_t env_steps() const { return env_steps_; }
  const ActorCriticConfig& config() const { return config_; }

 private:
  std::uint64_t next_episode_seed() { return derive_seed(episode_stream_, episodes_started_++); }

  ActorCriticConfig config_;
  policy::PolicyNet policy_;
  ValueNet critic_;
  std::vector<double> policy_flat_;
  numcore::AdamState policy_adam_;
  numcore::AdamState critic_adam_;
  std::vector<std::unique_ptr<envs::Environment>> envs_;
  std::vector<envs::Observation> current_;
  std::vector<double> running_return_;
  Rng rng_;
  std::uint64_t episode_stream_;
  std::uint64_t episodes_started_ = 0;
  std::uint64_t env_steps_ = 0;
};

}  // namespace apc::experts
