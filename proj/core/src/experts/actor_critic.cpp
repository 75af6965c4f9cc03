#include <cmath>
#include <numbers>

#include "apc/actor_critic.hpp"

namespace apc::experts {

ValueNet::ValueNet(const envs::EnvSpec& env, std::vector<std::size_t> torso, std::uint64_t seed)
    : state_dim_(env.state_dim),
      params_(numcore::MlpParams::glorot({env.state_dim, std::move(torso), 1}, derive_seed(seed, "critic"))) {}

Vector ValueNet::forward(const ObsBatch& batch, numcore::ForwardTape* tape) const {
  numcore::check_dim(static_cast<std::size_t>(batch.state.cols()), state_dim_, "critic state channel");
  return numcore::mlp_forward(params_, batch.state, tape).col(0);
}

void ValueNet::backward(const numcore::ForwardTape& tape, const Vector& d_value, std::span<double> grad) const {
  numcore::check_dim(grad.size(), params_.size(), "ValueNet::backward");
  numcore::mlp_backward(params_, tape, Matrix(d_value), grad);
}

ActorCriticGradients actor_critic_gradients(const policy::PolicyNet& policy, const ValueNet& critic,
                                            const OnPolicyBatch& batch, const ActorCriticConfig& config,
                                            double task_weight) {
  const auto n = static_cast<Eigen::Index>(batch.obs.rows());
  numcore::check_dim(static_cast<std::size_t>(batch.returns.size()), static_cast<std::size_t>(n), "returns");
  ActorCriticGradients out;
  out.policy.assign(policy.param_count(), 0.0);
  out.critic.assign(critic.param_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  numcore::ForwardTape critic_tape;
  const Vector values = critic.forward(batch.obs, &critic_tape);
  const Vector residual = values - batch.returns;
  out.critic_loss = 0.5 * residual.squaredNorm() * inv_n;
  critic.backward(critic_tape, residual * inv_n, out.critic);

  policy::PolicyTape tape;
  const policy::BatchHeads heads = policy.forward(batch.obs, &tape);
  const Vector advantage = batch.returns - values;
  const Matrix diff = batch.actions - heads.mean;
  const Matrix var = heads.sigma.array().square();
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);

  Matrix d_mean(n, heads.mean.cols());
  Matrix d_sigma(n, heads.mean.cols());
  double pg = 0.0;
  double ent = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = task_weight * advantage(i) * inv_n;
    double logp = 0.0;
    for (Eigen::Index k = 0; k < heads.mean.cols(); ++k) {
      const double s = heads.sigma(i, k);
      const double d = diff(i, k);
      logp += -0.5 * d * d / var(i, k) - std::log(s) - log_norm;
      ent += 0.5 + log_norm + std::log(s);
      d_mean(i, k) = -w * d / var(i, k);
      d_sigma(i, k) = -w * (d * d / (var(i, k) * s) - 1.0 / s) - config.entropy_bonus * inv_n / s;
    }
    pg -= task_weight * advantage(i) * logp;
  }
  out.mean_entropy = ent * inv_n;
  out.policy_loss = pg * inv_n - config.entropy_bonus * out.mean_entropy;
  policy.backward(tape, heads, d_mean, d_sigma, out.policy);
  return out;
}

ActorCriticLearner::ActorCriticLearner(const envs::Environment& prototype, policy::PolicyNet policy,
                                       const ActorCriticConfig& config, std::uint64_t seed)
    : config_(config),
      policy_(std::move(policy)),
      critic_(prototype.spec(), config.critic_torso, seed),
      policy_flat_(policy_.flat()),
      policy_adam_({config.policy_learning_rate}, policy_.param_count()),
      critic_adam_({config.critic_learning_rate}, critic_.param_count()),
      rng_(derive_seed(seed, "actor-critic-noise")),
      episode_stream_(derive_seed(seed, "actor-critic-episodes")) {
  if (config.num_envs == 0 || config.n_step == 0) throw std::invalid_argument("actor-critic: empty rollout shape");
  for (std::size_t e = 0; e < config.num_envs; ++e) {
    envs_.push_back(prototype.clone());
    current_.push_back(envs_.back()->reset(next_episode_seed()));
    running_return_.push_back(0.0);
  }
}

OnPolicyBatch ActorCriticLearner::collect() {
  const std::size_t envs = envs_.size();
  const std::size_t steps = config_.n_step;
  const std::size_t adim = policy_.action_dim();
  const double gamma = config_.discount;

  // Per (env, t): reward, whether the episode ended by failure (value 0) or by
  // the horizon (bootstrap from the final observation), and that observation.
  std::vector<std::vector<envs::Observation>> obs(envs);
  Matrix actions(static_cast<Eigen::Index>(envs * steps), static_cast<Eigen::Index>(adim));
  std::vector<double> rewards(envs * steps, 0.0);
  std::vector<char> terminal(envs * steps, 0), truncated(envs * steps, 0);
  std::vector<envs::Observation> bootstrap_obs;
  std::vector<std::size_t> bootstrap_slot;
  OnPolicyBatch batch;

  for (std::size_t t = 0; t < steps; ++t) {
    const policy::BatchHeads heads = policy_.forward(ObsBatch::from(std::span<const envs::Observation>(current_)));
    for (std::size_t e = 0; e < envs; ++e) {
      const std::size_t slot = e * steps + t;
      const Vector a = policy::sample_action(heads.row(e), rng_);
      actions.row(static_cast<Eigen::Index>(slot)) = a.transpose();
      obs[e].push_back(current_[e]);
      envs::StepResult r = envs_[e]->step(a);
      rewards[slot] = r.reward;
      running_return_[e] += r.reward;
      ++env_steps_;
      if (r.done) {
        if (r.terminated_early) {
          terminal[slot] = 1;
        } else {
          truncated[slot] = 1;
          bootstrap_obs.push_back(r.observation);
          bootstrap_slot.push_back(slot);
        }
        batch.finished_episode_returns.push_back(running_return_[e]);
        running_return_[e] = 0.0;
        current_[e] = envs_[e]->reset(next_episode_seed());
      } else {
        current_[e] = std::move(r.observation);
        if (t + 1 == steps) {
          bootstrap_obs.push_back(current_[e]);
          bootstrap_slot.push_back(slot);
        }
      }
    }
  }

  std::vector<double> tail(envs * steps, 0.0);
  if (!bootstrap_obs.empty()) {
    const Vector v = critic_.forward(ObsBatch::from(std::span<const envs::Observation>(bootstrap_obs)));
    for (std::size_t k = 0; k < bootstrap_slot.size(); ++k) tail[bootstrap_slot[k]] = v(static_cast<Eigen::Index>(k));
  }

  batch.returns.resize(static_cast<Eigen::Index>(envs * steps));
  for (std::size_t e = 0; e < envs; ++e) {
    double g = 0.0;
    for (std::size_t t = steps; t-- > 0;) {
      const std::size_t slot = e * steps + t;
      if (terminal[slot]) g = rewards[slot];
      else if (truncated[slot] || t + 1 == steps) g = rewards[slot] + gamma * tail[slot];
      else g = rewards[slot] + gamma * g;
      batch.returns(static_cast<Eigen::Index>(slot)) = g;
    }
    for (envs::Observation& o : obs[e]) batch.observations.push_back(std::move(o));
  }
  batch.obs = ObsBatch::from(std::span<const envs::Observation>(batch.observations));
  batch.actions = std::move(actions);
  batch.env_steps = envs * steps;
  return batch;
}

void ActorCriticLearner::apply(std::span<const double> policy_grad, std::span<const double> critic_grad) {
  numcore::adam_step(policy_adam_, policy_flat_, policy_grad);
  policy_.assign(policy_flat_);
  numcore::adam_step(critic_adam_, critic_.flat(), critic_grad);
}

}  // namespace apc::experts
