#include <algorithm>
#include <cmath>
#include <numeric>

#include "apc/actor_critic.hpp"
#include "apc/data.hpp"

namespace apc::experts {

namespace {

double validation_mean(const policy::PolicyNet& net, const envs::Environment& env,
                       const std::vector<std::uint64_t>& seeds) {
  const std::vector<double> r = data::episode_returns(net, env, seeds, policy::NoiseOverride::fixed(0.0));
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

}  // namespace

TrainedExperts train_expert(const envs::Environment& env, const std::vector<Tier>& tiers,
                            const ExpertTrainingConfig& config, std::uint64_t seed) {
  if (config.eval_every_env_steps == 0) throw std::invalid_argument("train_expert: eval_every must be > 0");
  policy::PolicyConfig pc;
  pc.observation = policy::ObservationSpec::full_state();
  pc.torso = config.actor_critic.policy_torso;
  ActorCriticLearner learner(env, policy::PolicyNet(pc, env.spec(), derive_seed(seed, "expert-policy")),
                             config.actor_critic, seed);
  const std::vector<std::uint64_t> seeds =
      envs::make_instance_set(envs::InstanceRole::Validation, config.validation_size, seed).seeds;

  TrainedExperts out;
  auto checkpoint = [&] {
    ExpertCheckpoint c;
    c.env_steps = learner.env_steps();
    c.validation_mean = validation_mean(learner.policy(), env, seeds);
    c.params = learner.policy().flat();
    out.history.push_back(std::move(c));
  };
  checkpoint();
  std::uint64_t next_eval = config.eval_every_env_steps;
  while (learner.env_steps() < config.total_env_steps) {
    const OnPolicyBatch batch = learner.collect();
    const ActorCriticGradients g = actor_critic_gradients(learner.policy(), learner.critic(), batch, config.actor_critic);
    learner.apply(g.policy, g.critic);
    if (learner.env_steps() >= next_eval) {
      checkpoint();
      next_eval += config.eval_every_env_steps;
    }
  }

  out.converged = std::max_element(out.history.begin(), out.history.end(), [](const auto& a, const auto& b) {
                    return a.validation_mean < b.validation_mean;
                  })->validation_mean;

  for (Tier tier : tiers) {
    const double fraction = tier_fraction(tier);
    if (out.converged <= 0.0) {
      out.failures.push_back(std::string(tier_name(tier)) + ": converged validation return is not positive");
      continue;
    }
    const auto hit = std::find_if(out.history.begin(), out.history.end(), [&](const ExpertCheckpoint& c) {
      return std::abs(c.validation_mean / out.converged - fraction) <= config.tier_tolerance * fraction;
    });
    if (hit == out.history.end()) {
      out.failures.push_back(std::string(tier_name(tier)) + ": no checkpoint within tolerance");
      continue;
    }
    ExpertTier t;
    t.tier = tier;
    t.target_fraction = fraction;
    t.measured = hit->validation_mean;
    t.measured_fraction = hit->validation_mean / out.converged;
    t.env_steps = hit->env_steps;
    t.policy = learner.policy();
    t.policy.assign(hit->params);
    out.tiers.push_back(std::move(t));
  }
  return out;
}

}  // namespace apc::experts
