#include <stdexcept>

#include "apc/online.hpp"

namespace apc::online {

void KickstartConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("kickstart: lambda must be >= 0");
  if (task_weight != 0.0 && task_weight != 1.0) throw std::invalid_argument("kickstart: task_weight must be 0 or 1");
  if (env_steps == 0 || eval_every == 0) throw std::invalid_argument("kickstart: budget and eval period must be positive");
  aug.validate();
}

KickstartGradients kickstart_update(const policy::PolicyNet& policy, const experts::ValueNet& critic,
                                    const experts::Expert& expert, const envs::Environment& env,
                                    const experts::OnPolicyBatch& batch, const KickstartConfig& config, Rng& rng) {
  if (batch.observations.empty()) throw std::invalid_argument("kickstart_update: empty batch");
  KickstartGradients out;
  out.rl = experts::actor_critic_gradients(policy, critic, batch, config.actor_critic, config.task_weight);
  if (config.lambda == 0.0) return out;

  DaggerConfig distill;
  distill.objective = DaggerObjective::AnalyticCe;
  distill.method = config.method;
  distill.aug = config.aug;
  cloning::Minibatch mb;
  mb.observations = batch.observations;
  const cloning::LossResult ce = dagger_update(policy, expert, env, mb, distill, rng);
  out.distillation = ce.loss;
  for (std::size_t k = 0; k < out.rl.policy.size(); ++k) out.rl.policy[k] += config.lambda * ce.grad[k];
  return out;
}

KickstartRun kickstart_run(const envs::Environment& env, const experts::Expert& expert,
                           const KickstartConfig& config, const envs::InstanceSet& validation,
                           const envs::InstanceSet& test, std::uint64_t seed) {
  config.validate();
  // The student seed ignores lambda, so every arm starts from the same network
  // and lambda = 0 reproduces the scratch learner exactly.
  experts::ActorCriticLearner learner(env, policy::PolicyNet(config.student, env.spec(), derive_seed(seed, "student")),
                                      config.actor_critic, seed);
  Rng aug_rng(derive_seed(seed, "augment"));
  KickstartRun run;
  auto record = [&] {
    const bench::EvalReport r = bench::evaluate(learner.policy(), env, test, 0.0, bench::EvalMode::MeanAction);
    run.curve.push_back({learner.env_steps(), r.mean, r.ci_half_width});
  };
  record();
  std::uint64_t next_eval = config.eval_every;
  while (learner.env_steps() < config.env_steps) {
    const experts::OnPolicyBatch batch = learner.collect();
    const KickstartGradients g =
        kickstart_update(learner.policy(), learner.critic(), expert, env, batch, config, aug_rng);
    learner.apply(g.rl.policy, g.rl.critic);
    if (learner.env_steps() >= next_eval) {
      record();
      next_eval += config.eval_every;
    }
  }
  if (run.curve.back().env_step != learner.env_steps()) record();
  run.final_validation = bench::evaluate(learner.policy(), env, validation, 0.0, bench::EvalMode::MeanAction).mean;
  run.final_test = bench::evaluate(learner.policy(), env, test, 0.0, bench::EvalMode::MeanAction);
  run.final_policy = learner.policy();
  return run;
}

KickstartRun scratch_run(const envs::Environment& env, const KickstartConfig& config,
                         const envs::InstanceSet& validation, const envs::InstanceSet& test, std::uint64_t seed) {
  config.validate();
  experts::ActorCriticLearner learner(env, policy::PolicyNet(config.student, env.spec(), derive_seed(seed, "student")),
                                      config.actor_critic, seed);
  KickstartRun run;
  auto record = [&] {
    const bench::EvalReport r = bench::evaluate(learner.policy(), env, test, 0.0, bench::EvalMode::MeanAction);
    run.curve.push_back({learner.env_steps(), r.mean, r.ci_half_width});
  };
  record();
  std::uint64_t next_eval = config.eval_every;
  while (learner.env_steps() < config.env_steps) {
    const experts::OnPolicyBatch batch = learner.collect();
    const experts::ActorCriticGradients g =
        experts::actor_critic_gradients(learner.policy(), learner.critic(), batch, config.actor_critic);
    learner.apply(g.policy, g.critic);
    if (learner.env_steps() >= next_eval) {
      record();
      next_eval += config.eval_every;
    }
  }
  if (run.curve.back().env_step != learner.env_steps()) record();
  run.final_validation = bench::evaluate(learner.policy(), env, validation, 0.0, bench::EvalMode::MeanAction).mean;
  run.final_test = bench::evaluate(learner.policy(), env, test, 0.0, bench::EvalMode::MeanAction);
  run.final_policy = learner.policy();
  return run;
}

}  // namespace apc::online
