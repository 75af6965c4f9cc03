#include <doctest.h>

#include "apc/online.hpp"

using namespace apc;
using namespace apc::online;

namespace {

/// Actor with a constant mean, to tell the mixture branches apart.
class ConstantActor : public policy::Actor {
 public:
  explicit ConstantActor(double v) : v_(v) {}
  policy::BatchHeads heads(const policy::ObsBatch& batch) const override {
    policy::BatchHeads h;
    h.mean = Matrix::Constant(static_cast<Eigen::Index>(batch.rows()), 2, v_);
    h.raw = Matrix::Zero(static_cast<Eigen::Index>(batch.rows()), 2);
    h.sigma = Matrix::Constant(static_cast<Eigen::Index>(batch.rows()), 2, 1e-9);
    return h;
  }

 private:
  double v_;
};

}  // namespace

TEST_SUITE("online") {
  TEST_CASE("mixture picks the student with probability beta") {
    const auto env = envs::make_env("lqr");
    const envs::Observation o = env->reset(1);
    const ConstantActor student(1.0), expert(-1.0);
    Rng rng(3);
    for (double beta : {0.0, 0.3, 1.0}) {
      int hits = 0;
      const int n = 20000;
      for (int i = 0; i < n; ++i) {
        bool used = false;
        const Vector a = mixture_act(student, expert, beta, o, rng, &used);
        CHECK((a(0) > 0) == used);
        hits += used;
      }
      const double p = static_cast<double>(hits) / n;
      CHECK(std::abs(p - beta) <= 5 * std::sqrt(beta * (1 - beta) / n) + 1e-12);
    }
  }

  TEST_CASE("objectives parse and differ") {
    CHECK(parse_objective("logprob_on_mean") == DaggerObjective::LogprobOnMean);
    CHECK(std::string(objective_name(DaggerObjective::AnalyticCe)) == "analytic_ce");
    CHECK_THROWS(parse_objective("kl"));

    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.3);
    const policy::PolicyNet net({}, env->spec(), 2);
    cloning::Minibatch mb;
    for (std::uint64_t s = 0; s < 4; ++s) mb.observations.push_back(env->reset(s));
    DaggerConfig cfg;
    Rng rng(1);
    const double ce = dagger_update(net, expert, *env, mb, cfg, rng).loss;
    cfg.objective = DaggerObjective::LogprobOnMean;
    const double lp = dagger_update(net, expert, *env, mb, cfg, rng).loss;
    // H(p, q) = -log q(mu_p) + sum_k sigma_p^2 / (2 sigma_q^2).
    double gap = 0.0;
    const policy::BatchHeads h = net.forward(policy::ObsBatch::from(std::span<const envs::Observation>(mb.observations)));
    for (Eigen::Index i = 0; i < h.sigma.rows(); ++i)
      for (Eigen::Index k = 0; k < h.sigma.cols(); ++k) gap += 0.09 / (2 * h.sigma(i, k) * h.sigma(i, k)) / 4.0;
    CHECK(ce - lp == doctest::Approx(gap).epsilon(1e-10));
  }

  TEST_CASE("dagger keeps ten learner updates per environment step") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
    const auto eval = envs::make_instance_set(envs::InstanceRole::Test, 3, 1);
    DaggerConfig cfg;
    cfg.env_steps = 300;
    cfg.eval_every = 100;
    cfg.rate.batch_size = 4;
    cfg.learning_rate = 1e-3;
    const DaggerRun run = dagger_run(*env, expert, cfg, eval, 4);
    CHECK(run.env_steps == 300);
    CHECK(run.updates_per_step() == doctest::Approx(10.0).epsilon(0.1));
    CHECK(run.expert_steps == 300);  // beta = 0: the expert always acts
    CHECK(run.curve.size() == 4);
    CHECK(run.curve.front().env_step == 0);
    const DaggerRun again = dagger_run(*env, expert, cfg, eval, 4);
    CHECK(again.final_policy == run.final_policy);
  }

  TEST_CASE("beta = 1 lets the student act") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
    const auto eval = envs::make_instance_set(envs::InstanceRole::Test, 2, 1);
    DaggerConfig cfg;
    cfg.beta = 1.0;
    cfg.env_steps = 50;
    cfg.eval_every = 50;
    cfg.rate.batch_size = 2;
    CHECK(dagger_run(*env, expert, cfg, eval, 1).expert_steps == 0);
    cfg.beta = 1.5;
    CHECK_THROWS(dagger_run(*env, expert, cfg, eval, 1));
  }

  TEST_CASE("kickstarting with lambda = 0 is bit-identical to scratch actor-critic") {
    const auto env = envs::make_env("point_mass");
    const experts::PolicyExpert expert(policy::PolicyNet({}, env->spec(), 99));
    const auto val = envs::make_instance_set(envs::InstanceRole::Validation, 3, 1);
    const auto test = envs::make_instance_set(envs::InstanceRole::Test, 3, 1);
    KickstartConfig cfg;
    cfg.env_steps = 800;
    cfg.eval_every = 400;
    cfg.actor_critic.policy_learning_rate = cfg.actor_critic.critic_learning_rate = 1e-3;
    const KickstartRun k = kickstart_run(*env, expert, cfg, val, test, 12);
    const KickstartRun s = scratch_run(*env, cfg, val, test, 12);
    CHECK(k.final_policy == s.final_policy);
    REQUIRE(k.curve.size() == s.curve.size());
    for (std::size_t i = 0; i < k.curve.size(); ++i) CHECK(k.curve[i].mean == s.curve[i].mean);
    cfg.lambda = 1.0;
    const KickstartRun d = kickstart_run(*env, expert, cfg, val, test, 12);
    CHECK(!(d.final_policy == s.final_policy));
  }

  TEST_CASE("distillation gradient is lambda times the cross-entropy gradient") {
    const auto env = envs::make_env("point_mass");
    const experts::PolicyExpert expert(policy::PolicyNet({}, env->spec(), 5));
    experts::ActorCriticConfig ac;
    ac.num_envs = 2;
    experts::ActorCriticLearner learner(*env, policy::PolicyNet({}, env->spec(), 6), ac, 1);
    const experts::OnPolicyBatch batch = learner.collect();
    KickstartConfig cfg;
    cfg.actor_critic = ac;
    Rng rng(1);
    const auto base = kickstart_update(learner.policy(), learner.critic(), expert, *env, batch, cfg, rng);
    cfg.lambda = 0.5;
    const auto mixed = kickstart_update(learner.policy(), learner.critic(), expert, *env, batch, cfg, rng);
    cloning::Minibatch mb;
    mb.observations = batch.observations;
    DaggerConfig dc;
    const cloning::LossResult ce = dagger_update(learner.policy(), expert, *env, mb, dc, rng);
    for (std::size_t k = 0; k < ce.grad.size(); ++k) {
      CHECK(mixed.rl.policy[k] == doctest::Approx(base.rl.policy[k] + 0.5 * ce.grad[k]).epsilon(1e-10));
    }
    CHECK(mixed.distillation == doctest::Approx(ce.loss));
    cfg.task_weight = 0.0;
    const auto pure = kickstart_update(learner.policy(), learner.critic(), expert, *env, batch, cfg, rng);
    cfg.lambda = 0.0;
    const auto entropy_only = kickstart_update(learner.policy(), learner.critic(), expert, *env, batch, cfg, rng);
    for (std::size_t k = 0; k < ce.grad.size(); ++k) {
      CHECK(pure.rl.policy[k] == doctest::Approx(entropy_only.rl.policy[k] + 0.5 * ce.grad[k]).epsilon(1e-10));
    }
  }
}
