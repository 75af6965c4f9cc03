#include <stdexcept>

#include "apc/online.hpp"

namespace apc::online {

Vector mixture_act(const policy::Actor& student_frozen, const policy::Actor& expert, double beta,
                   const envs::Observation& obs, Rng& rng, bool* used_student) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("mixture_act: beta must be in [0, 1]");
  const bool student = std::generate_canonical<double, 53>(rng) < beta;
  if (used_student) *used_student = student;
  return policy::sample_action((student ? student_frozen : expert).head(obs), rng);
}

const char* objective_name(DaggerObjective objective) {
  return objective == DaggerObjective::AnalyticCe ? "analytic_ce" : "logprob_on_mean";
}

DaggerObjective parse_objective(const std::string& text) {
  if (text == "analytic_ce") return DaggerObjective::AnalyticCe;
  if (text == "logprob_on_mean") return DaggerObjective::LogprobOnMean;
  throw std::invalid_argument("unknown DAgger objective: " + text);
}

void DaggerConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("dagger: beta must be in [0, 1]");
  if (!(learning_rate > 0.0) || env_steps == 0 || eval_every == 0 || replay_capacity == 0 || rate.batch_size == 0) {
    throw std::invalid_argument("dagger: learning rate, budget, eval period, capacity and batch must be positive");
  }
  aug.validate();
}

cloning::LossResult dagger_update(const policy::PolicyNet& policy, const experts::Expert& expert,
                                  const envs::Environment& env, const cloning::Minibatch& batch,
                                  const DaggerConfig& config, Rng& rng) {
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("dagger_update: empty batch");
  const cloning::AugmentationSpec aug =
      cloning::effective_augmentation(config.method, cloning::ImageVariant::Plain, config.aug);
  const bool augmented = aug.active();

  std::vector<envs::Observation> rows(batch.observations);
  std::size_t extra = 0;
  if (augmented) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < aug.m; ++j) {
        rows.push_back(cloning::perturb_state(batch.observations[i], env, aug.sigma_s, rng, aug.perturb_common,
                                              aug.perturb_privileged));
      }
    }
    extra = n * aug.m;
  }
  const auto total = static_cast<Eigen::Index>(rows.size());
  const policy::ObsBatch obs = policy::ObsBatch::from(std::span<const envs::Observation>(rows));

  // Expert targets: at every row for APC, at the originating clean state for
  // Naive ABC ("keep the same action").
  policy::BatchHeads targets;
  if (aug.relabel || !augmented) {
    targets = expert.heads(obs);
  } else {
    const policy::BatchHeads clean = expert.heads(policy::ObsBatch::from(std::span<const envs::Observation>(batch.observations)));
    targets.mean.resize(total, clean.mean.cols());
    targets.sigma.resize(total, clean.sigma.cols());
    targets.mean.topRows(static_cast<Eigen::Index>(n)) = clean.mean;
    targets.sigma.topRows(static_cast<Eigen::Index>(n)) = clean.sigma;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < aug.m; ++j) {
        const auto r = static_cast<Eigen::Index>(n + i * aug.m + j);
        targets.mean.row(r) = clean.mean.row(static_cast<Eigen::Index>(i));
        targets.sigma.row(r) = clean.sigma.row(static_cast<Eigen::Index>(i));
      }
    }
  }

  Vector weights(total);
  weights.head(static_cast<Eigen::Index>(n)).setConstant(1.0 / static_cast<double>(n));
  if (extra > 0) weights.tail(static_cast<Eigen::Index>(extra)).setConstant(1.0 / static_cast<double>(extra));
  const Matrix sigma = config.objective == DaggerObjective::AnalyticCe ? targets.sigma : Matrix();
  return cloning::weighted_cross_entropy(policy, obs, targets.mean, sigma, weights);
}

DaggerRun dagger_run(const envs::Environment& env, const experts::Expert& expert, const DaggerConfig& config,
                     const envs::InstanceSet& eval_set, std::uint64_t seed) {
  config.validate();
  policy::PolicyNet student(config.student, env.spec(), derive_seed(seed, "student"));
  policy::PolicyNet frozen = student;
  std::vector<double> params = student.flat();
  numcore::AdamState adam({config.learning_rate}, params.size());
  data::ReplayBuffer replay(config.replay_capacity);
  Rng act_rng(derive_seed(seed, "acting"));
  Rng sample_rng(derive_seed(seed, "replay-sample"));
  Rng aug_rng(derive_seed(seed, "augment"));
  const std::uint64_t episode_stream = derive_seed(seed, "episodes");
  std::uint64_t episodes = 0;

  std::unique_ptr<envs::Environment> actor_env = env.clone();
  envs::Observation obs = actor_env->reset(derive_seed(episode_stream, episodes++));
  std::vector<data::Step> pending;

  DaggerRun run;
  data::RateCounters counters;
  auto record = [&] {
    const bench::EvalReport r = bench::evaluate(student, env, eval_set, 0.0, bench::EvalMode::MeanAction);
    run.curve.push_back({run.env_steps, r.mean, r.ci_half_width});
  };
  auto flush = [&] {
    if (pending.empty()) return;
    data::Trajectory t;
    t.steps = std::move(pending);
    pending.clear();
    for (data::Chunk& c : data::chunk_trajectories(std::span<const data::Trajectory>(&t, 1))) replay.insert(std::move(c));
    counters.inserted_timesteps = replay.inserted_timesteps();
  };

  record();
  std::uint64_t next_eval = config.eval_every;
  while (true) {
    const data::GateDecision gate = data::rate_limiter_gate(counters, config.rate);
    const bool budget_left = run.env_steps < config.env_steps;
    const bool learn = gate != data::GateDecision::ActorOnly && replay.size() > 0;
    if (learn) {
      std::vector<std::shared_ptr<const data::Chunk>> sampled = replay.sample(config.rate.batch_size, sample_rng);
      std::vector<const data::Chunk*> chunks;
      for (const auto& c : sampled) chunks.push_back(c.get());
      const cloning::LossResult loss =
          dagger_update(student, expert, env, cloning::Minibatch::from_chunks(chunks), config, aug_rng);
      numcore::adam_step(adam, params, loss.grad);
      student.assign(params);
      frozen = student;  // acting snapshot, refreshed after every learner step
      ++counters.learner_updates;
      ++run.learner_updates;
      continue;
    }
    if (!budget_left) {
      if (!pending.empty()) {
        flush();
        continue;
      }
      break;
    }
    bool used_student = false;
    const Vector action = mixture_act(frozen, expert, config.beta, obs, act_rng, &used_student);
    if (!used_student) ++run.expert_steps;
    envs::StepResult result = actor_env->step(action);
    data::Step step;
    step.action = action;
    step.expert_mean = expert.head(obs).mean;
    step.observation = std::move(obs);
    step.reward = result.reward;
    step.done = result.done;
    pending.push_back(std::move(step));
    ++run.env_steps;
    if (result.done) {
      flush();
      obs = actor_env->reset(derive_seed(episode_stream, episodes++));
    } else {
      obs = std::move(result.observation);
      if (pending.size() == data::kChunkLength) flush();
    }
    if (run.env_steps >= next_eval) {
      record();
      next_eval += config.eval_every;
    }
  }
  if (run.curve.back().env_step != run.env_steps) record();
  run.final_policy = student;
  return run;
}

}  // namespace apc::online
