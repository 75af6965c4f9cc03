#include <numeric>

#include "apc/data.hpp"

namespace apc::data {

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const Step& s : steps) total += s.reward;
  return total;
}

namespace {

struct Episode {
  std::unique_ptr<envs::Environment> env;
  Observation obs;
  Rng noise;
  double total = 0.0;
  bool active = true;
  Trajectory trajectory;
};

std::vector<Episode> run(const policy::Actor& actor, const envs::Environment& prototype,
                         std::span<const std::uint64_t> seeds, const RolloutOptions& options,
                         bool record) {
  std::vector<Episode> episodes;
  episodes.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    Episode e;
    e.env = prototype.clone();
    e.obs = e.env->reset(seed);
    e.noise = Rng(derive_seed(seed, "action-noise"));
    e.trajectory.seed = seed;
    e.trajectory.source = options.source;
    episodes.push_back(std::move(e));
  }
  const std::size_t limit = options.max_steps > 0
                                ? options.max_steps
                                : static_cast<std::size_t>(prototype.spec().horizon);

  std::vector<std::size_t> live(episodes.size());
  std::iota(live.begin(), live.end(), 0);
  for (std::size_t t = 0; t < limit && !live.empty(); ++t) {
    std::vector<const Observation*> batch;
    batch.reserve(live.size());
    for (std::size_t i : live) batch.push_back(&episodes[i].obs);
    const policy::ObsBatch obs_batch = policy::ObsBatch::from(batch);
    const policy::BatchHeads heads = actor.heads(obs_batch);
    policy::BatchHeads labels;
    if (record && options.labeller != nullptr) {
      labels = options.labeller == &actor ? heads : options.labeller->heads(obs_batch);
    }

    std::vector<std::size_t> still_live;
    for (std::size_t k = 0; k < live.size(); ++k) {
      Episode& e = episodes[live[k]];
      const policy::GaussianHead head = options.noise.apply(heads.row(k));
      const Vector action = policy::sample_action(head, e.noise);
      const envs::StepResult result = e.env->step(action);
      e.total += result.reward;
      const bool truncated = t + 1 >= limit;
      if (record) {
        Step step;
        step.observation = std::move(e.obs);
        step.action = action;
        if (options.labeller != nullptr) step.expert_mean = labels.mean.row(static_cast<Eigen::Index>(k)).transpose();
        step.reward = result.reward;
        step.done = result.done || truncated;
        e.trajectory.steps.push_back(std::move(step));
        e.trajectory.terminated_early = result.terminated_early;
      }
      e.obs = result.observation;
      if (result.done || truncated) {
        e.active = false;
        e.trajectory.clip_events = e.env->clip_events();
      } else {
        still_live.push_back(live[k]);
      }
    }
    live = std::move(still_live);
  }
  return episodes;
}

}  // namespace

std::vector<Trajectory> rollouts(const policy::Actor& actor, const envs::Environment& prototype,
                                 std::span<const std::uint64_t> seeds, const RolloutOptions& options) {
  std::vector<Episode> episodes = run(actor, prototype, seeds, options, true);
  std::vector<Trajectory> out;
  out.reserve(episodes.size());
  for (Episode& e : episodes) out.push_back(std::move(e.trajectory));
  return out;
}

Trajectory rollout(const policy::Actor& actor, const envs::Environment& prototype, std::uint64_t seed,
                   const RolloutOptions& options) {
  return std::move(rollouts(actor, prototype, std::span<const std::uint64_t>(&seed, 1), options).front());
}

std::vector<double> episode_returns(const policy::Actor& actor, const envs::Environment& prototype,
                                    std::span<const std::uint64_t> seeds, policy::NoiseOverride noise) {
  RolloutOptions options;
  options.noise = noise;
  std::vector<Episode> episodes = run(actor, prototype, seeds, options, false);
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const Episode& e : episodes) out.push_back(e.total);
  return out;
}

std::vector<Chunk> chunk_trajectories(std::span<const Trajectory> trajectories, std::size_t length) {
  if (length == 0) throw std::invalid_argument("chunk_trajectories: length must be >= 1");
  std::vector<Chunk> chunks;
  for (const Trajectory& traj : trajectories) {
    if (traj.steps.empty()) continue;
    const auto adim = traj.steps.front().action.size();
    for (std::size_t start = 0; start < traj.steps.size(); start += length) {
      Chunk c;
      c.valid = std::min(length, traj.steps.size() - start);
      c.actions = Matrix::Zero(static_cast<Eigen::Index>(length), adim);
      c.targets = Matrix::Zero(static_cast<Eigen::Index>(length), adim);
      c.observations.reserve(length);
      for (std::size_t i = 0; i < length; ++i) {
        if (i < c.valid) {
          const Step& s = traj.steps[start + i];
          c.observations.push_back(s.observation);
          c.actions.row(static_cast<Eigen::Index>(i)) = s.action.transpose();
          if (s.expert_mean.size() == adim) c.targets.row(static_cast<Eigen::Index>(i)) = s.expert_mean.transpose();
        } else {
          // Padding slots repeat the last valid observation; the mask hides them.
          c.observations.push_back(c.observations.back());
        }
      }
      chunks.push_back(std::move(c));
    }
  }
  return chunks;
}

}  // namespace apc::data
