#pragma once

// Rollouts, 10-step chunks, frozen expert datasets, and the replay machinery
// (FIFO buffer plus acting/learning rate limiter) used by the online loops.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "apc/envs.hpp"
#include "apc/experts.hpp"
#include "apc/policy.hpp"
#include "apc/random.hpp"

namespace apc::data {

using envs::Observation;
using numcore::Matrix;
using numcore::Vector;

inline constexpr std::size_t kChunkLength = 10;

struct Step {
  Observation observation;
  Vector action;        // executed (noisy, unclipped) action
  Vector expert_mean;   // regression target mu_E(s); empty when no expert labelled it
  double reward = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Step> steps;
  std::uint64_t seed = 0;
  std::string source;
  bool terminated_early = false;
  std::size_t clip_events = 0;

  std::size_t size() const { return steps.size(); }
  double total_reward() const;
};

struct RolloutOptions {
  policy::NoiseOverride noise;
  /// When set, every step also records this actor's mean as the target.
  const policy::Actor* labeller = nullptr;
  /// Truncate episodes after this many steps (0 = environment horizon).
  std::size_t max_steps = 0;
  std::string source = "policy";
};

/// One episode per seed, all stepped in lockstep so the actor sees one batch
/// per time step. Action noise for seed s is drawn from Rng(derive_seed(s,
/// "action-noise")), so runs are reproducible per seed.
std::vector<Trajectory> rollouts(const policy::Actor& actor, const envs::Environment& prototype,
                                 std::span<const std::uint64_t> seeds, const RolloutOptions& options);

Trajectory rollout(const policy::Actor& actor, const envs::Environment& prototype, std::uint64_t seed,
                   const RolloutOptions& options);

/// Undiscounted returns only; same noise streams as rollouts().
std::vector<double> episode_returns(const policy::Actor& actor, const envs::Environment& prototype,
                                    std::span<const std::uint64_t> seeds, policy::NoiseOverride noise);

/// Exactly kChunkLength slots; the first `valid` are real steps.
struct Chunk {
  std::vector<Observation> observations;
  Matrix actions;  // kChunkLength x action_dim
  Matrix targets;  // kChunkLength x action_dim (expert means)
  std::size_t valid = 0;
};

/// Non-overlapping windows; a trailing partial window becomes a masked chunk.
std::vector<Chunk> chunk_trajectories(std::span<const Trajectory> trajectories,
                                      std::size_t length = kChunkLength);

enum class DatasetMode { Full, Short };

struct DatasetSpec {
  std::size_t n_trajectories = 1;
  double expert_noise = 0.0;  // sigma_E: 0 deterministic, 0.2 low, 0.5 medium, 1.0 high
  DatasetMode mode = DatasetMode::Full;
  std::size_t short_length = 0;  // 0 = 20% of the horizon

  std::string to_json() const;
};

struct ExpertDataset {
  DatasetSpec spec;
  std::string env_id;
  std::vector<Chunk> chunks;
  std::size_t total_steps = 0;

  /// FNV-1a over every stored number; identical content gives identical hashes.
  std::uint64_t content_hash() const;
};

/// Noisy expert rollouts (sigma_E) on seeds derived from `seed`, labelled with
/// the expert mean. Short mode keeps one full trajectory and n-1 prefixes.
ExpertDataset build_dataset(const experts::Expert& expert, const envs::Environment& env,
                            const DatasetSpec& spec, std::uint64_t seed);

/// Header: magic "APCDATA1", uint64 LE header length, JSON {spec, env_id,
/// action_dim, common_dim, privileged_dim, chunk_count}. Body per chunk: uint64
/// valid count, then per valid step common | privileged | action | target as
/// float64 LE. Grids are re-rendered by `env` on load.
void save_dataset(const std::filesystem::path& path, const ExpertDataset& dataset);
ExpertDataset load_dataset(const std::filesystem::path& path, const envs::Environment& env);

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded FIFO of chunks with uniform sampling with replacement. One writer
/// and one reader may use it concurrently.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void insert(Chunk chunk);
  std::vector<std::shared_ptr<const Chunk>> sample(std::size_t batch, Rng& rng);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted_chunks() const;
  std::uint64_t inserted_timesteps() const;
  std::uint64_t sampled_chunks() const;
  std::vector<std::shared_ptr<const Chunk>> contents() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<std::shared_ptr<const Chunk>> items_;
  std::uint64_t inserted_chunks_ = 0;
  std::uint64_t inserted_timesteps_ = 0;
  std::uint64_t sampled_chunks_ = 0;
};

/// Learner updates per inserted timestep are pinned to `updates_per_timestep`.
/// In chunk-item terms the samples-per-insert ratio is T * B * updates.
struct RateLimiterConfig {
  double updates_per_timestep = 10.0;
  std::size_t batch_size = 32;
  std::size_t chunk_length = kChunkLength;
  /// How far (in learner updates) the learner may lag before the actor blocks.
  double error_buffer = 100.0;

  double samples_per_insert() const {
    return static_cast<double>(chunk_length * batch_size) * updates_per_timestep;
  }
};

struct RateCounters {
  std::uint64_t inserted_timesteps = 0;
  std::uint64_t learner_updates = 0;
};

enum class GateDecision { ActorOnly, LearnerOnly, Both };

GateDecision rate_limiter_gate(const RateCounters& counters, const RateLimiterConfig& config);

}  // namespace apc::data
