#pragma once

// Continuous-control tasks with seeded initial states.
//
// Observations are split into channels: `common` (what every policy may see),
// `privileged` (what only an expert may see), the concatenated full `state`,
// and an optional coarse `grid` image. Environments can rebuild a complete
// observation from (common, privileged), which is how state perturbations stay
// physically consistent.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "apc/numcore.hpp"

namespace apc::envs {

using numcore::Matrix;
using numcore::Vector;

struct Observation {
  Vector state;
  Vector common;
  Vector privileged;
  Matrix grid;  // 0x0 when the environment has no grid channel

  bool has_grid() const { return grid.size() > 0; }
};

struct EnvSpec {
  std::string id;
  std::size_t state_dim = 0;
  std::size_t common_dim = 0;
  std::size_t privileged_dim = 0;
  std::size_t action_dim = 0;
  Vector action_low;
  Vector action_high;
  int horizon = 1;
  double discount = 1.0;
  std::size_t grid_size = 0;  // 0 = no grid channel
  double reward_bound = 0.0;  // |r_t| <= reward_bound for every step
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool terminated_early = false;
  bool clipped = false;
};

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  /// Clips `action` to the bounds; throws EnvError after the episode ended.
  virtual StepResult step(const Vector& action) = 0;
  /// Complete observation for an arbitrary (possibly synthetic) state.
  virtual Observation observe(const Vector& common, const Vector& privileged) const = 0;
  virtual Observation current() const = 0;
  virtual Matrix render_grid() const;
  virtual std::unique_ptr<Environment> clone() const = 0;

  int time_step() const { return t_; }
  bool done() const { return done_; }
  std::size_t clip_events() const { return clip_events_; }

 protected:
  /// Shared bookkeeping for step(): bounds, clip counting, horizon.
  Vector clip_action(const Vector& action, bool* clipped);
  void begin_episode() {
    t_ = 0;
    done_ = false;
  }

  int t_ = 0;
  bool done_ = true;
  std::size_t clip_events_ = 0;
};

struct LqrConfig {
  Matrix a;
  Matrix b;
  Matrix q;
  Matrix r;
  Vector init_mean;
  Vector init_half_width;  // initial state ~ Uniform(mean +- half_width) per coordinate
  double action_limit = 10.0;
  int horizon = 200;

  /// 2-D double integrator: state (x, vx, y, vy), action (ax, ay), dt = 0.1.
  static LqrConfig lqr_2d();
};

/// s' = A s + B a, r = -(s'Qs + a'Ra). No early termination, no grid.
class LqrEnv final : public Environment {
 public:
  explicit LqrEnv(LqrConfig config = LqrConfig::lqr_2d());

  const EnvSpec& spec() const override { return spec_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(const Vector& action) override;
  Observation observe(const Vector& common, const Vector& privileged) const override;
  Observation current() const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<LqrEnv>(*this); }

  const LqrConfig& config() const { return config_; }
  const Vector& state() const { return state_; }
  void set_state(const Vector& state);

 private:
  LqrConfig config_;
  EnvSpec spec_;
  Vector state_;
};

struct PointMassConfig {
  double arena_half_width = 1.0;
  double spawn_half_width = 0.8;
  double min_start_distance = 1.0;
  double dt = 0.1;
  double damping = 0.1;
  double gain = 2.0;
  double reward_radius = 1.0;
  int horizon = 300;
  std::size_t grid_size = 16;
};

/// Planar point mass navigating to a target.
///
/// state = (pos, vel, target, target - pos); common = (pos, vel);
/// privileged = target. Reward is max(0, 1 - |target - pos| / reward_radius),
/// so every step pays in [0, 1]. Leaving the arena ends the episode.
class PointMassEnv final : public Environment {
 public:
  explicit PointMassEnv(PointMassConfig config = {});

  const EnvSpec& spec() const override { return spec_; }
  Observation reset(std::uint64_t seed) override;
  StepResult step(const Vector& action) override;
  Observation observe(const Vector& common, const Vector& privileged) const override;
  Observation current() const override;
  Matrix render_grid() const override;
  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<PointMassEnv>(*this);
  }

  const PointMassConfig& config() const { return config_; }
  void set_state(const Vector& position, const Vector& velocity, const Vector& target);
  double reward_at(const Vector& position) const;

  /// 16x16 image: target as a 2x2 block of 1.0, agent as one 0.5 cell,
  /// overlapping cells take the max.
  Matrix render(const Vector& position, const Vector& target) const;

 private:
  PointMassConfig config_;
  EnvSpec spec_;
  Vector pos_, vel_, target_;
};

enum class InstanceRole { Validation, Test };

struct InstanceSet {
  InstanceRole role = InstanceRole::Validation;
  std::vector<std::uint64_t> seeds;
};

/// Validation seeds come from counters [0, 2^32), test seeds from [2^32, 2^33),
/// so the two roles never overlap for a given master seed.
InstanceSet make_instance_set(InstanceRole role, std::size_t size, std::uint64_t master_seed);

std::unique_ptr<Environment> make_env(const std::string& id);

}  // namespace apc::envs
