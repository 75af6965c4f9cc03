#include <algorithm>
#include <cmath>

#include "apc/envs.hpp"
#include "apc/random.hpp"

namespace apc::envs {

PointMassEnv::PointMassEnv(PointMassConfig config) : config_(config) {
  if (config_.horizon < 1) throw EnvError("PointMassConfig: horizon must be >= 1");
  if (config_.grid_size < 4) throw EnvError("PointMassConfig: grid_size must be >= 4");
  spec_.id = "point_mass";
  spec_.state_dim = 8;
  spec_.common_dim = 4;
  spec_.privileged_dim = 2;
  spec_.action_dim = 2;
  spec_.action_low = Vector::Constant(2, -1.0);
  spec_.action_high = Vector::Constant(2, 1.0);
  spec_.horizon = config_.horizon;
  spec_.discount = 1.0;
  spec_.grid_size = config_.grid_size;
  spec_.reward_bound = 1.0;
  pos_ = vel_ = target_ = Vector::Zero(2);
}

Observation PointMassEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  const double w = config_.spawn_half_width;
  pos_ = Vector(2);
  target_ = Vector(2);
  pos_ << uniform(rng, -w, w), uniform(rng, -w, w);
  do {
    target_ << uniform(rng, -w, w), uniform(rng, -w, w);
  } while ((target_ - pos_).norm() < config_.min_start_distance);
  vel_ = Vector::Zero(2);
  begin_episode();
  return current();
}

void PointMassEnv::set_state(const Vector& position, const Vector& velocity, const Vector& target) {
  numcore::check_dim(static_cast<std::size_t>(position.size()), 2, "PointMassEnv position");
  numcore::check_dim(static_cast<std::size_t>(velocity.size()), 2, "PointMassEnv velocity");
  numcore::check_dim(static_cast<std::size_t>(target.size()), 2, "PointMassEnv target");
  pos_ = position;
  vel_ = velocity;
  target_ = target;
  begin_episode();
}

double PointMassEnv::reward_at(const Vector& position) const {
  return std::max(0.0, 1.0 - (target_ - position).norm() / config_.reward_radius);
}

StepResult PointMassEnv::step(const Vector& action) {
  StepResult out;
  const Vector a = clip_action(action, &out.clipped);
  vel_ = (1.0 - config_.damping) * vel_ + config_.dt * config_.gain * a;
  pos_ += config_.dt * vel_;
  ++t_;
  out.reward = reward_at(pos_);
  const double hw = config_.arena_half_width;
  out.terminated_early = pos_.cwiseAbs().maxCoeff() > hw;
  out.done = out.terminated_early || t_ >= config_.horizon;
  done_ = out.done;
  out.observation = current();
  return out;
}

Matrix PointMassEnv::render(const Vector& position, const Vector& target) const {
  const auto n = static_cast<Eigen::Index>(config_.grid_size);
  const double hw = config_.arena_half_width;
  auto coord = [&](double x) { return (x + hw) / (2.0 * hw) * static_cast<double>(n); };
  auto clampi = [](Eigen::Index v, Eigen::Index lo, Eigen::Index hi) { return std::clamp(v, lo, hi); };

  Matrix grid = Matrix::Zero(n, n);
  // Rows index y, columns index x. The 2x2 target block straddles the cell
  // boundary nearest to the target.
  const auto tc = clampi(static_cast<Eigen::Index>(std::floor(coord(target[0]) - 0.5)), 0, n - 2);
  const auto tr = clampi(static_cast<Eigen::Index>(std::floor(coord(target[1]) - 0.5)), 0, n - 2);
  grid.block(tr, tc, 2, 2).setConstant(1.0);
  const auto ac = clampi(static_cast<Eigen::Index>(std::floor(coord(position[0]))), 0, n - 1);
  const auto ar = clampi(static_cast<Eigen::Index>(std::floor(coord(position[1]))), 0, n - 1);
  grid(ar, ac) = std::max(grid(ar, ac), 0.5);
  return grid;
}

Matrix PointMassEnv::render_grid() const { return render(pos_, target_); }

Observation PointMassEnv::observe(const Vector& common, const Vector& privileged) const {
  numcore::check_dim(static_cast<std::size_t>(common.size()), 4, "PointMassEnv::observe common");
  numcore::check_dim(static_cast<std::size_t>(privileged.size()), 2, "PointMassEnv::observe privileged");
  Observation o;
  o.common = common;
  o.privileged = privileged;
  o.state = Vector(8);
  o.state << common, privileged, privileged - common.head(2);
  o.grid = render(common.head(2), privileged);
  return o;
}

Observation PointMassEnv::current() const {
  Vector common(4);
  common << pos_, vel_;
  return observe(common, target_);
}

}  // namespace apc::envs
