#include <algorithm>

#include "apc/envs.hpp"
#include "apc/random.hpp"

namespace apc::envs {

Matrix Environment::render_grid() const {
  throw EnvError(spec().id + ": environment has no grid channel");
}

Vector Environment::clip_action(const Vector& action, bool* clipped) {
  const EnvSpec& s = spec();
  numcore::check_dim(static_cast<std::size_t>(action.size()), s.action_dim, "step action");
  numcore::check_finite(std::span<const double>(action.data(), action.size()), "step action");
  if (done_) throw EnvError(s.id + ": step() after episode end");
  Vector out = action.cwiseMax(s.action_low).cwiseMin(s.action_high);
  *clipped = (out.array() != action.array()).any();
  if (*clipped) ++clip_events_;
  return out;
}

LqrConfig LqrConfig::lqr_2d() {
  constexpr double dt = 0.1;
  LqrConfig c;
  c.a = Matrix::Identity(4, 4);
  c.a(0, 1) = dt;
  c.a(2, 3) = dt;
  c.b = Matrix::Zero(4, 2);
  c.b(0, 0) = 0.5 * dt * dt;
  c.b(1, 0) = dt;
  c.b(2, 1) = 0.5 * dt * dt;
  c.b(3, 1) = dt;
  c.q = Vector((Eigen::Vector4d() << 1.0, 0.1, 1.0, 0.1).finished()).asDiagonal();
  c.r = 0.1 * Matrix::Identity(2, 2);
  c.init_mean = Vector::Zero(4);
  c.init_half_width = (Eigen::Vector4d() << 2.0, 0.0, 2.0, 0.0).finished();
  c.action_limit = 10.0;
  c.horizon = 200;
  return c;
}

LqrEnv::LqrEnv(LqrConfig config) : config_(std::move(config)) {
  const auto n = static_cast<std::size_t>(config_.a.rows());
  const auto m = static_cast<std::size_t>(config_.b.cols());
  numcore::check_dim(static_cast<std::size_t>(config_.a.cols()), n, "LqrConfig A");
  numcore::check_dim(static_cast<std::size_t>(config_.b.rows()), n, "LqrConfig B");
  numcore::check_dim(static_cast<std::size_t>(config_.q.rows()), n, "LqrConfig Q");
  numcore::check_dim(static_cast<std::size_t>(config_.r.rows()), m, "LqrConfig R");
  numcore::check_dim(static_cast<std::size_t>(config_.init_mean.size()), n, "LqrConfig init_mean");
  numcore::check_dim(static_cast<std::size_t>(config_.init_half_width.size()), n,
                     "LqrConfig init_half_width");
  if (config_.horizon < 1) throw EnvError("LqrConfig: horizon must be >= 1");
  spec_.id = "lqr";
  spec_.state_dim = n;
  spec_.common_dim = n;
  spec_.privileged_dim = 0;
  spec_.action_dim = m;
  spec_.action_low = Vector::Constant(static_cast<Eigen::Index>(m), -config_.action_limit);
  spec_.action_high = Vector::Constant(static_cast<Eigen::Index>(m), config_.action_limit);
  spec_.horizon = config_.horizon;
  spec_.discount = 1.0;
  // Unbounded dynamics admit no a-priori per-step bound; the cost is reported
  // as the bound at the edge of the initial box with saturated actions.
  const Vector corner = config_.init_mean.cwiseAbs() + config_.init_half_width;
  const Vector a_max = spec_.action_high.cwiseAbs();
  spec_.reward_bound = corner.dot(config_.q * corner) + a_max.dot(config_.r * a_max);
  state_ = Vector::Zero(static_cast<Eigen::Index>(n));
}

Observation LqrEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  state_.resize(config_.init_mean.size());
  for (Eigen::Index i = 0; i < state_.size(); ++i) {
    const double w = config_.init_half_width[i];
    state_[i] = config_.init_mean[i] + (w > 0.0 ? uniform(rng, -w, w) : 0.0);
  }
  begin_episode();
  return current();
}

void LqrEnv::set_state(const Vector& state) {
  numcore::check_dim(static_cast<std::size_t>(state.size()), spec_.state_dim, "LqrEnv::set_state");
  state_ = state;
  begin_episode();
}

StepResult LqrEnv::step(const Vector& action) {
  StepResult out;
  const Vector a = clip_action(action, &out.clipped);
  out.reward = -(state_.dot(config_.q * state_) + a.dot(config_.r * a));
  state_ = config_.a * state_ + config_.b * a;
  ++t_;
  out.done = t_ >= config_.horizon;
  done_ = out.done;
  out.observation = current();
  return out;
}

Observation LqrEnv::observe(const Vector& common, const Vector& privileged) const {
  numcore::check_dim(static_cast<std::size_t>(common.size()), spec_.common_dim, "LqrEnv::observe");
  numcore::check_dim(static_cast<std::size_t>(privileged.size()), 0, "LqrEnv::observe privileged");
  Observation o;
  o.state = common;
  o.common = common;
  o.privileged = Vector(0);
  return o;
}

Observation LqrEnv::current() const { return observe(state_, Vector(0)); }

}  // namespace apc::envs
