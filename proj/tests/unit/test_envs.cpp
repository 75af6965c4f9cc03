#include <doctest.h>

#include <set>

#include "apc/envs.hpp"

using namespace apc;
using namespace apc::envs;

TEST_SUITE("envs") {
  TEST_CASE("lqr dynamics and cost follow the double integrator") {
    LqrEnv env;
    const LqrConfig& c = env.config();
    CHECK(c.a(0, 1) == doctest::Approx(0.1));
    CHECK(c.b(1, 0) == doctest::Approx(0.1));
    CHECK(c.b(0, 0) == doctest::Approx(0.005));
    CHECK(c.q(1, 1) == doctest::Approx(0.1));
    CHECK(c.r(0, 0) == doctest::Approx(0.1));
    env.reset(3);
    Vector s(4);
    s << 1.0, -0.5, 0.25, 2.0;
    env.set_state(s);
    Vector a(2);
    a << 0.3, -1.0;
    const StepResult r = env.step(a);
    Vector expected(4);
    expected << 1.0 + 0.1 * -0.5 + 0.005 * 0.3, -0.5 + 0.1 * 0.3, 0.25 + 0.1 * 2.0 + 0.005 * -1.0, 2.0 + 0.1 * -1.0;
    CHECK((r.observation.state - expected).norm() < 1e-14);
    const double cost = 1.0 + 0.1 * 0.25 + 0.0625 + 0.1 * 4.0 + 0.1 * (0.09 + 1.0);
    CHECK(r.reward == doctest::Approx(-cost).epsilon(1e-14));
  }

  TEST_CASE("lqr starts at rest inside the box and runs to the horizon") {
    LqrEnv env;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Observation o = env.reset(seed);
      CHECK(o.state(1) == 0.0);
      CHECK(o.state(3) == 0.0);
      CHECK(std::abs(o.state(0)) <= 2.0);
      CHECK(std::abs(o.state(2)) <= 2.0);
    }
    int steps = 0;
    env.reset(1);
    while (!env.done()) {
      env.step(Vector::Zero(2));
      ++steps;
    }
    CHECK(steps == 200);
    CHECK_THROWS_AS(env.step(Vector::Zero(2)), EnvError);
  }

  TEST_CASE("reset is a pure function of the seed") {
    for (const char* id : {"lqr", "point_mass"}) {
      auto a = make_env(id), b = make_env(id);
      CHECK((a->reset(42).state - b->reset(42).state).norm() == 0.0);
      CHECK((a->reset(42).state - a->reset(43).state).norm() > 0.0);
    }
  }

  TEST_CASE("actions are clipped and counted") {
    PointMassEnv env;
    env.reset(1);
    Vector big(2);
    big << 50.0, 0.0;
    const StepResult r = env.step(big);
    CHECK(r.clipped);
    CHECK(env.clip_events() == 1);
  }

  TEST_CASE("point mass reward, observation layout and early termination") {
    PointMassEnv env;
    Vector pos(2), vel(2), target(2);
    pos << 0.1, 0.2;
    vel << 0.0, 0.0;
    target << 0.4, -0.2;
    env.set_state(pos, vel, target);
    const Observation o = env.current();
    CHECK(o.state.size() == 8);
    CHECK(o.common.size() == 4);
    CHECK(o.privileged.size() == 2);
    CHECK(o.state(6) == doctest::Approx(0.3));
    CHECK(o.state(7) == doctest::Approx(-0.4));
    CHECK(env.reward_at(pos) == doctest::Approx(0.5));
    CHECK(env.reward_at(target) == doctest::Approx(1.0));
    Vector far(2);
    far << -0.9, 0.9;
    CHECK(env.reward_at(far) == 0.0);

    vel << 30.0, 0.0;
    env.set_state(pos, vel, target);
    const StepResult r = env.step(Vector::Zero(2));
    CHECK(r.terminated_early);
    CHECK(r.done);
  }

  TEST_CASE("point mass spawns respect the start distance") {
    PointMassEnv env;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Observation o = env.reset(seed);
      CHECK(o.state.tail(2).norm() >= 1.0);
      CHECK(o.common.head(2).cwiseAbs().maxCoeff() <= 0.8);
    }
  }

  TEST_CASE("grid rendering: agent cell and target block") {
    PointMassEnv env;
    Vector pos(2), target(2);
    pos << -0.99, -0.99;
    target << 0.0, 0.0;
    const Matrix g = env.render(pos, target);
    CHECK(g.rows() == 16);
    CHECK(g(0, 0) == 0.5);
    CHECK(g.sum() == doctest::Approx(4.0 + 0.5));
    CHECK(g.block(7, 7, 2, 2).minCoeff() == 1.0);
    pos << 0.01, 0.01;
    CHECK(env.render(pos, target)(8, 8) == 1.0);  // overlap keeps the max
  }

  TEST_CASE("observe rebuilds a consistent observation") {
    PointMassEnv env;
    env.reset(5);
    const Observation o = env.current();
    const Observation r = env.observe(o.common, o.privileged);
    CHECK((r.state - o.state).norm() == 0.0);
    CHECK((r.grid - o.grid).norm() == 0.0);
    CHECK_THROWS(env.observe(Vector::Zero(3), o.privileged));
  }

  TEST_CASE("validation and test instance sets never overlap") {
    const InstanceSet v = make_instance_set(InstanceRole::Validation, 200, 7);
    const InstanceSet t = make_instance_set(InstanceRole::Test, 200, 7);
    std::set<std::uint64_t> seen(v.seeds.begin(), v.seeds.end());
    CHECK(seen.size() == 200);
    for (auto s : t.seeds) CHECK(!seen.count(s));
    CHECK(make_instance_set(InstanceRole::Test, 5, 7).seeds ==
          std::vector<std::uint64_t>(t.seeds.begin(), t.seeds.begin() + 5));
    CHECK_THROWS(make_env("cartpole"));
  }
}
