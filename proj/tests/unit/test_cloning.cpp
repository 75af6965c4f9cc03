#include <doctest.h>

#include <map>

#include "apc/cloning.hpp"
#include "oracles.hpp"

using namespace apc;
using namespace apc::cloning;

namespace {

Minibatch lqr_batch(const experts::Expert& expert, const envs::Environment& env, std::size_t n, Rng& rng) {
  Minibatch b;
  for (std::size_t i = 0; i < n; ++i) {
    Vector s(4);
    for (int k = 0; k < 4; ++k) s(k) = uniform(rng, -2.0, 2.0);
    b.observations.push_back(env.observe(s, Vector(0)));
  }
  b.targets = expert.heads(policy::ObsBatch::from(std::span<const envs::Observation>(b.observations))).mean;
  return b;
}

}  // namespace

TEST_SUITE("cloning") {
  TEST_CASE("state perturbation has the requested scale and leaves sigma 0 untouched") {
    const auto env = envs::make_env("point_mass");
    Rng rng(1);
    const envs::Observation o = env->reset(2);
    CHECK((perturb_state(o, *env, 0.0, rng).state - o.state).norm() == 0.0);
    const int n = 20000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const envs::Observation p = perturb_state(o, *env, 0.3, rng);
      const double d = p.common(0) - o.common(0);
      s1 += d;
      s2 += d * d;
      CHECK(p.state(6) == doctest::Approx(p.privileged(0) - p.common(0)));
    }
    CHECK(std::abs(s1 / n) < 5 * 0.3 / std::sqrt(n));
    CHECK(std::sqrt(s2 / n) == doctest::Approx(0.3).epsilon(0.02));
    const envs::Observation only_common = perturb_state(o, *env, 0.3, rng, true, false);
    CHECK((only_common.privileged - o.privileged).norm() == 0.0);
  }

  TEST_CASE("grid shift zero-fills and covers the lattice uniformly") {
    Matrix g = Matrix::Zero(6, 6);
    g(2, 3) = 1.0;
    const Matrix s = shift_grid(g, 1, -2);
    CHECK(s(0, 4) == 1.0);
    CHECK(s.sum() == 1.0);
    CHECK(shift_grid(g, 5, 0).sum() == 0.0);
    Rng rng(3);
    std::map<std::pair<int, int>, int> seen;
    Matrix dot = Matrix::Zero(9, 9);
    dot(4, 4) = 1.0;
    for (int i = 0; i < 4500; ++i) {
      const Matrix r = grid_random_shift(dot, 1, rng);
      Eigen::Index row, col;
      r.maxCoeff(&row, &col);
      seen[{static_cast<int>(row) - 4, static_cast<int>(col) - 4}]++;
    }
    CHECK(seen.size() == 9);
    for (const auto& [k, c] : seen) CHECK(std::abs(c - 500) < 5 * std::sqrt(500.0));
    CHECK_THROWS(grid_random_shift(Matrix::Zero(4, 4), 2, rng));
  }

  TEST_CASE("APC at sigma_s = 0 is exactly twice BC") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
      const Minibatch b = lqr_batch(expert, *env, 7, rng);
      const policy::PolicyNet net({}, env->spec(), static_cast<std::uint64_t>(trial));
      AugmentationSpec aug;
      aug.sigma_s = 0.0;
      aug.m = 3;
      const LossResult apc = apc_minibatch_loss(net, expert, *env, b, aug, rng);
      const LossResult bc = bc_loss(net, b);
      CHECK(std::abs(apc.loss - 2 * bc.loss) <= 1e-12 * std::abs(bc.loss));
      for (std::size_t k = 0; k < bc.grad.size(); ++k) CHECK(std::abs(apc.grad[k] - 2 * bc.grad[k]) <= 1e-12 * std::max(1.0, std::abs(bc.grad[k])));
    }
  }

  TEST_CASE("APC relabels with the expert at the perturbed state") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
    Rng rng(5);
    const Minibatch b = lqr_batch(expert, *env, 4, rng);
    AugmentationSpec aug;
    aug.sigma_s = 0.5;
    aug.m = 6;
    const Minibatch apc = augment(expert, *env, b, aug, rng);
    CHECK(apc.size() == 24);
    for (std::size_t r = 0; r < apc.size(); ++r) {
      const Vector expected = -expert.gain() * apc.observations[r].state;
      CHECK((apc.targets.row(static_cast<Eigen::Index>(r)).transpose() - expected).norm() < 1e-12);
    }
    aug.relabel = false;
    const Minibatch naive = augment(expert, *env, b, aug, rng);
    for (std::size_t r = 0; r < naive.size(); ++r) {
      CHECK((naive.targets.row(static_cast<Eigen::Index>(r)) - b.targets.row(static_cast<Eigen::Index>(r / 6))).norm() ==
            0.0);
    }
  }

  TEST_CASE("Naive ABC and APC losses differ on nonzero states") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
    Rng rng(6);
    const Minibatch b = lqr_batch(expert, *env, 5, rng);
    const policy::PolicyNet net({}, env->spec(), 1);
    AugmentationSpec aug;
    aug.sigma_s = 0.1;
    Rng r1(9), r2(9);
    const LossResult apc = apc_minibatch_loss(net, expert, *env, b, aug, r1);
    aug.relabel = false;
    const LossResult naive = apc_minibatch_loss(net, expert, *env, b, aug, r2);
    CHECK(apc.loss != naive.loss);
  }

  TEST_CASE("weighted cross entropy with zero-width targets is the negative log likelihood") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d());
    Rng rng(7);
    const Minibatch b = lqr_batch(expert, *env, 3, rng);
    const policy::PolicyNet net({}, env->spec(), 2);
    const policy::ObsBatch obs = policy::ObsBatch::from(std::span<const envs::Observation>(b.observations));
    const LossResult nll = weighted_cross_entropy(net, obs, b.targets, Matrix(), Vector::Constant(3, 1.0 / 3));
    double expected = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      expected -= policy::log_prob(net.forward(b.observations[i]), b.targets.row(static_cast<Eigen::Index>(i)).transpose()) / 3;
    }
    CHECK(nll.loss == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bc_loss(net, b).loss == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("a linear student recovers the expert gain") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d());
    Rng rng(8);
    policy::PolicyConfig cfg;
    cfg.torso = {};
    policy::PolicyNet net(cfg, env->spec(), 3);
    numcore::AdamState adam({1e-2}, net.param_count());
    for (int it = 0; it < 10000; ++it) {
      const Minibatch b = lqr_batch(expert, *env, 32, rng);
      const LossResult r = bc_loss(net, b);
      std::vector<double> p = net.flat();
      numcore::adam_step(adam, p, r.grad);
      net.assign(p);
    }
    const Matrix w = net.torso().weight(0).topRows(2);
    CHECK((w + expert.gain()).cwiseAbs().maxCoeff() < 0.05);
  }

  TEST_CASE("method and variant rules") {
    AugmentationSpec aug;
    aug.sigma_s = 0.1;
    aug.grid_shift = 2;
    CHECK(effective_augmentation(Method::BC, ImageVariant::Plain, aug).sigma_s == 0.0);
    CHECK(!effective_augmentation(Method::NaiveABC, ImageVariant::Plain, aug).relabel);
    CHECK(effective_augmentation(Method::APC, ImageVariant::Plain, aug).grid_shift == 0);
    const AugmentationSpec image_only = effective_augmentation(Method::APC, ImageVariant::ImageOnly, aug);
    CHECK(image_only.sigma_s == 0.0);
    CHECK(image_only.grid_shift == 2);
    CHECK_THROWS(effective_augmentation(Method::BC, ImageVariant::WithImage, aug));
    aug.grid_shift = 0;
    CHECK_THROWS(effective_augmentation(Method::APC, ImageVariant::ImageOnly, aug));
    CHECK(parse_method(method_name(Method::NaiveABC)) == Method::NaiveABC);
    CHECK(parse_variant("with_image") == ImageVariant::WithImage);
    CHECK_THROWS(parse_method("gail"));
  }

  TEST_CASE("offline training is reproducible and keeps the best checkpoint") {
    const auto env = envs::make_env("lqr");
    const experts::LqrExpert expert(envs::LqrConfig::lqr_2d());
    data::DatasetSpec ds;
    const data::ExpertDataset d = data::build_dataset(expert, *env, ds, 1);
    const auto val = envs::make_instance_set(envs::InstanceRole::Validation, 5, 1);
    const auto test = envs::make_instance_set(envs::InstanceRole::Test, 5, 1);
    const OfflineProblem p{&d, &expert, env.get(), &val, &test};
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.max_iterations = 200;
    tc.eval_every = 50;
    tc.batch_size = 4;
    AugmentationSpec aug;
    aug.sigma_s = 0.1;
    aug.m = 2;
    const OfflineResult a = train_offline(Method::APC, ImageVariant::Plain, p, {}, tc, aug, 5);
    const OfflineResult b = train_offline(Method::APC, ImageVariant::Plain, p, {}, tc, aug, 5);
    CHECK(a.best == b.best);
    CHECK(a.test.returns == b.test.returns);
    CHECK(a.curve.size() == 5);
    double best = -1e300;
    for (const auto& c : a.curve) best = std::max(best, c.validation_mean);
    CHECK(a.best_validation == best);
    CHECK(a.test.count == 5);
  }
}
