#include <doctest.h>

#include <filesystem>

#include "apc/cloning.hpp"
#include "apc/policy.hpp"
#include "oracles.hpp"

using namespace apc;
using namespace apc::policy;

namespace {

GaussianHead random_head(std::size_t dim, Rng& rng, double sig_lo = 0.3, double sig_hi = 1.5) {
  Vector mean(dim), raw(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    mean(i) = uniform(rng, -1.0, 1.0);
    const double sigma = uniform(rng, sig_lo, sig_hi);
    raw(i) = std::log(std::expm1(sigma - kSigmaMin));
  }
  return make_head(mean, raw);
}

envs::Observation random_point_mass_obs(const envs::Environment& env, Rng& rng) {
  Vector common(4), priv(2);
  for (int i = 0; i < 4; ++i) common(i) = uniform(rng, -0.9, 0.9);
  for (int i = 0; i < 2; ++i) priv(i) = uniform(rng, -0.9, 0.9);
  return env.observe(common, priv);
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("sigma floor and softplus") {
    Vector mean = Vector::Zero(2), raw(2);
    raw << -50.0, std::log(std::expm1(1.0));
    const GaussianHead h = make_head(mean, raw);
    CHECK(h.sigma(0) >= kSigmaMin);
    CHECK(h.sigma(1) == doctest::Approx(1.0 + kSigmaMin));
  }

  TEST_CASE("log prob matches the closed-form density") {
    Rng rng(2);
    const GaussianHead h = random_head(3, rng);
    Vector a(3);
    a << 0.1, -0.4, 1.3;
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double z = (a(i) - h.mean(i)) / h.sigma(i);
      expected += -0.5 * z * z - std::log(h.sigma(i)) - 0.5 * std::log(2 * M_PI);
    }
    CHECK(log_prob(h, a) == doctest::Approx(expected).epsilon(1e-13));
  }

  TEST_CASE("cross entropy agrees with a stratified Monte-Carlo estimate") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t dim = 1 + rng() % 3;
      const GaussianHead p = random_head(dim, rng), q = random_head(dim, rng);
      const auto z = oracle::latin_normal(20000, dim, rng);
      double acc = 0.0;
      for (const auto& row : z) {
        Vector a(dim);
        for (std::size_t k = 0; k < dim; ++k) a(k) = p.mean(k) + p.sigma(k) * row[k];
        acc -= log_prob(q, a);
      }
      CHECK(analytic_cross_entropy(p, q) == doctest::Approx(acc / 20000.0).epsilon(5e-3));
    }
  }

  TEST_CASE("self cross entropy is the entropy") {
    Rng rng(4);
    const GaussianHead p = random_head(4, rng);
    double h = 0.0;
    for (int i = 0; i < 4; ++i) h += 0.5 * std::log(2 * M_PI * M_E * p.sigma(i) * p.sigma(i));
    CHECK(std::abs(analytic_cross_entropy(p, p) - h) < 1e-12);
    CHECK(std::abs(entropy(p) - h) < 1e-12);
  }

  TEST_CASE("sampling statistics and the zero-sigma override") {
    Rng rng(5);
    GaussianHead h = random_head(1, rng);
    double s1 = 0, s2 = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      const double a = sample_action(h, rng)(0);
      s1 += a;
      s2 += a * a;
    }
    const double mean = s1 / n, sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(mean - h.mean(0)) < 5 * h.sigma(0) / std::sqrt(n));
    CHECK(sd == doctest::Approx(h.sigma(0)).epsilon(0.02));
    const GaussianHead fixed = NoiseOverride::fixed(0.0).apply(h);
    CHECK(sample_action(fixed, rng)(0) == h.mean(0));
    CHECK(NoiseOverride::native().apply(h).sigma(0) == h.sigma(0));
  }

  TEST_CASE("observation spec parsing") {
    CHECK(ObservationSpec::parse("common+grid") == ObservationSpec::common_and_grid());
    CHECK(ObservationSpec::parse("state") == ObservationSpec::full_state());
    CHECK(ObservationSpec::parse(ObservationSpec::common_and_grid().to_string()) == ObservationSpec::common_and_grid());
    CHECK_THROWS(ObservationSpec::parse("pixels"));
  }

  TEST_CASE("policy gradients match central differences for every channel layout") {
    const auto env = envs::make_env("point_mass");
    Rng rng(6);
    for (const char* layout : {"state", "common+grid", "common+privileged", "state+grid"}) {
      PolicyConfig cfg;
      cfg.observation = ObservationSpec::parse(layout);
      cfg.torso = {6, 5};
      cfg.grid_features = 4;
      const PolicyNet net(cfg, env->spec(), 17);
      std::vector<envs::Observation> obs;
      for (int i = 0; i < 3; ++i) obs.push_back(random_point_mass_obs(*env, rng));
      const ObsBatch batch = ObsBatch::from(std::span<const envs::Observation>(obs));
      Matrix target_mean = Matrix::Random(3, 2), target_sigma = (Matrix::Random(3, 2).array() * 0.2 + 0.5).matrix();
      Vector w(3);
      w << 0.5, 0.3, 0.2;
      for (const bool use_sigma : {false, true}) {
        const Matrix ts = use_sigma ? target_sigma : Matrix();
        const cloning::LossResult r = cloning::weighted_cross_entropy(net, batch, target_mean, ts, w);
        auto loss = [&](const std::vector<double>& flat) {
          PolicyNet q = net;
          q.assign(flat);
          return cloning::weighted_cross_entropy(q, batch, target_mean, ts, w).loss;
        };
        CAPTURE(layout);
        CHECK(oracle::relative_error(r.grad, oracle::numeric_gradient(loss, net.flat())) < 1e-5);
      }
    }
  }

  TEST_CASE("batched and single forward agree; checkpoints round trip") {
    const auto env = envs::make_env("point_mass");
    Rng rng(7);
    PolicyConfig cfg;
    cfg.observation = ObservationSpec::common_and_grid();
    const PolicyNet net(cfg, env->spec(), 3);
    std::vector<envs::Observation> obs{random_point_mass_obs(*env, rng), random_point_mass_obs(*env, rng)};
    const BatchHeads b = net.forward(ObsBatch::from(std::span<const envs::Observation>(obs)));
    const GaussianHead single = net.forward(obs[1]);
    CHECK((b.row(1).mean - single.mean).norm() < 1e-12);
    const auto path = std::filesystem::temp_directory_path() / "apc_policy_ckpt.bin";
    save_policy(path, net, R"({"tag":1})");
    std::string meta;
    const PolicyNet back = load_policy(path, &meta);
    CHECK(back == net);
    CHECK(meta.find("tag") != std::string::npos);
    std::filesystem::remove(path);
  }

  TEST_CASE("networks with equal seeds are equal") {
    const auto env = envs::make_env("lqr");
    CHECK(PolicyNet({}, env->spec(), 1) == PolicyNet({}, env->spec(), 1));
    CHECK(!(PolicyNet({}, env->spec(), 1) == PolicyNet({}, env->spec(), 2)));
  }
}
