// Micro benchmarks for the hot paths: MLP passes, the APC loss, rollouts and
// the Riccati solve.

#include <benchmark/benchmark.h>

#include "apc/cloning.hpp"
#include "apc/data.hpp"
#include "apc/experts.hpp"

using namespace apc;

namespace {

numcore::MlpSpec spec_for(std::size_t width) {
  numcore::MlpSpec spec;
  spec.input_dim = 8;
  spec.hidden_sizes = {width, width};
  spec.output_dim = 4;
  return spec;
}

numcore::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  numcore::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

void BM_MlpForward(benchmark::State& state) {
  Rng rng(1);
  const numcore::MlpParams p = numcore::MlpParams::glorot(spec_for(static_cast<std::size_t>(state.range(0))), 1);
  const numcore::Matrix x = random_matrix(16, 8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(numcore::mlp_forward(p, x));
}
BENCHMARK(BM_MlpForward)->Arg(8)->Arg(32)->Arg(64);

void BM_MlpBackward(benchmark::State& state) {
  Rng rng(2);
  const numcore::MlpParams p = numcore::MlpParams::glorot(spec_for(static_cast<std::size_t>(state.range(0))), 2);
  const numcore::Matrix x = random_matrix(16, 8, rng), w = random_matrix(16, 4, rng);
  std::vector<double> grad(p.size());
  for (auto _ : state) {
    numcore::ForwardTape tape;
    numcore::mlp_forward(p, x, &tape);
    std::fill(grad.begin(), grad.end(), 0.0);
    numcore::mlp_backward(p, tape, w, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_MlpBackward)->Arg(8)->Arg(32)->Arg(64);

void BM_ApcLoss(benchmark::State& state) {
  const auto env = envs::make_env("lqr");
  const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
  Rng rng(3);
  cloning::Minibatch b;
  for (int i = 0; i < 16; ++i) {
    numcore::Vector s(4);
    for (int k = 0; k < 4; ++k) s(k) = uniform(rng, -2.0, 2.0);
    b.observations.push_back(env->observe(s, numcore::Vector(0)));
  }
  b.targets = expert.heads(policy::ObsBatch::from(std::span<const envs::Observation>(b.observations))).mean;
  policy::PolicyConfig cfg;
  cfg.torso = {32, 32};
  const policy::PolicyNet net(cfg, env->spec(), 3);
  cloning::AugmentationSpec aug;
  aug.m = static_cast<std::size_t>(state.range(0));
  aug.sigma_s = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(cloning::apc_minibatch_loss(net, expert, *env, b, aug, rng).loss);
}
BENCHMARK(BM_ApcLoss)->Arg(1)->Arg(4)->Arg(10);

void BM_Rollout(benchmark::State& state) {
  const auto env = envs::make_env(state.range(0) == 0 ? "lqr" : "point_mass");
  policy::PolicyConfig cfg;
  cfg.torso = {32, 32};
  const policy::PolicyNet net(cfg, env->spec(), 4);
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  for (auto _ : state) {
    steps += data::rollout(net, *env, ++seed, data::RolloutOptions{}).size();
  }
  state.counters["env_steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Rollout)->Arg(0)->Arg(1);

void BM_Riccati(benchmark::State& state) {
  const envs::LqrConfig c = envs::LqrConfig::lqr_2d();
  for (auto _ : state) benchmark::DoNotOptimize(experts::riccati_solve(c.a, c.b, c.q, c.r).p(0, 0));
}
BENCHMARK(BM_Riccati);

}  // namespace

BENCHMARK_MAIN();
