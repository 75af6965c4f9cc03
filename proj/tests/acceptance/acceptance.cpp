// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria 1-5 are property checks against independent oracles; 6-12 run the
// experiment configs under configs/acceptance and test the qualitative
// claims; 13 reruns one experiment and compares its CSV bytes.
//
// APC_ACCEPTANCE_ONLY=6,9 restricts the run to the listed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "../unit/oracles.hpp"
#include "apc/bench.hpp"

using namespace apc;
using namespace apc::bench;
namespace fs = std::filesystem;
using numcore::Vector;

namespace {

const fs::path kConfigs = APC_ACCEPTANCE_CONFIGS;
const fs::path kOut = APC_ACCEPTANCE_OUT;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ExperimentResult run_config(const std::string& name, const std::string& out_name = "") {
  const ExperimentConfig config = ExperimentConfig::load(kConfigs / (name + ".toml"));
  RunOptions options;
  options.out_dir = kOut / (out_name.empty() ? name : out_name);
  fs::remove_all(options.out_dir);
  options.threads = std::max(1u, std::thread::hardware_concurrency());
  options.quiet = true;
  ExperimentResult r = run_experiment(config, options);
  for (const ArmResult& a : r.arms) {
    if (!a.ok()) throw std::runtime_error(name + ": arm " + a.id + " failed: " + a.error);
  }
  return r;
}

/// Seed-averaged metric for arms whose labels contain every (key, value) pair.
double seed_mean(const ExperimentResult& r, const Labels& match, const std::string& metric) {
  std::vector<double> v;
  for (const ArmResult& a : r.arms) {
    bool ok = true;
    for (const auto& [k, val] : match) ok = ok && a.label(k) == val;
    if (ok) v.push_back(a.metric(metric));
  }
  if (v.empty()) throw std::runtime_error("no arms for metric " + metric);
  return mean_and_ci(v).first;
}

/// Seed-averaged curve (x -> mean) for one group of arms.
std::map<double, double> seed_curve(const ExperimentResult& r, const Labels& match) {
  std::map<double, std::vector<double>> acc;
  for (const ArmResult& a : r.arms) {
    bool ok = true;
    for (const auto& [k, val] : match) ok = ok && a.label(k) == val;
    if (!ok) continue;
    for (const CurveRow& row : a.curve) acc[row.x].push_back(row.mean);
  }
  std::map<double, double> out;
  for (const auto& [x, v] : acc) out[x] = mean_and_ci(v).first;
  return out;
}

// ---- 1. numerics ----

Verdict numerics() {
  Rng rng(101);
  double worst = 0.0;
  const auto lqr = envs::make_env("lqr");
  const auto pm = envs::make_env("point_mass");
  const char* layouts[] = {"state", "common+grid", "common+privileged", "state+grid"};
  for (int c = 0; c < 200; ++c) {
    double err = 0.0;
    if (c % 3 == 0) {
      numcore::MlpSpec spec;
      spec.input_dim = 1 + rng() % 6;
      for (std::size_t i = 0, d = rng() % 3; i < d; ++i) spec.hidden_sizes.push_back(1 + rng() % 8);
      spec.output_dim = 1 + rng() % 4;
      numcore::MlpParams p = numcore::MlpParams::glorot(spec, rng());
      for (auto& v : p.flat()) v += 0.1 * standard_normal(rng);
      const auto rows = static_cast<Eigen::Index>(1 + rng() % 4);
      numcore::Matrix x(rows, static_cast<Eigen::Index>(spec.input_dim)), w(rows, static_cast<Eigen::Index>(spec.output_dim));
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = standard_normal(rng);
      numcore::ForwardTape tape;
      numcore::mlp_forward(p, x, &tape);
      std::vector<double> grad(p.size(), 0.0);
      numcore::mlp_backward(p, tape, w, grad);
      const std::vector<double> flat(p.flat().begin(), p.flat().end());
      err = oracle::relative_error(grad, oracle::numeric_gradient(
                                             [&](const std::vector<double>& f) {
                                               numcore::MlpParams q = p;
                                               q.assign(f);
                                               return numcore::mlp_forward(q, x).cwiseProduct(w).sum();
                                             },
                                             flat));
    } else {
      const bool point_mass = rng() % 2 == 0;
      envs::Environment& env = point_mass ? *pm : *lqr;
      policy::PolicyConfig cfg;
      cfg.observation = policy::ObservationSpec::parse(point_mass ? layouts[rng() % 4] : "state");
      for (std::size_t i = 0, d = rng() % 3; i < d; ++i) cfg.torso.push_back(1 + rng() % 8);
      cfg.torso.resize(std::min<std::size_t>(cfg.torso.size(), 2));
      if (rng() % 2) cfg.torso.clear();
      cfg.grid_features = 2 + rng() % 4;
      const policy::PolicyNet net(cfg, env.spec(), rng());
      const std::size_t rows = 1 + rng() % 4;
      std::vector<envs::Observation> obs;
      for (std::size_t i = 0; i < rows; ++i) {
        envs::Observation o = env.reset(rng());
        Vector common = o.common;
        for (Eigen::Index k = 0; k < common.size(); ++k) common(k) += 0.2 * standard_normal(rng);
        obs.push_back(env.observe(common, o.privileged));
      }
      const auto batch = policy::ObsBatch::from(std::span<const envs::Observation>(obs));
      const auto n = static_cast<Eigen::Index>(rows), a = static_cast<Eigen::Index>(env.spec().action_dim);
      numcore::Matrix mean(n, a), sigma(n, a);
      for (Eigen::Index i = 0; i < mean.size(); ++i) {
        mean.data()[i] = standard_normal(rng);
        sigma.data()[i] = uniform(rng, 0.1, 1.0);
      }
      Vector w(n);
      for (Eigen::Index i = 0; i < n; ++i) w(i) = uniform(rng, 0.1, 1.0);
      const numcore::Matrix ts = c % 3 == 1 ? numcore::Matrix() : sigma;  // log-prob or cross-entropy
      const cloning::LossResult r = cloning::weighted_cross_entropy(net, batch, mean, ts, w);
      err = oracle::relative_error(r.grad, oracle::numeric_gradient(
                                               [&](const std::vector<double>& f) {
                                                 policy::PolicyNet q = net;
                                                 q.assign(f);
                                                 return cloning::weighted_cross_entropy(q, batch, mean, ts, w).loss;
                                               },
                                               net.flat()));
    }
    worst = std::max(worst, err);
  }
  return {worst < 1e-4, "200 cases (MLP, log-prob, cross-entropy), worst relative error " + fmt("%.2e", worst)};
}

// ---- 2. Gaussian math ----

Verdict gaussian_math() {
  Rng rng(202);
  double worst_mc = 0.0, worst_entropy = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t dim = 1 + rng() % 3;
    auto head = [&] {
      Vector mean(dim), raw(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        mean(k) = uniform(rng, -1.0, 1.0);
        raw(k) = std::log(std::expm1(uniform(rng, 0.3, 1.5) - policy::kSigmaMin));
      }
      return policy::make_head(mean, raw);
    };
    const policy::GaussianHead p = head(), q = head();
    const auto z = oracle::latin_normal(100000, dim, rng);
    double acc = 0.0;
    for (const auto& row : z) {
      Vector a(dim);
      for (std::size_t k = 0; k < dim; ++k) a(k) = p.mean(k) + p.sigma(k) * row[k];
      acc -= policy::log_prob(q, a);
    }
    worst_mc = std::max(worst_mc, std::abs(policy::analytic_cross_entropy(p, q) - acc / 1e5));
    double closed = 0.0;
    for (std::size_t k = 0; k < dim; ++k) closed += 0.5 * std::log(2 * M_PI * M_E * p.sigma(k) * p.sigma(k));
    worst_entropy = std::max(worst_entropy, std::abs(policy::analytic_cross_entropy(p, p) - closed));
  }
  return {worst_mc < 1e-2 && worst_entropy < 1e-12,
          "50 pairs: max |CE - MC(1e5)| " + fmt("%.2e", worst_mc) + ", max |H(p,p) - entropy| " +
              fmt("%.1e", worst_entropy)};
}

// ---- 3. Riccati ----

Verdict riccati() {
  using numcore::Matrix;
  Rng rng(303);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const std::size_t n = 1 + rng() % 4, m = 1 + rng() % n;
    auto g = [&](std::size_t r, std::size_t cc, double s) {
      Matrix x(r, cc);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = s * standard_normal(rng);
      return x;
    };
    const Matrix a = g(n, n, 0.6), b = g(n, m, 1.0), qf = g(n, n, 1.0), rf = g(m, m, 1.0);
    const Matrix q = qf * qf.transpose() + Matrix::Identity(n, n);
    const Matrix r = rf * rf.transpose() + Matrix::Identity(m, m);
    const experts::RiccatiSolution s = experts::riccati_solve(a, b, q, r);
    Matrix p = Matrix::Zero(n, n);
    for (int k = 0; k < 10000; ++k) {
      const Matrix inv = (r + b.transpose() * p * b).inverse();
      p = q + a.transpose() * p * a - a.transpose() * p * b * inv * b.transpose() * p * a;
    }
    worst = std::max(worst, (s.p - p).cwiseAbs().maxCoeff() / std::max(1.0, p.cwiseAbs().maxCoeff()));
  }
  const Matrix one = Matrix::Ones(1, 1);
  const double golden = std::abs(experts::riccati_solve(one, one, one, one).p(0, 0) - (1 + std::sqrt(5.0)) / 2);
  return {worst < 1e-8 && golden < 1e-10,
          "20 systems vs 10000-step value iteration: worst " + fmt("%.1e", worst) + "; golden-ratio error " +
              fmt("%.1e", golden)};
}

// ---- 4. loss degeneracy ----

Verdict loss_degeneracy() {
  const auto env = envs::make_env("lqr");
  const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
  Rng rng(404);
  double worst = 0.0;
  bool all_differ = true;
  for (int c = 0; c < 20; ++c) {
    cloning::Minibatch b;
    const std::size_t n = 1 + rng() % 16;
    for (std::size_t i = 0; i < n; ++i) {
      Vector s(4);
      for (int k = 0; k < 4; ++k) s(k) = uniform(rng, -2.0, 2.0);
      b.observations.push_back(env->observe(s, Vector(0)));
    }
    b.targets = expert.heads(policy::ObsBatch::from(std::span<const envs::Observation>(b.observations))).mean;
    const policy::PolicyNet net({}, env->spec(), rng());
    cloning::AugmentationSpec aug;
    aug.m = 1 + rng() % 10;
    aug.sigma_s = 0.0;
    const cloning::LossResult apc = cloning::apc_minibatch_loss(net, expert, *env, b, aug, rng);
    const cloning::LossResult bc = cloning::bc_loss(net, b);
    worst = std::max(worst, std::abs(apc.loss - 2 * bc.loss) / std::max(1.0, std::abs(bc.loss)));
    for (std::size_t k = 0; k < bc.grad.size(); ++k) {
      worst = std::max(worst, std::abs(apc.grad[k] - 2 * bc.grad[k]) / std::max(1.0, std::abs(bc.grad[k])));
    }
    aug.sigma_s = 0.1;
    const std::uint64_t stream = rng();
    Rng r1(stream), r2(stream);
    const double with_relabel = cloning::apc_minibatch_loss(net, expert, *env, b, aug, r1).loss;
    aug.relabel = false;
    const double naive = cloning::apc_minibatch_loss(net, expert, *env, b, aug, r2).loss;
    all_differ = all_differ && with_relabel != naive;
  }
  return {worst < 1e-12 && all_differ, "sigma_s = 0: max deviation from 2x BC " + fmt("%.1e", worst) +
                                           "; Naive ABC != APC on all 20 batches: " + (all_differ ? "yes" : "no")};
}

// ---- 5. data machinery ----

Verdict data_machinery() {
  std::vector<std::string> notes;
  bool pass = true;

  data::ReplayBuffer fifo(4);
  for (int i = 0; i < 9; ++i) {
    data::Chunk c;
    c.valid = 1;
    c.actions = numcore::Matrix::Constant(data::kChunkLength, 1, i);
    c.targets = c.actions;
    c.observations.resize(data::kChunkLength);
    fifo.insert(c);
  }
  bool fifo_ok = fifo.size() == 4;
  const auto items = fifo.contents();
  for (int i = 0; i < 4; ++i) fifo_ok = fifo_ok && items[static_cast<std::size_t>(i)]->actions(0, 0) == 5 + i;
  pass = pass && fifo_ok;
  notes.push_back(std::string("fifo ") + (fifo_ok ? "ok" : "WRONG"));

  data::ReplayBuffer ten(10);
  for (int i = 0; i < 10; ++i) {
    data::Chunk c;
    c.valid = 1;
    c.actions = numcore::Matrix::Constant(data::kChunkLength, 1, i);
    c.targets = c.actions;
    c.observations.resize(data::kChunkLength);
    ten.insert(c);
  }
  Rng rng(505);
  std::vector<double> counts(10, 0.0);
  for (int d = 0; d < 1000; ++d) {
    for (const auto& c : ten.sample(100, rng)) counts[static_cast<std::size_t>(c->actions(0, 0))] += 1;
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 1e4) * (c - 1e4) / 1e4;
  pass = pass && chi2 < oracle::kChiSquare9At0001;
  notes.push_back("chi2 " + fmt("%.2f", chi2) + " (p > 0.001 iff < 27.88)");

  // Real rollouts from untrained noisy policies: PointMass episodes leave the
  // arena and terminate early, LQR episodes run the full horizon.
  const auto pm = envs::make_env("point_mass");
  const auto lqr_env = envs::make_env("lqr");
  data::RolloutOptions opts;
  opts.noise = policy::NoiseOverride::fixed(0.5);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 50; ++s) seeds.push_back(derive_seed(505, s));
  auto trajs = data::rollouts(policy::PolicyNet({}, pm->spec(), 5), *pm, seeds, opts);
  for (auto& t : data::rollouts(policy::PolicyNet({}, lqr_env->spec(), 6), *lqr_env, seeds, opts)) {
    trajs.push_back(std::move(t));
  }
  const auto chunks = data::chunk_trajectories(trajs);
  std::size_t k = 0, early = 0;
  bool recon = true;
  for (const data::Trajectory& t : trajs) {
    early += t.terminated_early;
    std::size_t step = 0;
    while (step < t.size() && k < chunks.size()) {
      const data::Chunk& c = chunks[k++];
      recon = recon && c.valid == std::min(data::kChunkLength, t.size() - step);
      for (std::size_t j = 0; j < c.valid && step < t.size(); ++j, ++step) {
        recon = recon && (c.observations[j].state - t.steps[step].observation.state).norm() == 0.0 &&
                (c.actions.row(static_cast<Eigen::Index>(j)).transpose() - t.steps[step].action).norm() == 0.0;
      }
    }
    recon = recon && step == t.size();
  }
  recon = recon && k == chunks.size() && early > 0 && early < trajs.size();
  pass = pass && recon;
  notes.push_back("chunk reconstruction " + std::string(recon ? "exact" : "WRONG") + " (" + std::to_string(early) +
                  " of " + std::to_string(trajs.size()) + " early-terminated)");

  const auto lqr = envs::make_env("lqr");
  const experts::LqrExpert expert(envs::LqrConfig::lqr_2d(), 0.2);
  online::DaggerConfig cfg;
  cfg.env_steps = 600;
  cfg.eval_every = 600;
  cfg.rate.batch_size = 16;
  cfg.learning_rate = 1e-3;
  const auto eval = envs::make_instance_set(envs::InstanceRole::Test, 5, 505);
  const online::DaggerRun run = online::dagger_run(*lqr, expert, cfg, eval, 505);
  const double ups = run.updates_per_step();
  pass = pass && std::abs(ups - 10.0) <= 1.0;
  notes.push_back("rate audit " + fmt("%.3f", ups) + " updates/env step");

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {pass, detail};
}

// ---- 6. offline data efficiency ----

Verdict offline_efficiency() {
  const ExperimentResult r = run_config("offline_lqr");
  const double em = r.expert_test_mean;
  bool apc_ge = true;
  std::size_t first_apc = 0, first_bc = 0;
  std::string table;
  for (std::size_t n : r.config.n_trajectories) {
    const std::string ns = std::to_string(n);
    const double apc = seed_mean(r, {{"n", ns}, {"method", "apc"}}, "test_mean");
    const double bc = seed_mean(r, {{"n", ns}, {"method", "bc"}}, "test_mean");
    apc_ge = apc_ge && apc >= bc;
    if (!first_apc && expert_normalized(apc, em) >= 0.9) first_apc = n;
    if (!first_bc && expert_normalized(bc, em) >= 0.9) first_bc = n;
    table += " n=" + ns + " " + fmt("%.3f", expert_normalized(apc, em)) + "/" + fmt("%.3f", expert_normalized(bc, em));
  }
  const bool earlier = first_apc != 0 && (first_bc == 0 || first_apc < first_bc);
  return {apc_ge && earlier, "normalized APC/BC:" + table + "; first n at 90%: APC " + std::to_string(first_apc) +
                                 ", BC " + (first_bc ? std::to_string(first_bc) : std::string("never"))};
}

// ---- 7. compression ----

Verdict compression() {
  const ExperimentResult r = run_config("compression_pm");
  const std::string big = torso_to_string(r.config.torsos.front()), small = torso_to_string(r.config.torsos.back());
  auto drop = [&](const std::string& m) {
    return seed_mean(r, {{"torso", big}, {"method", m}}, "normalized") -
           seed_mean(r, {{"torso", small}, {"method", m}}, "normalized");
  };
  const double apc = drop("apc"), bc = drop("bc");
  return {bc - apc >= 0.10, "drop " + big + " -> " + small + ": APC " + fmt("%.3f", apc) + ", BC " + fmt("%.3f", bc) +
                                " (margin " + fmt("%.3f", bc - apc) + ")"};
}

// ---- 8. privileged transfer ----

Verdict privileged() {
  const ExperimentResult r = run_config("privileged_pm");
  const std::size_t n = *std::max_element(r.config.n_trajectories.begin(), r.config.n_trajectories.end());
  const std::string ns = std::to_string(n);
  const double apc = seed_mean(r, {{"n", ns}, {"method", "apc"}}, "test_mean") / r.expert_test_mean;
  const double bc = seed_mean(r, {{"n", ns}, {"method", "bc"}}, "test_mean") / r.expert_test_mean;
  return {apc >= 0.8 && bc < 0.5, "n=" + ns + " (common + grid student): APC " + fmt("%.3f", apc) + " of expert, BC " +
                                      fmt("%.3f", bc)};
}

// ---- 9. DAgger ----

Verdict dagger() {
  const ExperimentResult r = run_config("dagger_lqr");
  const Labels ce_apc{{"objective", "analytic_ce"}, {"method", "apc"}}, ce_bc{{"objective", "analytic_ce"}, {"method", "bc"}};
  const double steps_apc = seed_mean(r, ce_apc, "steps_to_threshold");
  const double steps_bc = seed_mean(r, ce_bc, "steps_to_threshold");
  const double reached = seed_mean(r, ce_apc, "reached_threshold");
  const bool faster = reached == 1.0 && steps_apc <= 0.5 * steps_bc;
  bool objective = true;
  std::string obj;
  for (const char* m : {"bc", "apc"}) {
    const double ce = seed_mean(r, {{"objective", "analytic_ce"}, {"method", m}}, "curve_mean_normalized");
    const double lp = seed_mean(r, {{"objective", "logprob_on_mean"}, {"method", m}}, "curve_mean_normalized");
    objective = objective && ce >= lp;
    obj += std::string(" ") + m + " " + fmt("%.4f", ce) + " vs " + fmt("%.4f", lp) + ";";
  }
  return {faster && objective, "steps to 90%: APC " + fmt("%.1f", steps_apc) + ", plain " + fmt("%.1f", steps_bc) +
                                   " (ratio " + fmt("%.2f", steps_apc / steps_bc) +
                                   "); mean normalized curve CE vs logprob:" + obj};
}

// ---- 10. kickstarting ----

Verdict kickstart() {
  const ExperimentResult r = run_config("kickstart_pm");
  const std::string tier = r.config.kickstart.tiers.front();
  const double expert = r.expert_reference.at(tier);
  std::string best;
  for (const auto& [scope, value] : r.selections) {
    if (scope.size() > 7 && scope.substr(scope.size() - 7) == "/lambda") best = value;
  }
  if (best.empty()) return {false, "no lambda selection recorded"};
  const std::string method = cloning::method_name(r.config.methods.front());
  const Labels best_arm{{"tier", tier}, {"method", method}, {"lambda", best}};
  const double final_best = seed_mean(r, best_arm, "final_test_mean");
  const auto ks = seed_curve(r, best_arm);
  const auto scratch = seed_curve(r, {{"tier", tier}, {"method", "scratch"}});
  const double half = static_cast<double>(r.config.kickstart.env_steps) / 2.0;
  bool ahead = true;
  std::size_t points = 0;
  std::string behind;
  for (const auto& [x, v] : ks) {
    if (x <= 0.0 || x > half) continue;  // step 0 is the shared initialization
    ++points;
    if (!scratch.count(x) || v <= scratch.at(x)) {
      ahead = false;
      behind += " " + fmt("%.0f", x) + " (" + fmt("%.1f", v) + " vs " + fmt("%.1f", scratch.count(x) ? scratch.at(x) : NAN) + ")";
    }
  }
  // lambda = 0 against scratch, seed by seed, on every recorded number.
  bool identical = true;
  for (const ArmResult& a : r.arms) {
    if (a.label("method") != "scratch") continue;
    for (const ArmResult& b : r.arms) {
      if (b.label("lambda") != "0" || b.seed_index != a.seed_index) continue;
      identical = identical && a.curve.size() == b.curve.size() && a.test_returns == b.test_returns &&
                  a.metric("final_validation") == b.metric("final_validation");
      for (std::size_t i = 0; identical && i < a.curve.size(); ++i) {
        identical = a.curve[i].x == b.curve[i].x && a.curve[i].mean == b.curve[i].mean &&
                    a.curve[i].ci_half_width == b.curve[i].ci_half_width;
      }
    }
  }
  const bool beats_expert = final_best >= 1.1 * expert;
  return {beats_expert && ahead && points > 0 && identical,
          "best lambda " + best + ": final " + fmt("%.1f", final_best) + " vs expert " + fmt("%.1f", expert) + " (" +
              fmt("%.2f", final_best / expert) + "x); ahead of scratch at " + (ahead ? "all " : "not all ") +
              std::to_string(points) + " points up to half budget" + (behind.empty() ? "" : ", behind at" + behind) +
              "; lambda=0 identical to scratch: " +
              (identical ? "yes" : "no")};
}

// ---- 11. noise sensitivity ----

Verdict noise() {
  const ExperimentResult r = run_config("noise_pm");
  auto at = [&](const std::string& m, double s) {
    return seed_mean(r, {{"method", m}}, "normalized_noise_" + format_number(s));
  };
  const auto& grid = r.config.student_noise;
  const double top = *std::max_element(grid.begin(), grid.end());
  auto worst_drop = [&](const std::string& m) {
    double d = 0.0;
    for (double s : grid) d = std::max(d, at(m, grid.front()) - at(m, s));
    return d;
  };
  const double apc_top = at("apc", top), bc_top = at("bc", top);
  const double apc_drop = worst_drop("apc"), bc_drop = worst_drop("bc");
  std::string row;
  for (double s : grid) row += " " + format_number(s) + ":" + fmt("%.3f", at("apc", s)) + "/" + fmt("%.3f", at("bc", s));
  return {apc_top > bc_top && apc_drop < bc_drop, "APC/BC by noise" + row + "; worst drop APC " + fmt("%.3f", apc_drop) +
                                                      ", BC " + fmt("%.3f", bc_drop)};
}

// ---- 12. sigma_s selection ----

Verdict sigma_s() {
  const ExperimentResult r = run_config("sigma_s_lqr");
  // Recompute the selection from the per-arm validation numbers.
  std::map<double, std::vector<double>> by_sigma;
  for (const ArmResult& a : r.arms) {
    if (a.label("method") == "apc") by_sigma[std::stod(a.label("sigma_s"))].push_back(a.metric("best_validation"));
  }
  double chosen = 0.0, best = -INFINITY;
  for (double s : r.config.sigma_s_grid) {
    const double m = mean_and_ci(by_sigma.at(s)).first;
    if (m > best) {
      best = m;
      chosen = s;
    }
  }
  std::string reported;
  for (const auto& [scope, value] : r.selections) {
    if (scope.find("method=apc/sigma_s") != std::string::npos && scope.find("interior") == std::string::npos) reported = value;
  }
  const auto& g = r.config.sigma_s_grid;
  const bool interior = chosen != *std::min_element(g.begin(), g.end()) && chosen != *std::max_element(g.begin(), g.end());
  return {interior && reported == format_number(chosen),
          "selected sigma_s " + format_number(chosen) + " (reported " + reported + "), interior: " +
              (interior ? "yes" : "no")};
}

// ---- 13. determinism ----

Verdict determinism() {
  const std::string name = "dagger_lqr";
  run_config(name, name + "_rerun_a");
  run_config(name, name + "_rerun_b");
  std::size_t files = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(kOut / (name + "_rerun_a"))) {
    if (entry.path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(entry.path(), kOut / (name + "_rerun_a"));
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    ++files;
    if (slurp(entry.path()) != slurp(kOut / (name + "_rerun_b") / rel)) ++differ;
  }
  return {files > 0 && differ == 0, std::to_string(files) + " CSV files compared across two runs of " + name + ", " +
                                        std::to_string(differ) + " differ"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "numerics: gradients vs finite differences", numerics},
      {2, "gaussian math: cross-entropy vs Monte Carlo, entropy", gaussian_math},
      {3, "riccati vs value iteration", riccati},
      {4, "loss degeneracy", loss_degeneracy},
      {5, "data machinery", data_machinery},
      {6, "offline data efficiency (LQR)", offline_efficiency},
      {7, "compression (PointMass)", compression},
      {8, "privileged transfer (PointMass)", privileged},
      {9, "DAgger (LQR)", dagger},
      {10, "kickstarting (PointMass)", kickstart},
      {11, "noise sensitivity (PointMass)", noise},
      {12, "sigma_s selection (LQR)", sigma_s},
      {13, "determinism", determinism},
  };
  std::set<int> only;
  if (const char* env = std::getenv("APC_ACCEPTANCE_ONLY")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
  }
  fs::create_directories(kOut);
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.0fs)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
