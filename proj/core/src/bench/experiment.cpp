#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "apc/bench.hpp"

namespace apc::bench {

std::string ArmResult::label(const std::string& key) const {
  for (const auto& [k, v] : labels) {
    if (k == key) return v;
  }
  throw std::out_of_range("arm " + id + " has no label " + key);
}

bool ArmResult::has_metric(const std::string& key) const {
  return std::any_of(metrics.begin(), metrics.end(), [&](const auto& m) { return m.first == key; });
}

double ArmResult::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  throw std::out_of_range("arm " + id + " has no metric " + key);
}

std::string ArmResult::group() const {
  std::string g;
  for (const auto& [k, v] : labels) g += (g.empty() ? "" : "/") + k + "=" + v;
  return g;
}

namespace {

std::string join_labels(const Labels& labels) {
  std::string g;
  for (const auto& [k, v] : labels) g += (g.empty() ? "" : "/") + k + "=" + v;
  return g;
}

bool offline_kind(ExperimentKind k) {
  return k != ExperimentKind::Dagger && k != ExperimentKind::Kickstart;
}

}  // namespace

std::vector<ArmPlan> plan_arms(const ExperimentConfig& c) {
  std::vector<ArmPlan> plans;
  auto add = [&](Labels labels) {
    for (std::size_t s = 0; s < c.seeds; ++s) {
      ArmPlan p;
      p.labels = labels;
      p.seed_index = s;
      p.id = join_labels(labels) + "/seed=" + std::to_string(s);
      plans.push_back(std::move(p));
    }
  };
  const auto m = [](cloning::Method x) { return std::string(cloning::method_name(x)); };
  switch (c.kind) {
    case ExperimentKind::OfflineSweep:
    case ExperimentKind::NoiseGrid:
      for (double se : c.expert_noise)
        for (std::size_t n : c.n_trajectories)
          for (auto method : c.methods)
            add({{"sigma_e", format_number(se)}, {"n", std::to_string(n)}, {"method", m(method)}});
      break;
    case ExperimentKind::SigmaSAblation:
      for (std::size_t n : c.n_trajectories)
        for (auto method : c.methods) {
          if (method == cloning::Method::BC) {
            add({{"n", std::to_string(n)}, {"method", m(method)}, {"sigma_s", "0"}});
            continue;
          }
          for (double s : c.sigma_s_grid)
            add({{"n", std::to_string(n)}, {"method", m(method)}, {"sigma_s", format_number(s)}});
        }
      break;
    case ExperimentKind::Compression:
      for (const auto& torso : c.torsos)
        for (std::size_t n : c.n_trajectories)
          for (auto method : c.methods)
            add({{"torso", torso_to_string(torso)}, {"n", std::to_string(n)}, {"method", m(method)}});
      break;
    case ExperimentKind::Privileged:
      for (auto variant : c.variants)
        for (std::size_t n : c.n_trajectories)
          for (auto method : c.methods) {
            if (method == cloning::Method::BC && variant == cloning::ImageVariant::WithImage) continue;
            add({{"variant", cloning::variant_name(variant)}, {"n", std::to_string(n)}, {"method", m(method)}});
          }
      break;
    case ExperimentKind::Dagger:
      for (double beta : c.dagger.betas)
        for (const auto& obj : c.dagger.objectives)
          for (auto method : c.methods)
            add({{"beta", format_number(beta)}, {"objective", obj}, {"method", m(method)}});
      break;
    case ExperimentKind::Kickstart:
      for (const auto& tier : c.kickstart.tiers) {
        // Plain actor-critic through its own code path; lambda = 0 arms must
        // reproduce it bit for bit.
        add({{"tier", tier}, {"method", "scratch"}, {"lambda", "none"}});
        for (auto method : c.methods)
          for (double lambda : c.kickstart.lambdas)
            add({{"tier", tier}, {"method", m(method)}, {"lambda", format_number(lambda)}});
      }
      break;
  }
  return plans;
}

namespace {

struct Context {
  const ExperimentConfig* config = nullptr;
  std::unique_ptr<envs::Environment> env;
  envs::InstanceSet validation;
  envs::InstanceSet test;
  std::map<std::string, std::shared_ptr<const experts::Expert>> experts;  // by tier name
  std::map<std::string, double> reference;                                // expert test mean by tier
  std::string expert_error;
};

void prepare_experts(Context& ctx, const std::filesystem::path& out_dir, bool quiet) {
  const ExperimentConfig& c = *ctx.config;
  std::vector<std::string> tiers =
      c.kind == ExperimentKind::Kickstart ? c.kickstart.tiers : std::vector<std::string>{c.expert.tier};
  if (c.env == "lqr") {
    auto lqr = std::make_shared<experts::LqrExpert>(envs::LqrConfig::lqr_2d(), c.expert.native_sigma);
    for (const auto& t : tiers) {
      if (t != "high") throw ConfigError("the LQR expert is optimal; only tier \"high\" exists");
      ctx.experts[t] = lqr;
    }
  } else {
    experts::ExpertTrainingConfig tc;
    tc.total_env_steps = c.expert.train_steps;
    tc.eval_every_env_steps = c.expert.eval_every;
    tc.validation_size = c.validation_size;
    tc.actor_critic.policy_learning_rate = c.expert.learning_rate;
    tc.actor_critic.critic_learning_rate = c.expert.learning_rate;
    std::vector<experts::Tier> wanted;
    for (const auto& t : tiers) wanted.push_back(experts::parse_tier(t));
    const auto start = std::chrono::steady_clock::now();
    experts::TrainedExperts trained = experts::train_expert(*ctx.env, wanted, tc, derive_seed(c.master_seed, "expert"));
    if (!quiet) {
      std::fprintf(stderr, "experts trained in %.1fs (converged validation %.3f)\n",
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), trained.converged);
    }
    std::filesystem::create_directories(out_dir / "experts");
    for (experts::ExpertTier& t : trained.tiers) {
      const std::string name = experts::tier_name(t.tier);
      experts::save_expert_tier(out_dir / "experts" / (name + ".ckpt"), t, fnv1a(c.canonical()));
      ctx.experts[name] = std::make_shared<experts::PolicyExpert>(t.policy, name);
    }
    for (const auto& f : trained.failures) ctx.expert_error += (ctx.expert_error.empty() ? "" : "; ") + f;
  }
  for (const auto& [name, expert] : ctx.experts) {
    ctx.reference[name] = evaluate(*expert, *ctx.env, ctx.test, 0.0, EvalMode::MeanAction).mean;
  }
}

cloning::AugmentationSpec augmentation_for(const ExperimentConfig& c, cloning::Method method, double sigma_s) {
  cloning::AugmentationSpec aug;
  aug.sigma_s = sigma_s;
  aug.m = c.m;
  aug.grid_shift = c.grid_shift;
  aug.perturb_common = c.perturb_common;
  aug.perturb_privileged = c.perturb_privileged;
  aug.relabel = method == cloning::Method::APC;
  return aug;
}

double method_sigma(const ExperimentConfig& c, cloning::Method method) {
  switch (method) {
    case cloning::Method::APC: return c.apc_sigma_s;
    case cloning::Method::NaiveABC: return c.naive_sigma_s;
    case cloning::Method::BC: return 0.0;
  }
  return 0.0;
}

std::string find_label(const Labels& labels, const std::string& key, const std::string& fallback = "") {
  for (const auto& [k, v] : labels) {
    if (k == key) return v;
  }
  return fallback;
}

void run_offline(const Context& ctx, const ArmPlan& plan, std::uint64_t seed, ArmResult& out) {
  const ExperimentConfig& c = *ctx.config;
  const auto& expert = ctx.experts.at(c.expert.tier);
  const double reference = ctx.reference.at(c.expert.tier);
  const cloning::Method method = cloning::parse_method(find_label(plan.labels, "method"));
  const double sigma_e = std::stod(find_label(plan.labels, "sigma_e", format_number(c.expert_noise.front())));
  const std::size_t n = std::stoul(find_label(plan.labels, "n"));

  data::DatasetSpec ds;
  ds.n_trajectories = n;
  ds.expert_noise = sigma_e;
  ds.mode = c.dataset_mode;
  ds.short_length = c.short_length;
  const std::uint64_t data_seed = derive_seed(
      c.master_seed, "dataset/seed=" + std::to_string(plan.seed_index) + "/sigma_e=" + format_number(sigma_e));
  const data::ExpertDataset dataset = data::build_dataset(*expert, *ctx.env, ds, data_seed);

  double sigma_s = method_sigma(c, method);
  if (c.kind == ExperimentKind::SigmaSAblation) sigma_s = std::stod(find_label(plan.labels, "sigma_s"));
  const cloning::AugmentationSpec aug = augmentation_for(c, method, sigma_s);

  policy::PolicyConfig student;
  student.observation = policy::ObservationSpec::parse(c.observation);
  student.torso = c.kind == ExperimentKind::Compression ? parse_torso(find_label(plan.labels, "torso")) : c.torso;
  const cloning::ImageVariant variant =
      c.kind == ExperimentKind::Privileged ? cloning::parse_variant(find_label(plan.labels, "variant"))
                                           : cloning::ImageVariant::Plain;

  const cloning::OfflineProblem problem{&dataset, expert.get(), ctx.env.get(), &ctx.validation, &ctx.test};
  const cloning::OfflineResult r = cloning::train_offline(method, variant, problem, student, c.train, aug, seed);

  out.metrics = {{"test_mean", r.test.mean},
                 {"test_std", r.test.std},
                 {"test_ci", r.test.ci_half_width},
                 {"normalized", expert_normalized(r.test.mean, reference)},
                 {"best_iteration", static_cast<double>(r.best_iteration)},
                 {"best_validation", r.best_validation},
                 {"dataset_steps", static_cast<double>(dataset.total_steps)},
                 {"sigma_s_used", sigma_s}};
  if (c.kind == ExperimentKind::NoiseGrid) {
    for (double s : c.student_noise) {
      const EvalReport e = evaluate(r.best, *ctx.env, ctx.test, s,
                                    s == 0.0 ? EvalMode::MeanAction : EvalMode::Stochastic);
      out.metrics.push_back({"test_mean_noise_" + format_number(s), e.mean});
      out.metrics.push_back({"normalized_noise_" + format_number(s), expert_normalized(e.mean, reference)});
    }
  }
  out.test_returns = r.test.returns;
  for (const auto& p : r.curve) out.curve.push_back({static_cast<double>(p.iteration), p.validation_mean, p.validation_ci});
  out.curve_x = "iteration";
  out.eval_mode = "stochastic";
}

void run_dagger(const Context& ctx, const ArmPlan& plan, std::uint64_t seed, ArmResult& out) {
  const ExperimentConfig& c = *ctx.config;
  const auto& expert = ctx.experts.at(c.expert.tier);
  const double reference = ctx.reference.at(c.expert.tier);
  online::DaggerConfig dc;
  dc.beta = std::stod(find_label(plan.labels, "beta"));
  dc.objective = online::parse_objective(find_label(plan.labels, "objective"));
  dc.method = cloning::parse_method(find_label(plan.labels, "method"));
  dc.aug = augmentation_for(c, dc.method, method_sigma(c, dc.method));
  dc.rate.batch_size = c.dagger.batch_size;
  dc.rate.updates_per_timestep = c.dagger.updates_per_timestep;
  dc.rate.error_buffer = c.dagger.error_buffer;
  dc.replay_capacity = c.dagger.replay_capacity;
  dc.learning_rate = c.dagger.learning_rate;
  dc.env_steps = c.dagger.env_steps;
  dc.eval_every = c.dagger.eval_every;
  dc.student.observation = policy::ObservationSpec::parse(c.observation);
  dc.student.torso = c.torso;

  const online::DaggerRun run = online::dagger_run(*ctx.env, *expert, dc, ctx.test, seed);
  double reached = static_cast<double>(run.env_steps);  // censored at the budget
  bool hit = false;
  for (const auto& p : run.curve) {
    out.curve.push_back({static_cast<double>(p.env_step), p.mean, p.ci_half_width});
    if (!hit && expert_normalized(p.mean, reference) >= c.dagger.threshold) {
      reached = static_cast<double>(p.env_step);
      hit = true;
    }
  }
  const EvalReport final_report = evaluate(run.final_policy, *ctx.env, ctx.test, 0.0, EvalMode::MeanAction);
  out.metrics = {{"final_mean", final_report.mean},
                 {"final_ci", final_report.ci_half_width},
                 {"final_normalized", expert_normalized(final_report.mean, reference)},
                 {"curve_mean_normalized", 0.0},
                 {"steps_to_threshold", reached},
                 {"reached_threshold", hit ? 1.0 : 0.0},
                 {"env_steps", static_cast<double>(run.env_steps)},
                 {"learner_updates", static_cast<double>(run.learner_updates)},
                 {"updates_per_step", run.updates_per_step()},
                 {"expert_step_fraction",
                  run.env_steps ? static_cast<double>(run.expert_steps) / static_cast<double>(run.env_steps) : 0.0}};
  double area = 0.0;
  for (const auto& p : run.curve) area += expert_normalized(p.mean, reference);
  out.metrics[3].second = area / static_cast<double>(run.curve.size());
  out.test_returns = final_report.returns;
  out.curve_x = "env_step";
  out.eval_mode = "mean_action";
}

void run_kickstart(const Context& ctx, const ArmPlan& plan, std::uint64_t seed, ArmResult& out) {
  const ExperimentConfig& c = *ctx.config;
  const std::string tier = find_label(plan.labels, "tier");
  const auto& expert = ctx.experts.at(tier);
  const double reference = ctx.reference.at(tier);
  online::KickstartConfig kc;
  const std::string method = find_label(plan.labels, "method");
  const bool scratch = method == "scratch";
  kc.lambda = scratch ? 0.0 : std::stod(find_label(plan.labels, "lambda"));
  kc.method = scratch ? cloning::Method::BC : cloning::parse_method(method);
  kc.aug = augmentation_for(c, kc.method, method_sigma(c, kc.method));
  kc.task_weight = c.kickstart.task_weight;
  kc.env_steps = c.kickstart.env_steps;
  kc.eval_every = c.kickstart.eval_every;
  kc.actor_critic.policy_learning_rate = c.kickstart.learning_rate;
  kc.actor_critic.critic_learning_rate = c.kickstart.learning_rate;
  kc.student.observation = policy::ObservationSpec::parse(c.observation);
  kc.student.torso = c.torso;
  kc.actor_critic.policy_torso = c.torso;

  // The student seed ignores lambda and method so every arm of a seed index
  // starts from the same network and the same environment stream.
  const std::uint64_t shared_seed =
      derive_seed(c.master_seed, "kickstart/tier=" + tier + "/seed=" + std::to_string(plan.seed_index));
  (void)seed;
  const online::KickstartRun run =
      scratch ? online::scratch_run(*ctx.env, kc, ctx.validation, ctx.test, shared_seed)
              : online::kickstart_run(*ctx.env, *expert, kc, ctx.validation, ctx.test, shared_seed);
  for (const auto& p : run.curve) out.curve.push_back({static_cast<double>(p.env_step), p.mean, p.ci_half_width});
  out.metrics = {{"final_test_mean", run.final_test.mean},
                 {"final_test_ci", run.final_test.ci_half_width},
                 {"final_normalized", expert_normalized(run.final_test.mean, reference)},
                 {"final_validation", run.final_validation},
                 {"expert_test_mean", reference}};
  out.test_returns = run.final_test.returns;
  out.curve_x = "env_step";
  out.eval_mode = "mean_action";
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char ch : id) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_') ? ch : '_';
  return out;
}

template <typename T>
std::vector<std::string> ordered_keys(const std::vector<ArmResult>& arms, T member) {
  std::vector<std::string> keys;
  for (const ArmResult& a : arms) {
    for (const auto& kv : a.*member) {
      if (std::find(keys.begin(), keys.end(), kv.first) == keys.end()) keys.push_back(kv.first);
    }
  }
  return keys;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string results_csv(const std::vector<ArmResult>& arms, const std::vector<std::string>& label_keys,
                        const std::vector<std::string>& metric_keys) {
  std::string s = "arm,seed_index,seed";
  for (const auto& k : label_keys) s += "," + k;
  for (const auto& k : metric_keys) s += "," + k;
  s += ",eval_mode,status\n";
  for (const ArmResult& a : arms) {
    s += csv_escape(a.id) + "," + std::to_string(a.seed_index) + "," + std::to_string(a.seed);
    for (const auto& k : label_keys) s += "," + csv_escape(find_label(a.labels, k));
    for (const auto& k : metric_keys) s += "," + (a.has_metric(k) ? format_number(a.metric(k)) : std::string());
    s += "," + a.eval_mode + "," + (a.ok() ? "ok" : "failed") + "\n";
  }
  return s;
}

std::string curves_csv(const std::vector<ArmResult>& arms) {
  std::string s = "arm_tag,group,seed,x_kind,x,eval_mean,eval_ci_low,eval_ci_high,eval_mode\n";
  for (const ArmResult& a : arms) {
    for (const CurveRow& r : a.curve) {
      s += csv_escape(a.id) + "," + csv_escape(a.group()) + "," + std::to_string(a.seed_index) + "," + a.curve_x +
           "," + format_number(r.x) + "," + format_number(r.mean) + "," + format_number(r.mean - r.ci_half_width) +
           "," + format_number(r.mean + r.ci_half_width) + "," + a.eval_mode + "\n";
    }
  }
  return s;
}

std::string returns_csv(const std::vector<ArmResult>& arms, const envs::InstanceSet& test) {
  std::string s = "arm,episode,instance_seed,return\n";
  for (const ArmResult& a : arms) {
    for (std::size_t i = 0; i < a.test_returns.size(); ++i) {
      s += csv_escape(a.id) + "," + std::to_string(i) + "," + std::to_string(test.seeds.at(i)) + "," +
           format_number(a.test_returns[i]) + "\n";
    }
  }
  return s;
}

void compute_selections(const ExperimentConfig& c, ExperimentResult& result) {
  if (c.kind == ExperimentKind::SigmaSAblation) {
    // Per (n, method): sigma_s with the best seed-averaged validation mean;
    // ties go to the earliest grid entry.
    std::vector<std::string> scopes;
    std::map<std::string, std::vector<std::pair<double, std::vector<double>>>> by_scope;
    for (const ArmResult& a : result.arms) {
      if (!a.ok() || a.label("method") == "bc") continue;
      const std::string scope = "n=" + a.label("n") + "/method=" + a.label("method");
      if (!by_scope.count(scope)) scopes.push_back(scope);
      auto& entries = by_scope[scope];
      const double s = std::stod(a.label("sigma_s"));
      auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == s; });
      if (it == entries.end()) {
        entries.push_back({s, {}});
        it = entries.end() - 1;
      }
      it->second.push_back(a.metric("best_validation"));
    }
    for (const auto& scope : scopes) {
      double best = -std::numeric_limits<double>::infinity();
      double chosen = 0.0;
      for (const auto& [s, vals] : by_scope[scope]) {
        const double mean = mean_and_ci(vals).first;
        if (mean > best) {
          best = mean;
          chosen = s;
        }
      }
      result.selections.push_back({scope + "/sigma_s", format_number(chosen)});
      const auto& grid = c.sigma_s_grid;
      const bool interior = chosen != *std::min_element(grid.begin(), grid.end()) &&
                            chosen != *std::max_element(grid.begin(), grid.end());
      result.selections.push_back({scope + "/sigma_s_interior", interior ? "true" : "false"});
    }
  }
  if (c.kind == ExperimentKind::Kickstart) {
    std::vector<std::string> scopes;
    std::map<std::string, std::vector<std::pair<double, std::vector<double>>>> by_scope;
    for (const ArmResult& a : result.arms) {
      if (!a.ok() || a.label("method") == "scratch") continue;
      const std::string scope = "tier=" + a.label("tier") + "/method=" + a.label("method");
      if (!by_scope.count(scope)) scopes.push_back(scope);
      auto& entries = by_scope[scope];
      const double l = std::stod(a.label("lambda"));
      auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == l; });
      if (it == entries.end()) {
        entries.push_back({l, {}});
        it = entries.end() - 1;
      }
      it->second.push_back(a.metric("final_validation"));
    }
    for (const auto& scope : scopes) {
      double best = -std::numeric_limits<double>::infinity();
      double chosen = 0.0;
      for (const auto& [l, vals] : by_scope[scope]) {
        const double mean = mean_and_ci(vals).first;
        if (mean > best) {
          best = mean;
          chosen = l;
        }
      }
      result.selections.push_back({scope + "/lambda", format_number(chosen)});
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (options.out_dir.empty()) throw ConfigError("run_experiment: no output directory");
  std::filesystem::create_directories(options.out_dir);

  ExperimentResult result;
  result.config = config;
  result.dir = options.out_dir;

  Context ctx;
  ctx.config = &config;
  ctx.env = envs::make_env(config.env);
  ctx.validation = envs::make_instance_set(envs::InstanceRole::Validation, config.validation_size, config.master_seed);
  ctx.test = envs::make_instance_set(envs::InstanceRole::Test, config.test_size, config.master_seed);
  try {
    prepare_experts(ctx, options.out_dir, options.quiet);
  } catch (const std::exception& e) {
    ctx.expert_error = e.what();
  }
  result.expert_reference = ctx.reference;
  const std::string main_tier = config.kind == ExperimentKind::Kickstart ? config.kickstart.tiers.front() : config.expert.tier;
  if (ctx.reference.count(main_tier)) result.expert_test_mean = ctx.reference.at(main_tier);

  std::vector<ArmPlan> plans = plan_arms(config);
  if (!options.arm_filter.empty()) {
    std::erase_if(plans, [&](const ArmPlan& p) {
      return std::none_of(options.arm_filter.begin(), options.arm_filter.end(),
                          [&](const std::string& f) { return p.id.find(f) != std::string::npos; });
    });
  }
  result.arms.resize(plans.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::size_t finished = 0;
  auto worker = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) {
      const ArmPlan& plan = plans[i];
      ArmResult& out = result.arms[i];
      out.id = plan.id;
      out.labels = plan.labels;
      out.seed_index = plan.seed_index;
      out.seed = derive_seed(config.master_seed, plan.id);
      const auto start = std::chrono::steady_clock::now();
      try {
        const bool needs_tier = ctx.experts.count(config.kind == ExperimentKind::Kickstart
                                                      ? find_label(plan.labels, "tier")
                                                      : config.expert.tier) > 0;
        if (!needs_tier) throw std::runtime_error("expert unavailable: " + ctx.expert_error);
        if (offline_kind(config.kind)) run_offline(ctx, plan, out.seed, out);
        else if (config.kind == ExperimentKind::Dagger) run_dagger(ctx, plan, out.seed, out);
        else run_kickstart(ctx, plan, out.seed, out);
      } catch (const std::exception& e) {
        out.error = e.what();
        if (out.error.empty()) out.error = "unknown failure";
      }
      if (!options.quiet) {
        std::lock_guard lock(log_mutex);
        ++finished;
        std::fprintf(stderr, "[%zu/%zu] %s %s (%.1fs)\n", finished, plans.size(), plan.id.c_str(),
                     out.ok() ? "ok" : ("FAILED: " + out.error).c_str(),
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, plans.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  compute_selections(config, result);

  // Artifacts: written only after every arm finished, always in plan order.
  const auto& dir = options.out_dir;
  const auto label_keys = ordered_keys(result.arms, &ArmResult::labels);
  const auto metric_keys = ordered_keys(result.arms, &ArmResult::metrics);
  write_text(dir / "results.csv", results_csv(result.arms, label_keys, metric_keys));
  write_text(dir / "curves.csv", curves_csv(result.arms));
  write_text(dir / "returns.csv", returns_csv(result.arms, ctx.test));
  std::string sel = "scope,value\n";
  for (const auto& [k, v] : result.selections) sel += csv_escape(k) + "," + v + "\n";
  write_text(dir / "selections.csv", sel);
  std::filesystem::create_directories(dir / "arms");
  for (const ArmResult& a : result.arms) {
    const std::vector<ArmResult> one{a};
    const auto arm_dir = dir / "arms" / safe_name(a.id);
    std::filesystem::create_directories(arm_dir);
    write_text(arm_dir / "result.csv", results_csv(one, ordered_keys(one, &ArmResult::labels),
                                                   ordered_keys(one, &ArmResult::metrics)));
    write_text(arm_dir / "curve.csv", curves_csv(one));
  }

  nlohmann::ordered_json manifest;
  manifest["format"] = "apc-artifact";
  manifest["version"] = kVersion;
  manifest["name"] = config.name;
  manifest["kind"] = kind_name(config.kind);
  manifest["env"] = config.env;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config.hash()));
  manifest["config_hash"] = hash;
  manifest["config"] = config.canonical();
  manifest["master_seed"] = config.master_seed;
  manifest["validation_seeds"] = ctx.validation.seeds;
  manifest["test_seeds"] = ctx.test.seeds;
  nlohmann::ordered_json ref;
  for (const auto& [tier, v] : ctx.reference) ref[tier] = format_number(v);
  manifest["expert_test_mean"] = ref;
  manifest["expert_error"] = ctx.expert_error;
  manifest["label_columns"] = label_keys;
  manifest["metric_columns"] = metric_keys;
  nlohmann::ordered_json arms = nlohmann::ordered_json::array();
  for (const ArmResult& a : result.arms) {
    arms.push_back({{"id", a.id}, {"seed", std::to_string(a.seed)}, {"status", a.ok() ? "ok" : "failed"},
                    {"error", a.error}});
  }
  manifest["arms"] = arms;
  manifest["files"] = {"results.csv", "curves.csv", "returns.csv", "selections.csv"};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  emit_report(dir);
  return result;
}

}  // namespace apc::bench
