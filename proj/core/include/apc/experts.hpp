#pragma once

// Experts: policies that can be queried at any state, including synthetic
// perturbed states that never occur in a rollout.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "apc/envs.hpp"
#include "apc/numcore.hpp"
#include "apc/policy.hpp"

namespace apc::experts {

using numcore::Matrix;
using numcore::Vector;
using policy::BatchHeads;
using policy::GaussianHead;
using policy::ObsBatch;

class RiccatiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RiccatiSolution {
  Matrix p;     // value matrix: cost-to-go from s is s'Ps
  Matrix gain;  // optimal action is -gain * s
  int iterations = 0;
};

/// Fixed point of P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA, iterated from P = Q
/// until the largest entry change is below `tolerance`.
RiccatiSolution riccati_solve(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                              double tolerance = 1e-12, int max_iterations = 1000000);

double spectral_radius(const Matrix& m);

class Expert : public policy::Actor {
 public:
  virtual std::string name() const = 0;
};

/// mu_E(s) = -K s with a constant native sigma; consumes the full state.
class LqrExpert final : public Expert {
 public:
  LqrExpert(const envs::LqrConfig& config, double native_sigma = 0.2);

  BatchHeads heads(const ObsBatch& batch) const override;
  std::string name() const override { return "lqr"; }

  const Matrix& gain() const { return solution_.gain; }
  const Matrix& value_matrix() const { return solution_.p; }
  double native_sigma() const { return native_sigma_; }
  /// Predicted undiscounted cost-to-go s'Ps.
  double predicted_cost(const Vector& state) const;

 private:
  RiccatiSolution solution_;
  double native_sigma_;
};

/// A frozen trained network acting as an expert.
class PolicyExpert final : public Expert {
 public:
  explicit PolicyExpert(policy::PolicyNet net, std::string name = "policy")
      : net_(std::move(net)), name_(std::move(name)) {}

  BatchHeads heads(const ObsBatch& batch) const override { return net_.forward(batch); }
  std::string name() const override { return name_; }
  const policy::PolicyNet& net() const { return net_; }

 private:
  policy::PolicyNet net_;
  std::string name_;
};

enum class Tier { Low, Medium, High };

const char* tier_name(Tier tier);
Tier parse_tier(const std::string& text);
double tier_fraction(Tier tier);  // 0.25 / 0.50 / 1.00

struct ExpertCheckpoint {
  std::uint64_t env_steps = 0;
  double validation_mean = 0.0;
  std::vector<double> params;
};

struct ExpertTier {
  Tier tier = Tier::High;
  double target_fraction = 1.0;
  double measured = 0.0;           // validation mean of the chosen checkpoint
  double measured_fraction = 0.0;  // measured / converged
  std::uint64_t env_steps = 0;
  policy::PolicyNet policy;
};

struct ActorCriticConfig {
  std::size_t num_envs = 16;
  std::size_t n_step = 5;
  double discount = 0.99;
  double policy_learning_rate = 3e-4;
  double critic_learning_rate = 3e-4;
  double entropy_bonus = 1e-3;
  std::vector<std::size_t> policy_torso = {64, 64};
  std::vector<std::size_t> critic_torso = {64, 64};
};

struct ExpertTrainingConfig {
  ActorCriticConfig actor_critic;
  std::uint64_t total_env_steps = 1'000'000;
  std::uint64_t eval_every_env_steps = 10'000;
  std::size_t validation_size = 50;
  double tier_tolerance = 0.10;  // relative
};

struct TrainedExperts {
  double converged = 0.0;  // best validation mean over the run
  std::vector<ExpertCheckpoint> history;
  std::vector<ExpertTier> tiers;
  std::vector<std::string> failures;  // tiers that could not be matched
};

/// Advantage actor-critic on `env`; keeps the first checkpoint whose validation
/// mean (mean actions) lands within tier_tolerance of each target fraction of
/// the best validation mean seen.
TrainedExperts train_expert(const envs::Environment& env, const std::vector<Tier>& tiers,
                            const ExpertTrainingConfig& config, std::uint64_t seed);

/// Checkpoint layout: policy checkpoint whose extra metadata holds
/// {"tier", "measured", "measured_fraction", "env_steps", "env_config_hash"}.
void save_expert_tier(const std::filesystem::path& path, const ExpertTier& tier,
                      std::uint64_t env_config_hash);
ExpertTier load_expert_tier(const std::filesystem::path& path, std::uint64_t* env_config_hash = nullptr);

}  // namespace apc::experts
