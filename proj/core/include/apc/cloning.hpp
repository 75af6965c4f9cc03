#pragma once

// Offline policy cloning: BC, Naive ABC and APC share one weighted
// likelihood path and differ only in how the augmented rows are built.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "apc/data.hpp"
#include "apc/envs.hpp"
#include "apc/evaluation.hpp"
#include "apc/experts.hpp"
#include "apc/policy.hpp"
#include "apc/random.hpp"

namespace apc::cloning {

using envs::Observation;
using numcore::Matrix;
using numcore::Vector;

struct AugmentationSpec {
  double sigma_s = 0.0;
  std::size_t m = 10;
  bool relabel = true;          // true: APC, false: Naive ABC
  std::size_t grid_shift = 0;   // max shift in cells for the student's grid
  bool perturb_common = true;
  bool perturb_privileged = true;

  /// Any augmented rows at all.
  bool active() const { return sigma_s > 0.0 || grid_shift > 0; }
  void validate() const;
};

/// s' = s + delta with delta ~ N(0, sigma_s^2 I) on the selected primitive
/// channels; the observation (state, grid) is then rebuilt by `env`.
Observation perturb_state(const Observation& obs, const envs::Environment& env, double sigma_s, Rng& rng,
                          bool perturb_common = true, bool perturb_privileged = true);

/// Translate by (dx, dy) cells with zero fill; dy moves rows, dx columns.
Matrix shift_grid(const Matrix& grid, int dx, int dy);
/// Uniform shift on the (2k+1)^2 lattice.
Matrix grid_random_shift(const Matrix& grid, std::size_t max_shift, Rng& rng);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
  std::size_t rows = 0;
};

/// sum_i w_i H[N(target_mean_i, target_sigma_i) || pi(.|s_i)]. A zero target
/// sigma turns the cross-entropy into -log pi(target_mean_i | s_i).
LossResult weighted_cross_entropy(const policy::PolicyNet& policy, const policy::ObsBatch& obs,
                                  const Matrix& target_mean, const Matrix& target_sigma, const Vector& weights);

/// Valid steps of a set of chunks, flattened.
struct Minibatch {
  std::vector<Observation> observations;
  Matrix targets;  // expert means

  std::size_t size() const { return observations.size(); }
  static Minibatch from_chunks(const std::vector<const data::Chunk*>& chunks);
};

/// -mean log pi(mu_E(s) | s).
LossResult bc_loss(const policy::PolicyNet& policy, const Minibatch& batch);

/// Clean term plus M augmented copies per state, each weighted 1/(N M):
/// loss = -mean_i [log pi(a_i|s_i) + 1/M sum_j log pi(a'_ij|s'_ij)], with
/// a'_ij = mu_E(s'_ij) when relabelling and a_i otherwise.
LossResult apc_minibatch_loss(const policy::PolicyNet& policy, const experts::Expert& expert,
                              const envs::Environment& env, const Minibatch& batch, const AugmentationSpec& aug,
                              Rng& rng);

/// The augmented copies of a batch: (observations, relabelled targets).
Minibatch augment(const experts::Expert& expert, const envs::Environment& env, const Minibatch& batch,
                  const AugmentationSpec& aug, Rng& rng);

enum class Method { BC, NaiveABC, APC };
enum class ImageVariant { Plain, WithImage, ImageOnly };

const char* method_name(Method method);
Method parse_method(const std::string& text);
const char* variant_name(ImageVariant variant);
ImageVariant parse_variant(const std::string& text);

/// The augmentation a (method, variant) pair actually trains with.
AugmentationSpec effective_augmentation(Method method, ImageVariant variant, AugmentationSpec aug);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;  // chunks
  std::size_t max_iterations = 50'000;
  std::size_t eval_every = 1'000;
  std::size_t patience = 0;  // evaluations without improvement before stopping; 0 = never
  double student_sigma = 0.2;

  void validate() const;
};

struct CurvePoint {
  std::size_t iteration = 0;
  double validation_mean = 0.0;
  double validation_ci = 0.0;
};

struct OfflineResult {
  policy::PolicyNet best;
  std::size_t best_iteration = 0;
  double best_validation = 0.0;
  std::vector<CurvePoint> curve;
  bench::EvalReport test;
};

struct OfflineProblem {
  const data::ExpertDataset* dataset = nullptr;
  const experts::Expert* expert = nullptr;
  const envs::Environment* env = nullptr;
  const envs::InstanceSet* validation = nullptr;
  const envs::InstanceSet* test = nullptr;
};

/// Trains from the dataset, evaluating every eval_every iterations (and at
/// iteration 0) on the validation set with stochastic student noise, and keeps
/// the earliest best checkpoint; that checkpoint is then scored on the test set.
OfflineResult train_offline(Method method, ImageVariant variant, const OfflineProblem& problem,
                            const policy::PolicyConfig& student, const TrainConfig& config,
                            const AugmentationSpec& aug, std::uint64_t seed);

}  // namespace apc::cloning
