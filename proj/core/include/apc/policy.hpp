#pragma once

// State-conditional diagonal Gaussian policies.
//
// A PolicyNet maps an observation to (mean, raw log-sigma); the standard
// deviation is softplus(raw) + kSigmaMin, so it never reaches zero.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apc/envs.hpp"
#include "apc/numcore.hpp"
#include "apc/random.hpp"

namespace apc::policy {

using numcore::Matrix;
using numcore::Vector;

inline constexpr double kSigmaMin = 1e-4;

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GaussianHead {
  Vector mean;
  Vector log_sigma_tilde;
  Vector sigma;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Builds a head from raw network outputs, applying the softplus floor.
GaussianHead make_head(const Vector& mean, const Vector& log_sigma_tilde);

/// Head with a fixed sigma (possibly 0); used for expert noise and evaluation.
GaussianHead with_fixed_sigma(const GaussianHead& head, double sigma);

/// mean + sigma * z with z ~ N(0, I); sigma == 0 returns the mean exactly.
Vector sample_action(const GaussianHead& head, Rng& rng);
double log_prob(const GaussianHead& head, const Vector& action);
double entropy(const GaussianHead& head);
/// H(p, q) = -E_{a~p} log q(a), in closed form.
double analytic_cross_entropy(const GaussianHead& p, const GaussianHead& q);

/// Student/evaluation noise override: nullopt keeps the policy's own sigma.
struct NoiseOverride {
  std::optional<double> sigma;

  static NoiseOverride native() { return {}; }
  static NoiseOverride fixed(double s) { return {s}; }
  GaussianHead apply(const GaussianHead& head) const {
    return sigma ? with_fixed_sigma(head, *sigma) : head;
  }
};

/// Which observation channels a network consumes, in this order:
/// state | common | privileged | encoded grid.
struct ObservationSpec {
  bool state = false;
  bool common = false;
  bool privileged = false;
  bool grid = false;

  static ObservationSpec full_state() { return {true, false, false, false}; }
  static ObservationSpec common_and_grid() { return {false, true, false, true}; }

  std::string to_string() const;
  static ObservationSpec parse(const std::string& text);
  bool operator==(const ObservationSpec&) const = default;
};

/// Column-stacked observation channels; row i is sample i.
struct ObsBatch {
  Matrix state;
  Matrix common;
  Matrix privileged;
  Matrix grid;  // flattened row-major H*W per row, or 0 columns

  std::size_t rows() const { return static_cast<std::size_t>(state.rows()); }
  static ObsBatch from(std::span<const envs::Observation> observations);
  static ObsBatch from(const std::vector<const envs::Observation*>& observations);
};

struct PolicyConfig {
  ObservationSpec observation = ObservationSpec::full_state();
  std::vector<std::size_t> torso = {32, 32};
  std::size_t grid_features = 64;

  bool operator==(const PolicyConfig&) const = default;
};

/// Per-row head outputs for a batch.
struct BatchHeads {
  Matrix mean;
  Matrix raw;    // log_sigma_tilde
  Matrix sigma;

  GaussianHead row(std::size_t i) const;
};

struct PolicyTape {
  numcore::ForwardTape torso;
  numcore::ForwardTape grid_encoder;
  Matrix grid_pre_activation;
  std::size_t vector_features = 0;
};

/// Anything that maps a batch of observations to Gaussian heads: students,
/// experts, frozen snapshots.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual BatchHeads heads(const ObsBatch& batch) const = 0;
  GaussianHead head(const envs::Observation& obs) const;
};

class PolicyNet : public Actor {
 public:
  PolicyNet() = default;
  PolicyNet(const PolicyConfig& config, const envs::EnvSpec& env, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  std::size_t action_dim() const { return action_dim_; }
  std::size_t param_count() const;

  /// Encoder parameters (grid channel only) followed by torso+head parameters.
  std::vector<double> flat() const;
  void assign(std::span<const double> values);

  GaussianHead forward(const envs::Observation& obs) const;
  BatchHeads forward(const ObsBatch& batch, PolicyTape* tape = nullptr) const;
  BatchHeads heads(const ObsBatch& batch) const override { return forward(batch); }

  /// Accumulates parameter gradients given dL/dmean and dL/dsigma per row.
  void backward(const PolicyTape& tape, const BatchHeads& heads, const Matrix& d_mean,
                const Matrix& d_sigma, std::span<double> param_grad) const;

  const numcore::MlpParams& torso() const { return torso_; }
  const numcore::MlpParams& grid_encoder() const { return grid_encoder_; }

  bool operator==(const PolicyNet& other) const {
    return config_ == other.config_ && torso_ == other.torso_ && grid_encoder_ == other.grid_encoder_;
  }

 private:
  Matrix vector_features(const ObsBatch& batch) const;

  PolicyConfig config_;
  std::size_t action_dim_ = 0;
  std::size_t state_dim_ = 0, common_dim_ = 0, privileged_dim_ = 0, grid_cells_ = 0;
  numcore::MlpParams grid_encoder_;
  numcore::MlpParams torso_;

  friend void save_policy(const std::filesystem::path&, const PolicyNet&, const std::string&);
  friend PolicyNet load_policy(const std::filesystem::path&, std::string*);
};

/// numcore checkpoint of the torso; the observation spec, channel widths and
/// any grid-encoder weights ride in the JSON header under "meta".
void save_policy(const std::filesystem::path& path, const PolicyNet& net,
                 const std::string& extra_metadata_json = "{}");
PolicyNet load_policy(const std::filesystem::path& path, std::string* extra_metadata_json = nullptr);

}  // namespace apc::policy
