#pragma once

// Dense numerics for every network in the lab: row-major float64 matrices, a
// fixed-topology multilayer perceptron with an explicit forward tape for
// reverse-mode gradients, and Adam.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace apc::numcore {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ShapeError unless `actual == expected`.
void check_dim(std::size_t actual, std::size_t expected, const char* what);

/// Throws NumericError if any entry is NaN or infinite.
void check_finite(std::span<const double> values, const char* what);
void check_finite(const Matrix& values, const char* what);

enum class Activation { Elu };

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_sizes;
  std::size_t output_dim = 1;
  Activation activation = Activation::Elu;

  void validate() const;
  std::size_t num_layers() const { return hidden_sizes.size() + 1; }
  std::size_t layer_input(std::size_t layer) const;
  std::size_t layer_output(std::size_t layer) const;
  std::size_t param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

/// Layer weights and biases packed into one flat buffer.
///
/// Layer l occupies `W_l` (out x in, row-major) followed by `b_l` (out). The
/// flat buffer is the optimizer's and the gradient checker's view; the
/// per-layer maps alias it.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(MlpSpec spec);

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpParams glorot(MlpSpec spec, std::uint64_t seed);

  const MlpSpec& spec() const { return spec_; }
  std::span<double> flat() { return flat_; }
  std::span<const double> flat() const { return flat_; }
  std::size_t size() const { return flat_.size(); }

  ConstMatrixMap weight(std::size_t layer) const;
  MatrixMap weight(std::size_t layer);
  ConstVectorMap bias(std::size_t layer) const;
  VectorMap bias(std::size_t layer);

  /// Offset of layer `layer`'s weight block inside flat(); its bias follows it.
  std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }

  /// Replaces the flat buffer; length must equal spec().param_count().
  void assign(std::span<const double> values);

  bool operator==(const MlpParams& other) const {
    return spec_ == other.spec_ && flat_ == other.flat_;
  }

 private:
  std::size_t bias_offset(std::size_t layer) const;

  MlpSpec spec_;
  std::vector<double> flat_;
  std::vector<std::size_t> offsets_;
};

/// Everything the backward pass needs: the input to every layer and the
/// pre-activation of every hidden layer. Rows are batch samples.
struct ForwardTape {
  std::vector<Matrix> layer_inputs;
  std::vector<Matrix> pre_activations;
};

/// Batched forward pass; each row of `input` is one sample.
Matrix mlp_forward(const MlpParams& params, const Matrix& input, ForwardTape* tape = nullptr);
Vector mlp_forward(const MlpParams& params, const Vector& input, ForwardTape* tape = nullptr);

/// Reverse pass over a tape. Parameter gradients are accumulated (added) into
/// `param_grad`, summed over batch rows. When `input_grad` is non-null it
/// receives dL/dinput for every row.
void mlp_backward(const MlpParams& params, const ForwardTape& tape, const Matrix& output_grad,
                  std::span<double> param_grad, Matrix* input_grad = nullptr);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::size_t param_count)
      : config(cfg), first_moment(param_count, 0.0), second_moment(param_count, 0.0) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

// Checkpoints: 8-byte magic "APCMLP01", uint64 LE header length, UTF-8 JSON
// header, then spec.param_count() float64 little-endian values.

/// `metadata_json` must be a JSON object (or empty); it is stored under "meta".
void save_checkpoint(const std::filesystem::path& path, const MlpParams& params,
                     const std::string& metadata_json = "{}");

struct Checkpoint {
  MlpParams params;
  std::string metadata_json;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Raw byte image used by save_checkpoint; exposed so other modules can embed
/// several networks in one file.
std::string encode_params(const MlpParams& params, const std::string& metadata_json = "{}");
Checkpoint decode_params(const std::string& bytes);

}  // namespace apc::numcore
