#include "apc/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "apc/random.hpp"

namespace apc::numcore {

void check_dim(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    throw ShapeError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                     ", got " + std::to_string(actual));
  }
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

void check_finite(const Matrix& values, const char* what) {
  if (!values.allFinite()) throw NumericError(std::string(what) + ": non-finite value");
}

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ShapeError("MlpSpec: dimensions must be >= 1");
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw ShapeError("MlpSpec: hidden sizes must be >= 1");
  }
}

std::size_t MlpSpec::layer_input(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_sizes[layer - 1];
}

std::size_t MlpSpec::layer_output(std::size_t layer) const {
  return layer == hidden_sizes.size() ? output_dim : hidden_sizes[layer];
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) n += layer_output(l) * (layer_input(l) + 1);
  return n;
}

MlpParams::MlpParams(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  flat_.assign(spec_.param_count(), 0.0);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    offsets_.push_back(offset);
    offset += spec_.layer_output(l) * (spec_.layer_input(l) + 1);
  }
}

MlpParams MlpParams::glorot(MlpSpec spec, std::uint64_t seed) {
  MlpParams p(std::move(spec));
  Rng rng(seed);
  for (std::size_t l = 0; l < p.spec_.num_layers(); ++l) {
    const double fan_in = static_cast<double>(p.spec_.layer_input(l));
    const double fan_out = static_cast<double>(p.spec_.layer_output(l));
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    auto w = p.weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -limit, limit);
  }
  return p;
}

std::size_t MlpParams::bias_offset(std::size_t layer) const {
  return offsets_[layer] + spec_.layer_output(layer) * spec_.layer_input(layer);
}

ConstMatrixMap MlpParams::weight(std::size_t layer) const {
  return ConstMatrixMap(flat_.data() + layer_offset(layer),
                        static_cast<Eigen::Index>(spec_.layer_output(layer)),
                        static_cast<Eigen::Index>(spec_.layer_input(layer)));
}

MatrixMap MlpParams::weight(std::size_t layer) {
  return MatrixMap(flat_.data() + layer_offset(layer),
                   static_cast<Eigen::Index>(spec_.layer_output(layer)),
                   static_cast<Eigen::Index>(spec_.layer_input(layer)));
}

ConstVectorMap MlpParams::bias(std::size_t layer) const {
  return ConstVectorMap(flat_.data() + bias_offset(layer),
                        static_cast<Eigen::Index>(spec_.layer_output(layer)));
}

VectorMap MlpParams::bias(std::size_t layer) {
  return VectorMap(flat_.data() + bias_offset(layer),
                   static_cast<Eigen::Index>(spec_.layer_output(layer)));
}

void MlpParams::assign(std::span<const double> values) {
  check_dim(values.size(), flat_.size(), "MlpParams::assign");
  std::copy(values.begin(), values.end(), flat_.begin());
}

Matrix mlp_forward(const MlpParams& params, const Matrix& input, ForwardTape* tape) {
  const MlpSpec& spec = params.spec();
  check_dim(static_cast<std::size_t>(input.cols()), spec.input_dim, "mlp_forward input");
  check_finite(input, "mlp_forward input");

  if (tape != nullptr) {
    tape->layer_inputs.clear();
    tape->pre_activations.clear();
  }
  Matrix h = input;
  const std::size_t last = spec.num_layers() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Matrix z = h * params.weight(l).transpose();
    z.rowwise() += params.bias(l).transpose();
    if (tape != nullptr) tape->layer_inputs.push_back(std::move(h));
    if (l == last) {
      h = std::move(z);
    } else {
      h = z.unaryExpr([](double x) { return elu(x); });
      if (tape != nullptr) tape->pre_activations.push_back(std::move(z));
    }
  }
  check_finite(h, "mlp_forward output");
  return h;
}

Vector mlp_forward(const MlpParams& params, const Vector& input, ForwardTape* tape) {
  Matrix row = input.transpose();
  Matrix out = mlp_forward(params, row, tape);
  return out.row(0).transpose();
}

void mlp_backward(const MlpParams& params, const ForwardTape& tape, const Matrix& output_grad,
                  std::span<double> param_grad, Matrix* input_grad) {
  const MlpSpec& spec = params.spec();
  check_dim(param_grad.size(), params.size(), "mlp_backward param_grad");
  check_dim(tape.layer_inputs.size(), spec.num_layers(), "mlp_backward tape layers");
  check_dim(static_cast<std::size_t>(output_grad.cols()), spec.output_dim, "mlp_backward output_grad");
  check_dim(static_cast<std::size_t>(output_grad.rows()),
            static_cast<std::size_t>(tape.layer_inputs.front().rows()), "mlp_backward batch");

  Matrix delta = output_grad;
  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const auto in_dim = static_cast<Eigen::Index>(spec.layer_input(l));
    const auto out_dim = static_cast<Eigen::Index>(spec.layer_output(l));
    const std::size_t offset = params.layer_offset(l);
    MatrixMap gw(param_grad.data() + offset, out_dim, in_dim);
    VectorMap gb(param_grad.data() + offset + static_cast<std::size_t>(out_dim * in_dim), out_dim);
    gw.noalias() += delta.transpose() * tape.layer_inputs[l];
    gb += delta.colwise().sum().transpose();
    if (l == 0 && input_grad == nullptr) break;
    Matrix back = delta * params.weight(l);
    if (l == 0) {
      *input_grad = std::move(back);
      break;
    }
    const Matrix& z = tape.pre_activations[l - 1];
    delta = back.cwiseProduct(z.unaryExpr([](double x) { return elu_derivative(x); }));
  }
}

}  // namespace apc::numcore
