#include <cmath>
#include <numbers>
#include <stdexcept>

#include "apc/cloning.hpp"

namespace apc::cloning {

LossResult weighted_cross_entropy(const policy::PolicyNet& policy, const policy::ObsBatch& obs,
                                  const Matrix& target_mean, const Matrix& target_sigma, const Vector& weights) {
  const auto n = static_cast<Eigen::Index>(obs.rows());
  if (n == 0) throw std::invalid_argument("loss: empty batch");
  numcore::check_dim(static_cast<std::size_t>(target_mean.rows()), static_cast<std::size_t>(n), "loss targets");
  numcore::check_dim(static_cast<std::size_t>(weights.size()), static_cast<std::size_t>(n), "loss weights");
  const bool has_sigma = target_sigma.size() > 0;

  policy::PolicyTape tape;
  const policy::BatchHeads heads = policy.forward(obs, &tape);
  const auto adim = heads.mean.cols();
  numcore::check_dim(static_cast<std::size_t>(target_mean.cols()), static_cast<std::size_t>(adim), "loss targets");
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);

  Matrix d_mean(n, adim);
  Matrix d_sigma(n, adim);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights(i);
    double row = 0.0;
    for (Eigen::Index k = 0; k < adim; ++k) {
      const double s = heads.sigma(i, k);
      const double d = target_mean(i, k) - heads.mean(i, k);
      const double p = has_sigma ? target_sigma(i, k) : 0.0;
      const double spread = p * p + d * d;
      row += std::log(s) + log_norm + spread / (2.0 * s * s);
      d_mean(i, k) = -w * d / (s * s);
      d_sigma(i, k) = w * (1.0 / s - spread / (s * s * s));
    }
    total += w * row;
  }
  LossResult out;
  out.loss = total;
  out.rows = static_cast<std::size_t>(n);
  out.grad.assign(policy.param_count(), 0.0);
  policy.backward(tape, heads, d_mean, d_sigma, out.grad);
  return out;
}

Minibatch Minibatch::from_chunks(const std::vector<const data::Chunk*>& chunks) {
  Minibatch b;
  std::size_t total = 0;
  Eigen::Index adim = 0;
  for (const data::Chunk* c : chunks) {
    total += c->valid;
    adim = c->targets.cols();
  }
  b.observations.reserve(total);
  b.targets.resize(static_cast<Eigen::Index>(total), adim);
  Eigen::Index row = 0;
  for (const data::Chunk* c : chunks) {
    for (std::size_t i = 0; i < c->valid; ++i) {
      b.observations.push_back(c->observations[i]);
      b.targets.row(row++) = c->targets.row(static_cast<Eigen::Index>(i));
    }
  }
  return b;
}

LossResult bc_loss(const policy::PolicyNet& policy, const Minibatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("bc_loss: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  return weighted_cross_entropy(policy, policy::ObsBatch::from(std::span<const Observation>(batch.observations)),
                                batch.targets, Matrix(), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

LossResult apc_minibatch_loss(const policy::PolicyNet& policy, const experts::Expert& expert,
                              const envs::Environment& env, const Minibatch& batch, const AugmentationSpec& aug,
                              Rng& rng) {
  if (batch.size() == 0) throw std::invalid_argument("apc_minibatch_loss: empty batch");
  aug.validate();
  if (aug.m == 0) throw std::invalid_argument("apc_minibatch_loss: M must be >= 1");
  const Minibatch extra = augment(expert, env, batch, aug, rng);

  const std::size_t n = batch.size();
  const std::size_t rows = n + extra.size();
  std::vector<Observation> all;
  all.reserve(rows);
  all.insert(all.end(), batch.observations.begin(), batch.observations.end());
  all.insert(all.end(), extra.observations.begin(), extra.observations.end());
  Matrix targets(static_cast<Eigen::Index>(rows), batch.targets.cols());
  targets.topRows(static_cast<Eigen::Index>(n)) = batch.targets;
  targets.bottomRows(static_cast<Eigen::Index>(extra.size())) = extra.targets;
  Vector weights(static_cast<Eigen::Index>(rows));
  weights.head(static_cast<Eigen::Index>(n)).setConstant(1.0 / static_cast<double>(n));
  weights.tail(static_cast<Eigen::Index>(extra.size())).setConstant(1.0 / static_cast<double>(n * aug.m));
  return weighted_cross_entropy(policy, policy::ObsBatch::from(std::span<const Observation>(all)), targets, Matrix(),
                                weights);
}

}  // namespace apc::cloning
