#include <cmath>
#include <numbers>

#include "apc/policy.hpp"

namespace apc::policy {
namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

GaussianHead make_head(const Vector& mean, const Vector& log_sigma_tilde) {
  numcore::check_dim(static_cast<std::size_t>(log_sigma_tilde.size()),
                     static_cast<std::size_t>(mean.size()), "make_head");
  GaussianHead h{mean, log_sigma_tilde, Vector(mean.size())};
  for (Eigen::Index i = 0; i < mean.size(); ++i) h.sigma[i] = softplus(log_sigma_tilde[i]) + kSigmaMin;
  return h;
}

GaussianHead with_fixed_sigma(const GaussianHead& head, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("with_fixed_sigma: sigma must be >= 0");
  GaussianHead h = head;
  h.sigma = Vector::Constant(head.mean.size(), sigma);
  return h;
}

Vector sample_action(const GaussianHead& head, Rng& rng) {
  Vector a(head.mean.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = head.sigma[i] == 0.0 ? head.mean[i] : head.mean[i] + head.sigma[i] * standard_normal(rng);
  }
  return a;
}

double log_prob(const GaussianHead& head, const Vector& action) {
  numcore::check_dim(static_cast<std::size_t>(action.size()), head.dim(), "log_prob action");
  double lp = 0.0;
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    const double z = (action[i] - head.mean[i]) / head.sigma[i];
    lp += -0.5 * z * z - std::log(head.sigma[i]) - kHalfLog2Pi;
  }
  return lp;
}

double entropy(const GaussianHead& head) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < head.sigma.size(); ++i) h += 0.5 + kHalfLog2Pi + std::log(head.sigma[i]);
  return h;
}

double analytic_cross_entropy(const GaussianHead& p, const GaussianHead& q) {
  numcore::check_dim(q.dim(), p.dim(), "analytic_cross_entropy");
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.mean.size(); ++i) {
    const double d = p.mean[i] - q.mean[i];
    const double qv = q.sigma[i] * q.sigma[i];
    h += kHalfLog2Pi + std::log(q.sigma[i]) + (p.sigma[i] * p.sigma[i] + d * d) / (2.0 * qv);
  }
  return h;
}

}  // namespace apc::policy
