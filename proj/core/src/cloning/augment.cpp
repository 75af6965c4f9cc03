#include <stdexcept>

#include "apc/cloning.hpp"

namespace apc::cloning {

void AugmentationSpec::validate() const {
  if (!(sigma_s >= 0.0)) throw std::invalid_argument("augmentation: sigma_s must be >= 0");
  if (active() && m == 0) throw std::invalid_argument("augmentation: M must be >= 1");
}

Observation perturb_state(const Observation& obs, const envs::Environment& env, double sigma_s, Rng& rng,
                          bool perturb_common, bool perturb_privileged) {
  if (!(sigma_s >= 0.0)) throw std::invalid_argument("perturb_state: sigma_s must be >= 0");
  if (sigma_s == 0.0) return obs;
  Vector common = obs.common;
  Vector privileged = obs.privileged;
  if (perturb_common) {
    for (Eigen::Index k = 0; k < common.size(); ++k) common(k) += sigma_s * standard_normal(rng);
  }
  if (perturb_privileged) {
    for (Eigen::Index k = 0; k < privileged.size(); ++k) privileged(k) += sigma_s * standard_normal(rng);
  }
  return env.observe(common, privileged);
}

Matrix shift_grid(const Matrix& grid, int dx, int dy) {
  const auto rows = grid.rows();
  const auto cols = grid.cols();
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index sr = r - dy;
    if (sr < 0 || sr >= rows) continue;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index sc = c - dx;
      if (sc >= 0 && sc < cols) out(r, c) = grid(sr, sc);
    }
  }
  return out;
}

Matrix grid_random_shift(const Matrix& grid, std::size_t max_shift, Rng& rng) {
  if (max_shift == 0) return grid;
  if (2 * max_shift >= static_cast<std::size_t>(std::min(grid.rows(), grid.cols()))) {
    throw std::invalid_argument("grid_random_shift: max_shift must be < min(H, W) / 2");
  }
  const int k = static_cast<int>(max_shift);
  std::uniform_int_distribution<int> pick(-k, k);
  const int dx = pick(rng);
  const int dy = pick(rng);
  return shift_grid(grid, dx, dy);
}

Minibatch augment(const experts::Expert& expert, const envs::Environment& env, const Minibatch& batch,
                  const AugmentationSpec& aug, Rng& rng) {
  Minibatch out;
  const std::size_t n = batch.size();
  out.observations.reserve(n * aug.m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < aug.m; ++j) {
      Observation o = perturb_state(batch.observations[i], env, aug.sigma_s, rng, aug.perturb_common,
                                    aug.perturb_privileged);
      if (aug.grid_shift > 0 && o.has_grid()) o.grid = grid_random_shift(o.grid, aug.grid_shift, rng);
      out.observations.push_back(std::move(o));
    }
  }
  const auto rows = static_cast<Eigen::Index>(n * aug.m);
  if (aug.relabel) {
    out.targets = expert.heads(policy::ObsBatch::from(std::span<const Observation>(out.observations))).mean;
  } else {
    out.targets.resize(rows, batch.targets.cols());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < aug.m; ++j) {
        out.targets.row(static_cast<Eigen::Index>(i * aug.m + j)) = batch.targets.row(static_cast<Eigen::Index>(i));
      }
    }
  }
  return out;
}

}  // namespace apc::cloning
