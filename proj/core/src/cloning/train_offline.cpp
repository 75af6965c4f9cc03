#include <stdexcept>

#include "apc/cloning.hpp"

namespace apc::cloning {

const char* method_name(Method method) {
  switch (method) {
    case Method::BC: return "bc";
    case Method::NaiveABC: return "naive_abc";
    case Method::APC: return "apc";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "bc") return Method::BC;
  if (text == "naive_abc") return Method::NaiveABC;
  if (text == "apc") return Method::APC;
  throw std::invalid_argument("unknown method: " + text);
}

const char* variant_name(ImageVariant variant) {
  switch (variant) {
    case ImageVariant::Plain: return "plain";
    case ImageVariant::WithImage: return "with_image";
    case ImageVariant::ImageOnly: return "image_only";
  }
  return "?";
}

ImageVariant parse_variant(const std::string& text) {
  if (text == "plain") return ImageVariant::Plain;
  if (text == "with_image") return ImageVariant::WithImage;
  if (text == "image_only") return ImageVariant::ImageOnly;
  throw std::invalid_argument("unknown image variant: " + text);
}

AugmentationSpec effective_augmentation(Method method, ImageVariant variant, AugmentationSpec aug) {
  switch (variant) {
    case ImageVariant::ImageOnly:
      if (aug.grid_shift == 0) throw std::invalid_argument("image_only needs grid_shift > 0");
      aug.sigma_s = 0.0;
      aug.relabel = false;
      return aug;
    case ImageVariant::WithImage:
      if (aug.grid_shift == 0) throw std::invalid_argument("with_image needs grid_shift > 0");
      if (method == Method::BC) throw std::invalid_argument("bc has no state augmentation to combine with images");
      break;
    case ImageVariant::Plain:
      aug.grid_shift = 0;
      break;
  }
  if (method == Method::BC) aug.sigma_s = 0.0;
  aug.relabel = method == Method::APC;
  return aug;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size == 0 || max_iterations == 0 || eval_every == 0) {
    throw std::invalid_argument("TrainConfig: learning rate, batch size, iterations and eval period must be positive");
  }
}

OfflineResult train_offline(Method method, ImageVariant variant, const OfflineProblem& problem,
                            const policy::PolicyConfig& student, const TrainConfig& config,
                            const AugmentationSpec& aug_in, std::uint64_t seed) {
  config.validate();
  if (!problem.dataset || !problem.expert || !problem.env || !problem.validation || !problem.test) {
    throw std::invalid_argument("train_offline: incomplete problem");
  }
  const data::ExpertDataset& dataset = *problem.dataset;
  if (dataset.chunks.empty()) throw std::invalid_argument("train_offline: dataset is empty");
  const envs::Environment& env = *problem.env;
  if (variant != ImageVariant::Plain && !student.observation.grid) {
    throw std::invalid_argument("train_offline: image variants need a grid observation");
  }
  const AugmentationSpec aug = effective_augmentation(method, variant, aug_in);
  aug.validate();

  policy::PolicyNet net(student, env.spec(), derive_seed(seed, "student"));
  std::vector<double> params = net.flat();
  numcore::AdamState adam({config.learning_rate}, params.size());
  Rng batch_rng(derive_seed(seed, "minibatch"));
  Rng aug_rng(derive_seed(seed, "augment"));
  std::uniform_int_distribution<std::size_t> pick(0, dataset.chunks.size() - 1);

  OfflineResult out;
  out.best = net;
  std::size_t since_best = 0;
  auto evaluate_now = [&](std::size_t iteration) {
    const bench::EvalReport r =
        bench::evaluate(net, env, *problem.validation, config.student_sigma, bench::EvalMode::Stochastic);
    out.curve.push_back({iteration, r.mean, r.ci_half_width});
    if (out.curve.size() == 1 || r.mean > out.best_validation) {
      out.best_validation = r.mean;
      out.best_iteration = iteration;
      out.best = net;
      since_best = 0;
    } else {
      ++since_best;
    }
  };

  evaluate_now(0);
  std::vector<const data::Chunk*> picked(config.batch_size);
  for (std::size_t k = 1; k <= config.max_iterations; ++k) {
    for (auto& c : picked) c = &dataset.chunks[pick(batch_rng)];
    const Minibatch batch = Minibatch::from_chunks(picked);
    const LossResult loss = aug.active() ? apc_minibatch_loss(net, *problem.expert, env, batch, aug, aug_rng)
                                         : bc_loss(net, batch);
    numcore::adam_step(adam, params, loss.grad);
    net.assign(params);
    if (k % config.eval_every == 0 || k == config.max_iterations) {
      evaluate_now(k);
      if (config.patience > 0 && since_best >= config.patience) break;
    }
  }
  out.test = bench::evaluate(out.best, env, *problem.test, config.student_sigma, bench::EvalMode::Stochastic);
  return out;
}

}  // namespace apc::cloning
