#include "apc/data.hpp"
#include "apc/evaluation.hpp"

namespace apc::bench {

EvalReport evaluate(const policy::Actor& actor, const envs::Environment& env,
                    const envs::InstanceSet& instances, double student_sigma, EvalMode mode) {
  if (instances.seeds.empty()) throw std::invalid_argument("evaluate: empty instance set");
  const auto noise = mode == EvalMode::MeanAction ? policy::NoiseOverride::fixed(0.0)
                                                  : policy::NoiseOverride::fixed(student_sigma);
  return EvalReport::from_returns(data::episode_returns(actor, env, instances.seeds, noise));
}

double expert_normalized(double value, double expert_value) {
  if (expert_value < 0.0) return value < 0.0 ? expert_value / value : 1.0;
  if (expert_value == 0.0) throw std::invalid_argument("expert_normalized: zero expert return");
  return value / expert_value;
}

}  // namespace apc::bench
