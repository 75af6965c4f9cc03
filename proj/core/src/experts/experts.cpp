#include <fstream>

#include <json.hpp>

#include "apc/experts.hpp"

namespace apc::experts {

LqrExpert::LqrExpert(const envs::LqrConfig& config, double native_sigma)
    : solution_(riccati_solve(config.a, config.b, config.q, config.r)), native_sigma_(native_sigma) {
  if (spectral_radius(config.a - config.b * solution_.gain) >= 1.0) {
    throw RiccatiError("LqrExpert: closed loop is not stable");
  }
}

BatchHeads LqrExpert::heads(const ObsBatch& batch) const {
  numcore::check_dim(static_cast<std::size_t>(batch.state.cols()),
                     static_cast<std::size_t>(solution_.gain.cols()), "LqrExpert state channel");
  BatchHeads h;
  h.mean = -batch.state * solution_.gain.transpose();
  const double raw = native_sigma_ > policy::kSigmaMin
                         ? std::log(std::expm1(native_sigma_ - policy::kSigmaMin))
                         : -50.0;
  h.raw = Matrix::Constant(h.mean.rows(), h.mean.cols(), raw);
  h.sigma = Matrix::Constant(h.mean.rows(), h.mean.cols(), native_sigma_);
  return h;
}

double LqrExpert::predicted_cost(const Vector& state) const {
  return state.dot(solution_.p * state);
}

const char* tier_name(Tier tier) {
  switch (tier) {
    case Tier::Low: return "low";
    case Tier::Medium: return "medium";
    case Tier::High: return "high";
  }
  return "?";
}

Tier parse_tier(const std::string& text) {
  if (text == "low") return Tier::Low;
  if (text == "medium") return Tier::Medium;
  if (text == "high") return Tier::High;
  throw std::invalid_argument("unknown expert tier: " + text);
}

double tier_fraction(Tier tier) {
  switch (tier) {
    case Tier::Low: return 0.25;
    case Tier::Medium: return 0.50;
    case Tier::High: return 1.00;
  }
  return 1.0;
}

void save_expert_tier(const std::filesystem::path& path, const ExpertTier& tier,
                      std::uint64_t env_config_hash) {
  nlohmann::json meta;
  meta["tier"] = tier_name(tier.tier);
  meta["target_fraction"] = tier.target_fraction;
  meta["measured"] = tier.measured;
  meta["measured_fraction"] = tier.measured_fraction;
  meta["env_steps"] = tier.env_steps;
  meta["env_config_hash"] = env_config_hash;
  policy::save_policy(path, tier.policy, meta.dump());
}

ExpertTier load_expert_tier(const std::filesystem::path& path, std::uint64_t* env_config_hash) {
  std::string extra;
  ExpertTier tier;
  tier.policy = policy::load_policy(path, &extra);
  const auto meta = nlohmann::json::parse(extra);
  tier.tier = parse_tier(meta.at("tier").get<std::string>());
  tier.target_fraction = meta.at("target_fraction").get<double>();
  tier.measured = meta.at("measured").get<double>();
  tier.measured_fraction = meta.at("measured_fraction").get<double>();
  tier.env_steps = meta.at("env_steps").get<std::uint64_t>();
  if (env_config_hash) *env_config_hash = meta.at("env_config_hash").get<std::uint64_t>();
  return tier;
}

}  // namespace apc::experts
