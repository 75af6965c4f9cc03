#include "apc/envs.hpp"
#include "apc/random.hpp"

namespace apc::envs {

InstanceSet make_instance_set(InstanceRole role, std::size_t size, std::uint64_t master_seed) {
  if (size == 0) throw std::invalid_argument("make_instance_set: size must be >= 1");
  const std::uint64_t base = role == InstanceRole::Validation ? 0 : (std::uint64_t{1} << 32);
  InstanceSet set{role, {}};
  set.seeds.reserve(size);
  for (std::size_t i = 0; i < size; ++i) set.seeds.push_back(derive_seed(master_seed, base + i));
  return set;
}

std::unique_ptr<Environment> make_env(const std::string& id) {
  if (id == "lqr" || id == "lqr_2d") return std::make_unique<LqrEnv>();
  if (id == "point_mass" || id == "point_mass_nav") return std::make_unique<PointMassEnv>();
  throw std::invalid_argument("unknown environment id: " + id);
}

}  // namespace apc::envs
