#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apc/data.hpp"

namespace apc::data {
namespace {

constexpr char kMagic[8] = {'A', 'P', 'C', 'D', 'A', 'T', 'A', '1'};

std::uint64_t hash_doubles(const double* data, std::size_t n, std::uint64_t h) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(data), n * sizeof(double)), h);
}

void put_doubles(std::string& out, const double* data, std::size_t n) {
  out.append(reinterpret_cast<const char*>(data), n * sizeof(double));
}

void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  std::uint64_t u64() {
    std::uint64_t v = 0;
    take(&v, sizeof v);
    return v;
  }
  Vector vec(std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    take(v.data(), n * sizeof(double));
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("dataset file truncated");
  }
  void take(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string DatasetSpec::to_json() const {
  nlohmann::json j;
  j["n_trajectories"] = n_trajectories;
  j["expert_noise"] = expert_noise;
  j["mode"] = mode == DatasetMode::Full ? "full" : "short";
  j["short_length"] = short_length;
  return j.dump();
}

std::uint64_t ExpertDataset::content_hash() const {
  std::uint64_t h = fnv1a(spec.to_json());
  for (const Chunk& c : chunks) {
    h = fnv1a(std::to_string(c.valid), h);
    for (std::size_t i = 0; i < c.valid; ++i) {
      const Observation& o = c.observations[i];
      h = hash_doubles(o.state.data(), static_cast<std::size_t>(o.state.size()), h);
      h = hash_doubles(o.grid.data(), static_cast<std::size_t>(o.grid.size()), h);
    }
    h = hash_doubles(c.actions.data(), static_cast<std::size_t>(c.actions.size()), h);
    h = hash_doubles(c.targets.data(), static_cast<std::size_t>(c.targets.size()), h);
  }
  return h;
}

ExpertDataset build_dataset(const experts::Expert& expert, const envs::Environment& env,
                            const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.n_trajectories == 0) throw std::invalid_argument("build_dataset: n_trajectories must be >= 1");
  if (spec.expert_noise < 0.0) throw std::invalid_argument("build_dataset: expert noise must be >= 0");
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < spec.n_trajectories; ++i) seeds.push_back(derive_seed(derive_seed(seed, "dataset"), i));

  RolloutOptions options;
  options.noise = policy::NoiseOverride::fixed(spec.expert_noise);
  options.labeller = &expert;
  options.source = expert.name();

  std::vector<Trajectory> trajectories;
  if (spec.mode == DatasetMode::Full) {
    trajectories = rollouts(expert, env, seeds, options);
  } else {
    trajectories = rollouts(expert, env, std::span(seeds).first(1), options);
    RolloutOptions short_options = options;
    short_options.max_steps = spec.short_length > 0
                                  ? spec.short_length
                                  : static_cast<std::size_t>(env.spec().horizon) / 5;
    auto rest = rollouts(expert, env, std::span(seeds).subspan(1), short_options);
    for (Trajectory& t : rest) trajectories.push_back(std::move(t));
  }

  ExpertDataset ds;
  ds.spec = spec;
  ds.env_id = env.spec().id;
  for (const Trajectory& t : trajectories) ds.total_steps += t.size();
  ds.chunks = chunk_trajectories(trajectories);
  return ds;
}

void save_dataset(const std::filesystem::path& path, const ExpertDataset& dataset) {
  if (dataset.chunks.empty()) throw std::invalid_argument("save_dataset: empty dataset");
  const Observation& first = dataset.chunks.front().observations.front();
  const auto adim = static_cast<std::size_t>(dataset.chunks.front().actions.cols());
  nlohmann::json header;
  header["format"] = "apc-dataset";
  header["spec"] = nlohmann::json::parse(dataset.spec.to_json());
  header["env_id"] = dataset.env_id;
  header["action_dim"] = adim;
  header["common_dim"] = first.common.size();
  header["privileged_dim"] = first.privileged.size();
  header["chunk_count"] = dataset.chunks.size();
  header["total_steps"] = dataset.total_steps;
  const std::string text = header.dump();

  std::string out(kMagic, 8);
  put_u64(out, text.size());
  out += text;
  for (const Chunk& c : dataset.chunks) {
    put_u64(out, c.valid);
    for (std::size_t i = 0; i < c.valid; ++i) {
      const Observation& o = c.observations[i];
      put_doubles(out, o.common.data(), static_cast<std::size_t>(o.common.size()));
      put_doubles(out, o.privileged.data(), static_cast<std::size_t>(o.privileged.size()));
      const auto r = static_cast<Eigen::Index>(i);
      const Eigen::RowVectorXd a = c.actions.row(r);
      const Eigen::RowVectorXd y = c.targets.row(r);
      put_doubles(out, a.data(), adim);
      put_doubles(out, y.data(), adim);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

ExpertDataset load_dataset(const std::filesystem::path& path, const envs::Environment& env) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  Reader in(ss.str());
  if (in.str(8) != std::string(kMagic, 8)) throw std::runtime_error("load_dataset: bad magic");
  const auto header = nlohmann::json::parse(in.str(in.u64()));

  ExpertDataset ds;
  const auto& spec = header.at("spec");
  ds.spec.n_trajectories = spec.at("n_trajectories").get<std::size_t>();
  ds.spec.expert_noise = spec.at("expert_noise").get<double>();
  ds.spec.mode = spec.at("mode").get<std::string>() == "full" ? DatasetMode::Full : DatasetMode::Short;
  ds.spec.short_length = spec.at("short_length").get<std::size_t>();
  ds.env_id = header.at("env_id").get<std::string>();
  ds.total_steps = header.at("total_steps").get<std::size_t>();
  if (ds.env_id != env.spec().id) throw std::runtime_error("load_dataset: environment mismatch");
  const auto adim = header.at("action_dim").get<std::size_t>();
  const auto cdim = header.at("common_dim").get<std::size_t>();
  const auto pdim = header.at("privileged_dim").get<std::size_t>();
  const auto count = header.at("chunk_count").get<std::size_t>();

  for (std::size_t k = 0; k < count; ++k) {
    Chunk c;
    c.valid = in.u64();
    if (c.valid == 0 || c.valid > kChunkLength) throw std::runtime_error("load_dataset: bad chunk");
    c.actions = Matrix::Zero(kChunkLength, static_cast<Eigen::Index>(adim));
    c.targets = Matrix::Zero(kChunkLength, static_cast<Eigen::Index>(adim));
    for (std::size_t i = 0; i < c.valid; ++i) {
      const Vector common = in.vec(cdim);
      const Vector priv = in.vec(pdim);
      c.observations.push_back(env.observe(common, priv));
      c.actions.row(static_cast<Eigen::Index>(i)) = in.vec(adim).transpose();
      c.targets.row(static_cast<Eigen::Index>(i)) = in.vec(adim).transpose();
    }
    while (c.observations.size() < kChunkLength) c.observations.push_back(c.observations.back());
    ds.chunks.push_back(std::move(c));
  }
  if (!in.at_end()) throw std::runtime_error("load_dataset: trailing bytes");
  return ds;
}

}  // namespace apc::data
