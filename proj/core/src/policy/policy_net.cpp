#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apc/policy.hpp"

namespace apc::policy {

std::string ObservationSpec::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  add(state, "state");
  add(common, "common");
  add(privileged, "privileged");
  add(grid, "grid");
  return out;
}

ObservationSpec ObservationSpec::parse(const std::string& text) {
  ObservationSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, '+')) {
    if (item == "state") spec.state = true;
    else if (item == "common") spec.common = true;
    else if (item == "privileged") spec.privileged = true;
    else if (item == "grid") spec.grid = true;
    else throw std::invalid_argument("unknown observation channel: " + item);
  }
  if (!spec.state && !spec.common && !spec.privileged && !spec.grid) {
    throw std::invalid_argument("observation spec selects no channel");
  }
  return spec;
}

namespace {

template <typename Get>
ObsBatch stack(std::size_t n, Get get) {
  ObsBatch b;
  if (n == 0) throw numcore::ShapeError("ObsBatch: empty batch");
  const envs::Observation& first = get(0);
  const auto rows = static_cast<Eigen::Index>(n);
  b.state.resize(rows, first.state.size());
  b.common.resize(rows, first.common.size());
  b.privileged.resize(rows, first.privileged.size());
  b.grid.resize(rows, first.grid.size());
  for (std::size_t i = 0; i < n; ++i) {
    const envs::Observation& o = get(i);
    const auto r = static_cast<Eigen::Index>(i);
    b.state.row(r) = o.state.transpose();
    b.common.row(r) = o.common.transpose();
    b.privileged.row(r) = o.privileged.transpose();
    if (o.grid.size() > 0) {
      b.grid.row(r) = Eigen::Map<const Eigen::RowVectorXd>(o.grid.data(), o.grid.size());
    }
  }
  return b;
}

}  // namespace

ObsBatch ObsBatch::from(std::span<const envs::Observation> observations) {
  return stack(observations.size(), [&](std::size_t i) -> const envs::Observation& { return observations[i]; });
}

ObsBatch ObsBatch::from(const std::vector<const envs::Observation*>& observations) {
  return stack(observations.size(), [&](std::size_t i) -> const envs::Observation& { return *observations[i]; });
}

GaussianHead BatchHeads::row(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return GaussianHead{mean.row(r).transpose(), raw.row(r).transpose(), sigma.row(r).transpose()};
}

PolicyNet::PolicyNet(const PolicyConfig& config, const envs::EnvSpec& env, std::uint64_t seed)
    : config_(config),
      action_dim_(env.action_dim),
      state_dim_(env.state_dim),
      common_dim_(env.common_dim),
      privileged_dim_(env.privileged_dim),
      grid_cells_(env.grid_size * env.grid_size) {
  const ObservationSpec& o = config_.observation;
  if (o.grid && grid_cells_ == 0) throw envs::EnvError(env.id + ": policy wants a grid channel");
  if (o.privileged && privileged_dim_ == 0) throw envs::EnvError(env.id + ": no privileged channel");
  std::size_t in = (o.state ? state_dim_ : 0) + (o.common ? common_dim_ : 0) +
                   (o.privileged ? privileged_dim_ : 0);
  if (o.grid) {
    grid_encoder_ = numcore::MlpParams::glorot({grid_cells_, {}, config_.grid_features}, derive_seed(seed, "grid"));
    in += config_.grid_features;
  }
  torso_ = numcore::MlpParams::glorot({in, config_.torso, 2 * action_dim_}, derive_seed(seed, "torso"));
}

std::size_t PolicyNet::param_count() const { return grid_encoder_.size() + torso_.size(); }

std::vector<double> PolicyNet::flat() const {
  std::vector<double> out(grid_encoder_.flat().begin(), grid_encoder_.flat().end());
  out.insert(out.end(), torso_.flat().begin(), torso_.flat().end());
  return out;
}

void PolicyNet::assign(std::span<const double> values) {
  numcore::check_dim(values.size(), param_count(), "PolicyNet::assign");
  const std::size_t g = grid_encoder_.size();
  if (g > 0) grid_encoder_.assign(values.subspan(0, g));
  torso_.assign(values.subspan(g));
}

Matrix PolicyNet::vector_features(const ObsBatch& batch) const {
  const ObservationSpec& o = config_.observation;
  const auto rows = static_cast<Eigen::Index>(batch.rows());
  const std::size_t width = (o.state ? state_dim_ : 0) + (o.common ? common_dim_ : 0) +
                            (o.privileged ? privileged_dim_ : 0);
  Matrix x(rows, static_cast<Eigen::Index>(width));
  Eigen::Index col = 0;
  auto put = [&](bool on, const Matrix& m, std::size_t dim, const char* what) {
    if (!on) return;
    numcore::check_dim(static_cast<std::size_t>(m.cols()), dim, what);
    x.middleCols(col, m.cols()) = m;
    col += m.cols();
  };
  put(o.state, batch.state, state_dim_, "policy state channel");
  put(o.common, batch.common, common_dim_, "policy common channel");
  put(o.privileged, batch.privileged, privileged_dim_, "policy privileged channel");
  return x;
}

BatchHeads PolicyNet::forward(const ObsBatch& batch, PolicyTape* tape) const {
  Matrix x = vector_features(batch);
  const std::size_t vec = static_cast<std::size_t>(x.cols());
  if (config_.observation.grid) {
    numcore::check_dim(static_cast<std::size_t>(batch.grid.cols()), grid_cells_, "policy grid channel");
    Matrix pre = numcore::mlp_forward(grid_encoder_, batch.grid, tape ? &tape->grid_encoder : nullptr);
    Matrix joined(x.rows(), x.cols() + pre.cols());
    joined.leftCols(x.cols()) = x;
    joined.rightCols(pre.cols()) = pre.unaryExpr([](double v) { return numcore::elu(v); });
    if (tape) tape->grid_pre_activation = std::move(pre);
    x = std::move(joined);
  }
  if (tape) tape->vector_features = vec;
  Matrix out = numcore::mlp_forward(torso_, x, tape ? &tape->torso : nullptr);
  const auto a = static_cast<Eigen::Index>(action_dim_);
  BatchHeads h;
  h.mean = out.leftCols(a);
  h.raw = out.rightCols(a);
  h.sigma = h.raw.unaryExpr([](double v) { return softplus(v) + kSigmaMin; });
  return h;
}

GaussianHead Actor::head(const envs::Observation& obs) const {
  const envs::Observation* p = &obs;
  return heads(ObsBatch::from(std::vector<const envs::Observation*>{p})).row(0);
}

GaussianHead PolicyNet::forward(const envs::Observation& obs) const {
  const envs::Observation* p = &obs;
  return forward(ObsBatch::from(std::vector<const envs::Observation*>{p})).row(0);
}

void PolicyNet::backward(const PolicyTape& tape, const BatchHeads& heads, const Matrix& d_mean,
                         const Matrix& d_sigma, std::span<double> param_grad) const {
  numcore::check_dim(param_grad.size(), param_count(), "PolicyNet::backward");
  const auto a = static_cast<Eigen::Index>(action_dim_);
  Matrix d_out(d_mean.rows(), 2 * a);
  d_out.leftCols(a) = d_mean;
  d_out.rightCols(a) = d_sigma.cwiseProduct(heads.raw.unaryExpr([](double v) { return sigmoid(v); }));

  const std::size_t g = grid_encoder_.size();
  if (!config_.observation.grid) {
    numcore::mlp_backward(torso_, tape.torso, d_out, param_grad.subspan(g));
    return;
  }
  Matrix d_input;
  numcore::mlp_backward(torso_, tape.torso, d_out, param_grad.subspan(g), &d_input);
  const auto vec = static_cast<Eigen::Index>(tape.vector_features);
  Matrix d_features = d_input.rightCols(d_input.cols() - vec)
                          .cwiseProduct(tape.grid_pre_activation.unaryExpr(
                              [](double v) { return numcore::elu_derivative(v); }));
  numcore::mlp_backward(grid_encoder_, tape.grid_encoder, d_features, param_grad.subspan(0, g));
}

void save_policy(const std::filesystem::path& path, const PolicyNet& net,
                 const std::string& extra_metadata_json) {
  nlohmann::json meta;
  meta["kind"] = "gaussian_policy";
  meta["observation"] = net.config_.observation.to_string();
  meta["action_dim"] = net.action_dim_;
  meta["state_dim"] = net.state_dim_;
  meta["common_dim"] = net.common_dim_;
  meta["privileged_dim"] = net.privileged_dim_;
  meta["grid_cells"] = net.grid_cells_;
  meta["grid_features"] = net.config_.grid_features;
  meta["torso"] = net.config_.torso;
  std::vector<double> enc(net.grid_encoder_.flat().begin(), net.grid_encoder_.flat().end());
  meta["grid_encoder"] = enc;
  meta["extra"] = nlohmann::json::parse(extra_metadata_json.empty() ? "{}" : extra_metadata_json);
  numcore::save_checkpoint(path, net.torso_, meta.dump());
}

PolicyNet load_policy(const std::filesystem::path& path, std::string* extra_metadata_json) {
  numcore::Checkpoint ck = numcore::load_checkpoint(path);
  const auto meta = nlohmann::json::parse(ck.metadata_json);
  if (meta.value("kind", "") != "gaussian_policy") throw std::runtime_error("not a policy checkpoint");
  PolicyNet net;
  net.config_.observation = ObservationSpec::parse(meta.at("observation").get<std::string>());
  net.config_.torso = meta.at("torso").get<std::vector<std::size_t>>();
  net.config_.grid_features = meta.at("grid_features").get<std::size_t>();
  net.action_dim_ = meta.at("action_dim").get<std::size_t>();
  net.state_dim_ = meta.at("state_dim").get<std::size_t>();
  net.common_dim_ = meta.at("common_dim").get<std::size_t>();
  net.privileged_dim_ = meta.at("privileged_dim").get<std::size_t>();
  net.grid_cells_ = meta.at("grid_cells").get<std::size_t>();
  net.torso_ = std::move(ck.params);
  if (net.config_.observation.grid) {
    net.grid_encoder_ = numcore::MlpParams({net.grid_cells_, {}, net.config_.grid_features});
    net.grid_encoder_.assign(meta.at("grid_encoder").get<std::vector<double>>());
  }
  if (extra_metadata_json) *extra_metadata_json = meta.at("extra").dump();
  return net;
}

}  // namespace apc::policy
