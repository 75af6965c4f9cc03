#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "apc/bench.hpp"

namespace apc::bench {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Splits a scalar or array body into items; returns whether each was quoted.
void split_items(const std::string& body, int line, std::vector<std::string>& items, std::vector<bool>& quoted) {
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
    if (i >= body.size()) break;
    if (body[i] == '"') {
      std::string s;
      ++i;
      while (i < body.size() && body[i] != '"') {
        if (body[i] == '\\' && i + 1 < body.size()) ++i;
        s += body[i++];
      }
      if (i >= body.size()) fail(line, "unterminated string");
      ++i;
      items.push_back(s);
      quoted.push_back(true);
    } else {
      const auto end = body.find(',', i);
      const std::string raw = trim(body.substr(i, end == std::string::npos ? std::string::npos : end - i));
      if (raw.empty()) fail(line, "empty value");
      items.push_back(raw);
      quoted.push_back(false);
      i = end == std::string::npos ? body.size() : end;
    }
    while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
    if (i < body.size()) {
      if (body[i] != ',') fail(line, "expected ',' between array items");
      ++i;
    }
  }
}

double to_number(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: " + text);
  }
  if (used != text.size() || !std::isfinite(v)) throw ConfigError("key '" + key + "': not a number: " + text);
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) fail(line, "empty section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(line, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.values_.count(full)) fail(line, "duplicate key '" + full + "'");
    std::string body = trim(s.substr(eq + 1));
    Value v;
    v.line = line;
    if (!body.empty() && body.front() == '[') {
      if (body.back() != ']') fail(line, "arrays must close on the same line");
      v.is_array = true;
      body = body.substr(1, body.size() - 2);
    }
    split_items(body, line, v.items, v.quoted);
    if (!v.is_array && v.items.size() != 1) fail(line, "expected exactly one value for '" + full + "'");
    out.values_[full] = std::move(v);
  }
  return out;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::string> ConfigFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

const ConfigFile::Value& ConfigFile::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string ConfigFile::get_string(const std::string& key) const {
  const Value& v = at(key);
  if (v.is_array || !v.quoted[0]) throw ConfigError("key '" + key + "' must be a quoted string");
  return v.items[0];
}

double ConfigFile::get_number(const std::string& key) const {
  const Value& v = at(key);
  if (v.is_array || v.quoted[0]) throw ConfigError("key '" + key + "' must be a number");
  return to_number(v.items[0], key);
}

bool ConfigFile::get_bool(const std::string& key) const {
  const Value& v = at(key);
  if (v.is_array || v.quoted[0] || (v.items[0] != "true" && v.items[0] != "false")) {
    throw ConfigError("key '" + key + "' must be true or false");
  }
  return v.items[0] == "true";
}

std::vector<double> ConfigFile::get_numbers(const std::string& key) const {
  const Value& v = at(key);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.items.size(); ++i) {
    if (v.quoted[i]) throw ConfigError("key '" + key + "' must hold numbers");
    out.push_back(to_number(v.items[i], key));
  }
  return out;
}

std::vector<std::string> ConfigFile::get_strings(const std::string& key) const {
  const Value& v = at(key);
  for (bool q : v.quoted) {
    if (!q) throw ConfigError("key '" + key + "' must hold quoted strings");
  }
  return v.items;
}

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::OfflineSweep: return "offline_sweep";
    case ExperimentKind::NoiseGrid: return "noise_grid";
    case ExperimentKind::SigmaSAblation: return "sigma_s_ablation";
    case ExperimentKind::Compression: return "compression";
    case ExperimentKind::Privileged: return "privileged";
    case ExperimentKind::Dagger: return "dagger";
    case ExperimentKind::Kickstart: return "kickstart";
  }
  return "?";
}

std::vector<ExperimentKind> all_kinds() {
  return {ExperimentKind::OfflineSweep, ExperimentKind::NoiseGrid, ExperimentKind::SigmaSAblation,
          ExperimentKind::Compression,  ExperimentKind::Privileged, ExperimentKind::Dagger,
          ExperimentKind::Kickstart};
}

ExperimentKind parse_kind(const std::string& text) {
  for (ExperimentKind k : all_kinds()) {
    if (text == kind_name(k)) return k;
  }
  throw ConfigError("unknown experiment kind: " + text);
}

std::string torso_to_string(const std::vector<std::size_t>& torso) {
  if (torso.empty()) return "linear";
  std::string out;
  for (std::size_t i = 0; i < torso.size(); ++i) out += (i ? "x" : "") + std::to_string(torso[i]);
  return out;
}

std::vector<std::size_t> parse_torso(const std::string& text) {
  if (text == "linear") return {};
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    try {
      const long v = std::stol(item);
      if (v <= 0) throw ConfigError("torso widths must be positive: " + text);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ConfigError("bad torso: " + text);
    }
  }
  if (out.empty()) throw ConfigError("bad torso: " + text);
  return out;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

namespace {

std::size_t to_count(double v, const std::string& key) {
  if (v < 0.0 || std::floor(v) != v) throw ConfigError("key '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

template <typename T, typename F>
std::vector<T> map_all(const std::vector<std::string>& in, F f) {
  std::vector<T> out;
  for (const auto& s : in) out.push_back(f(s));
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const ConfigFile& f) {
  ExperimentConfig c;
  std::set<std::string> known;
  auto str = [&](const std::string& k, std::string& dst) {
    known.insert(k);
    if (f.has(k)) dst = f.get_string(k);
  };
  auto num = [&](const std::string& k, double& dst) {
    known.insert(k);
    if (f.has(k)) dst = f.get_number(k);
  };
  auto count = [&](const std::string& k, auto& dst) {
    known.insert(k);
    if (f.has(k)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(to_count(f.get_number(k), k));
  };
  auto flag = [&](const std::string& k, bool& dst) {
    known.insert(k);
    if (f.has(k)) dst = f.get_bool(k);
  };
  auto nums = [&](const std::string& k, std::vector<double>& dst) {
    known.insert(k);
    if (f.has(k)) dst = f.get_numbers(k);
  };
  auto strs = [&](const std::string& k, std::vector<std::string>& dst) {
    known.insert(k);
    if (f.has(k)) dst = f.get_strings(k);
  };

  std::string kind;
  str("kind", kind);
  if (kind.empty()) throw ConfigError("missing key 'kind'");
  c.kind = parse_kind(kind);
  str("name", c.name);
  str("env", c.env);
  count("master_seed", c.master_seed);
  count("seeds", c.seeds);
  std::vector<std::string> methods;
  strs("methods", methods);
  if (!methods.empty()) c.methods = map_all<cloning::Method>(methods, cloning::parse_method);

  std::vector<double> ns;
  nums("dataset.n_trajectories", ns);
  if (!ns.empty()) {
    c.n_trajectories.clear();
    for (double v : ns) c.n_trajectories.push_back(to_count(v, "dataset.n_trajectories"));
  }
  nums("dataset.expert_noise", c.expert_noise);
  std::string mode = c.dataset_mode == data::DatasetMode::Full ? "full" : "short";
  str("dataset.mode", mode);
  if (mode == "full") c.dataset_mode = data::DatasetMode::Full;
  else if (mode == "short") c.dataset_mode = data::DatasetMode::Short;
  else throw ConfigError("dataset.mode must be \"full\" or \"short\"");
  count("dataset.short_length", c.short_length);

  num("augment.apc_sigma_s", c.apc_sigma_s);
  num("augment.naive_sigma_s", c.naive_sigma_s);
  count("augment.m", c.m);
  count("augment.grid_shift", c.grid_shift);
  flag("augment.perturb_common", c.perturb_common);
  flag("augment.perturb_privileged", c.perturb_privileged);
  nums("augment.sigma_s_grid", c.sigma_s_grid);

  num("train.learning_rate", c.train.learning_rate);
  count("train.batch_size", c.train.batch_size);
  count("train.iterations", c.train.max_iterations);
  count("train.eval_every", c.train.eval_every);
  count("train.patience", c.train.patience);
  num("train.student_sigma", c.train.student_sigma);

  str("student.observation", c.observation);
  std::string torso = torso_to_string(c.torso);
  str("student.torso", torso);
  c.torso = parse_torso(torso);
  std::vector<std::string> torsos;
  strs("student.torsos", torsos);
  c.torsos = map_all<std::vector<std::size_t>>(torsos, parse_torso);
  std::vector<std::string> variants;
  strs("student.variants", variants);
  if (!variants.empty()) c.variants = map_all<cloning::ImageVariant>(variants, cloning::parse_variant);

  count("eval.validation_size", c.validation_size);
  count("eval.test_size", c.test_size);
  nums("eval.student_noise", c.student_noise);

  str("expert.tier", c.expert.tier);
  num("expert.native_sigma", c.expert.native_sigma);
  count("expert.train_steps", c.expert.train_steps);
  count("expert.eval_every", c.expert.eval_every);
  num("expert.learning_rate", c.expert.learning_rate);

  nums("dagger.betas", c.dagger.betas);
  strs("dagger.objectives", c.dagger.objectives);
  count("dagger.env_steps", c.dagger.env_steps);
  count("dagger.eval_every", c.dagger.eval_every);
  count("dagger.batch_size", c.dagger.batch_size);
  num("dagger.updates_per_timestep", c.dagger.updates_per_timestep);
  num("dagger.error_buffer", c.dagger.error_buffer);
  count("dagger.replay_capacity", c.dagger.replay_capacity);
  num("dagger.learning_rate", c.dagger.learning_rate);
  num("dagger.threshold", c.dagger.threshold);

  strs("kickstart.tiers", c.kickstart.tiers);
  nums("kickstart.lambdas", c.kickstart.lambdas);
  count("kickstart.env_steps", c.kickstart.env_steps);
  count("kickstart.eval_every", c.kickstart.eval_every);
  num("kickstart.learning_rate", c.kickstart.learning_rate);
  num("kickstart.task_weight", c.kickstart.task_weight);

  for (const std::string& k : f.keys()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_file(ConfigFile::load(path));
}

void ExperimentConfig::validate() const {
  if (env != "lqr" && env != "point_mass") throw ConfigError("env must be \"lqr\" or \"point_mass\"");
  if (seeds == 0) throw ConfigError("seeds must be >= 1");
  if (methods.empty()) throw ConfigError("methods must not be empty");
  if (n_trajectories.empty() || std::count(n_trajectories.begin(), n_trajectories.end(), 0u)) {
    throw ConfigError("dataset.n_trajectories must hold positive counts");
  }
  for (double s : expert_noise) {
    if (!(s >= 0.0)) throw ConfigError("dataset.expert_noise must be >= 0");
  }
  if (!(apc_sigma_s >= 0.0) || !(naive_sigma_s >= 0.0) || m == 0) throw ConfigError("augment: bad sigma_s or m");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  (void)policy::ObservationSpec::parse(observation);
  if (validation_size == 0 || test_size == 0) throw ConfigError("eval set sizes must be positive");
  for (double s : student_noise) {
    if (!(s >= 0.0)) throw ConfigError("eval.student_noise must be >= 0");
  }
  (void)experts::parse_tier(expert.tier);
  for (const auto& t : kickstart.tiers) (void)experts::parse_tier(t);
  for (const auto& o : dagger.objectives) (void)online::parse_objective(o);
  for (double b : dagger.betas) {
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("dagger.betas must lie in [0, 1]");
  }
  for (double l : kickstart.lambdas) {
    if (!(l >= 0.0)) throw ConfigError("kickstart.lambdas must be >= 0");
  }
  if (kind == ExperimentKind::Compression && torsos.empty()) throw ConfigError("compression needs student.torsos");
  if (kind == ExperimentKind::SigmaSAblation && sigma_s_grid.empty()) throw ConfigError("empty augment.sigma_s_grid");
  if (kind == ExperimentKind::Kickstart && env != "point_mass") throw ConfigError("kickstart needs a trained expert (point_mass)");
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::string> lines;
  auto put = [&](const std::string& k, const std::string& v) { lines.push_back(k + "=" + v); };
  auto list = [](const auto& xs, auto fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s + "]";
  };
  auto n = [](double v) { return format_number(v); };
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  auto id = [](const std::string& s) { return s; };
  put("kind", kind_name(kind));
  put("env", env);
  put("master_seed", u(master_seed));
  put("seeds", u(seeds));
  put("methods", list(methods, [](cloning::Method m) { return std::string(cloning::method_name(m)); }));
  put("dataset.n_trajectories", list(n_trajectories, u));
  put("dataset.expert_noise", list(expert_noise, n));
  put("dataset.mode", dataset_mode == data::DatasetMode::Full ? "full" : "short");
  put("dataset.short_length", u(short_length));
  put("augment.apc_sigma_s", n(apc_sigma_s));
  put("augment.naive_sigma_s", n(naive_sigma_s));
  put("augment.m", u(m));
  put("augment.grid_shift", u(grid_shift));
  put("augment.perturb_common", perturb_common ? "true" : "false");
  put("augment.perturb_privileged", perturb_privileged ? "true" : "false");
  put("augment.sigma_s_grid", list(sigma_s_grid, n));
  put("train.learning_rate", n(train.learning_rate));
  put("train.batch_size", u(train.batch_size));
  put("train.iterations", u(train.max_iterations));
  put("train.eval_every", u(train.eval_every));
  put("train.patience", u(train.patience));
  put("train.student_sigma", n(train.student_sigma));
  put("student.observation", policy::ObservationSpec::parse(observation).to_string());
  put("student.torso", torso_to_string(torso));
  put("student.torsos", list(torsos, torso_to_string));
  put("student.variants", list(variants, [](cloning::ImageVariant v) { return std::string(cloning::variant_name(v)); }));
  put("eval.validation_size", u(validation_size));
  put("eval.test_size", u(test_size));
  put("eval.student_noise", list(student_noise, n));
  put("expert.tier", expert.tier);
  put("expert.native_sigma", n(expert.native_sigma));
  put("expert.train_steps", u(expert.train_steps));
  put("expert.eval_every", u(expert.eval_every));
  put("expert.learning_rate", n(expert.learning_rate));
  put("dagger.betas", list(dagger.betas, n));
  put("dagger.objectives", list(dagger.objectives, id));
  put("dagger.env_steps", u(dagger.env_steps));
  put("dagger.eval_every", u(dagger.eval_every));
  put("dagger.batch_size", u(dagger.batch_size));
  put("dagger.updates_per_timestep", n(dagger.updates_per_timestep));
  put("dagger.error_buffer", n(dagger.error_buffer));
  put("dagger.replay_capacity", u(dagger.replay_capacity));
  put("dagger.learning_rate", n(dagger.learning_rate));
  put("dagger.threshold", n(dagger.threshold));
  put("kickstart.tiers", list(kickstart.tiers, id));
  put("kickstart.lambdas", list(kickstart.lambdas, n));
  put("kickstart.env_steps", u(kickstart.env_steps));
  put("kickstart.eval_every", u(kickstart.eval_every));
  put("kickstart.learning_rate", n(kickstart.learning_rate));
  put("kickstart.task_weight", n(kickstart.task_weight));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

}  // namespace apc::bench
