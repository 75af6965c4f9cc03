#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apc/numcore.hpp"

namespace apc::numcore {
namespace {

constexpr char kMagic[8] = {'A', 'P', 'C', 'M', 'L', 'P', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  std::memcpy(&v, in.data() + pos, 8);
  return v;
}

}  // namespace

std::string encode_params(const MlpParams& params, const std::string& metadata_json) {
  const MlpSpec& spec = params.spec();
  nlohmann::json header;
  header["format"] = "apc-mlp";
  header["version"] = 1;
  header["spec"] = {{"input_dim", spec.input_dim},
                    {"hidden_sizes", spec.hidden_sizes},
                    {"output_dim", spec.output_dim},
                    {"activation", "elu"}};
  header["count"] = params.size();
  header["meta"] = metadata_json.empty() ? nlohmann::json::object()
                                         : nlohmann::json::parse(metadata_json);
  const std::string text = header.dump();

  std::string out(kMagic, 8);
  put_u64(out, text.size());
  out += text;
  const auto flat = params.flat();
  out.append(reinterpret_cast<const char*>(flat.data()), flat.size() * sizeof(double));
  return out;
}

Checkpoint decode_params(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (bytes.size() < 16 + header_len) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  if (header.at("format") != "apc-mlp") throw std::runtime_error("checkpoint: unknown format");

  MlpSpec spec;
  spec.input_dim = header.at("spec").at("input_dim").get<std::size_t>();
  spec.hidden_sizes = header.at("spec").at("hidden_sizes").get<std::vector<std::size_t>>();
  spec.output_dim = header.at("spec").at("output_dim").get<std::size_t>();
  const auto count = header.at("count").get<std::size_t>();
  check_dim(count, spec.param_count(), "checkpoint parameter count");

  const std::size_t body = 16 + header_len;
  if (bytes.size() != body + count * sizeof(double)) {
    throw std::runtime_error("checkpoint: body size mismatch");
  }
  Checkpoint ck{MlpParams(spec), header.at("meta").dump()};
  std::memcpy(ck.params.flat().data(), bytes.data() + body, count * sizeof(double));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const MlpParams& params,
                     const std::string& metadata_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  const std::string bytes = encode_params(params, metadata_json);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_params(ss.str());
}

}  // namespace apc::numcore
