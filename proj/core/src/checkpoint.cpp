#include "leafrust/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafrust/error.hpp"
#include "leafrust/json_io.hpp"

namespace leafrust {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'L', 'R', 'C', 'K', 'P', 'T', '\r', '\n'};
constexpr std::size_t kPrefix = sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

template <typename T>
void append(std::vector<std::uint8_t>& out, const T& value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T read_at(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void save_params(const ModelParams<float>& params, std::uint64_t seed,
                 const std::filesystem::path& path) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : params.entries()) {
    tensors.push_back({{"name", e.name}, {"shape", e.tensor->shape()}});
  }
  const nlohmann::json header{{"format", "leafrust-checkpoint"},
                              {"config", to_json(params.config)},
                              {"seed", seed},
                              {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> bytes(kMagic, kMagic + sizeof kMagic);
  append(bytes, kCheckpointVersion);
  append(bytes, static_cast<std::uint64_t>(text.size()));
  bytes.insert(bytes.end(), text.begin(), text.end());
  for (const auto& e : params.entries()) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(e.tensor->raw());
    bytes.insert(bytes.end(), p, p + e.tensor->size() * sizeof(float));
  }
  append(bytes, fnv1a(bytes.data(), bytes.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Checkpoint load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  if (bytes.size() < kPrefix + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError(where + "bad magic header");
  }
  const auto version = read_at<std::uint32_t>(bytes, sizeof kMagic);
  if (version != kCheckpointVersion) {
    throw FormatError(where + "unsupported version " + std::to_string(version));
  }
  const auto header_len = read_at<std::uint64_t>(bytes, sizeof kMagic + sizeof(std::uint32_t));
  if (header_len > bytes.size() - kPrefix - sizeof(std::uint64_t)) {
    throw FormatError(where + "truncated header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPrefix, bytes.begin() + kPrefix + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  }

  Checkpoint ck;
  try {
    if (header.at("format") != "leafrust-checkpoint") throw FormatError(where + "unknown format tag");
    ck.params = zero_params<float>(model_config_from_json(header.at("config")));
    ck.seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(where + "invalid config echo: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + "invalid config echo: " + e.what());
  }

  auto entries = ck.params.entries();
  const auto& listed = header.at("tensors");
  if (!listed.is_array() || listed.size() != entries.size()) {
    throw FormatError(where + "tensor table does not match the config");
  }
  std::size_t payload = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Shape shape;
    try {
      shape = listed[i].at("shape").get<Shape>();
      if (listed[i].at("name").get<std::string>() != entries[i].name) {
        throw FormatError(where + "unexpected tensor " + listed[i].at("name").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + "malformed tensor table: " + e.what());
    }
    if (shape != entries[i].tensor->shape()) {
      throw FormatError(where + "tensor " + entries[i].name + " shape " + shape_string(shape) +
                        " inconsistent with its config echo");
    }
    payload += entries[i].tensor->size() * sizeof(float);
  }
  const std::size_t expected = kPrefix + header_len + payload + sizeof(std::uint64_t);
  if (bytes.size() != expected) {
    throw FormatError(where + (bytes.size() < expected ? "truncated payload" : "trailing bytes") +
                      " (" + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected) + ")");
  }
  const auto stored = read_at<std::uint64_t>(bytes, expected - sizeof(std::uint64_t));
  if (stored != fnv1a(bytes.data(), expected - sizeof(std::uint64_t))) {
    throw FormatError(where + "checksum mismatch");
  }
  std::size_t offset = kPrefix + header_len;
  for (auto& e : entries) {
    std::memcpy(e.tensor->raw(), bytes.data() + offset, e.tensor->size() * sizeof(float));
    offset += e.tensor->size() * sizeof(float);
  }
  return ck;
}

Checkpoint load_params(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = load_params(path);
  const auto want = zero_params<float>(expected);
  const auto have_entries = ck.params.entries();
  const auto want_entries = want.entries();
  for (std::size_t i = 0; i < want_entries.size(); ++i) {
    if (have_entries[i].tensor->shape() != want_entries[i].tensor->shape()) {
      throw ValidationError("layer " + want_entries[i].layer + ": checkpoint tensor " +
                            want_entries[i].name + " has shape " +
                            shape_string(have_entries[i].tensor->shape()) + " but the model expects " +
                            shape_string(want_entries[i].tensor->shape()));
    }
  }
  if (!(ck.params.config == expected)) {
    throw ValidationError("checkpoint config " + to_json(ck.params.config).dump() +
                          " differs from expected " + to_json(expected).dump());
  }
  return ck;
}

}  // namespace leafrust
