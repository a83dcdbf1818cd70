#include "t2s/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "t2s/config.hpp"

namespace t2s {

namespace {

constexpr char kMagic[8] = {'T', '2', 'S', 'C', 'K', 'P', 'T', '\0'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
  }
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw CheckpointError("checkpoint truncated");
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    value |= static_cast<U>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  }
  pos += sizeof(U);
  return value;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format"] = "tree2seq-checkpoint";
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : config_items(ckpt.config)) config[k] = v;
  header["config"] = config;
  header["dims"] = {{"source_vocab", ckpt.params.dims.source_vocab},
                    {"target_vocab", ckpt.params.dims.target_vocab},
                    {"embed", ckpt.params.dims.embed},
                    {"hidden", ckpt.params.dims.hidden}};
  header["source_vocab"] = ckpt.source_vocab.tokens();
  header["target_vocab"] = ckpt.target_vocab.tokens();
  header["unigram_counts"] = ckpt.unigram_counts;
  header["epoch"] = ckpt.epoch;
  header["learning_rate"] = ckpt.learning_rate;
  header["previous_dev_loss"] = ckpt.previous_dev_loss
                                    ? nlohmann::json(*ckpt.previous_dev_loss)
                                    : nlohmann::json(nullptr);
  header["rng_state"] = ckpt.rng_state;
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& n : ckpt.params.named()) {
    entries.push_back({{"name", n.name},
                       {"rows", n.tensor->rows()},
                       {"cols", n.tensor->cols()},
                       {"offset", offset}});
    offset += n.tensor->size();
  }
  header["entries"] = entries;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset * 4);
  for (const auto& n : ckpt.params.named()) {
    for (float v : n.tensor->values()) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a tree2seq checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_size = get_le<std::uint64_t>(bytes, pos);
  if (pos + header_size > bytes.size()) throw CheckpointError("checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_size));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  pos += header_size;

  Checkpoint ckpt;
  try {
    for (const auto& [k, v] : header.at("config").items()) {
      if (!apply_config_value(ckpt.config, k, v.get<std::string>())) {
        throw CheckpointError("unknown config key '" + k + "' in checkpoint");
      }
    }
    ModelDims dims;
    dims.source_vocab = header.at("dims").at("source_vocab").get<std::size_t>();
    dims.target_vocab = header.at("dims").at("target_vocab").get<std::size_t>();
    dims.embed = header.at("dims").at("embed").get<std::size_t>();
    dims.hidden = header.at("dims").at("hidden").get<std::size_t>();
    ckpt.params = ModelParams<float>::zeros(dims);
    ckpt.source_vocab = Vocab(header.at("source_vocab").get<std::vector<std::string>>());
    ckpt.target_vocab = Vocab(header.at("target_vocab").get<std::vector<std::string>>());
    ckpt.unigram_counts = header.at("unigram_counts").get<std::vector<double>>();
    ckpt.epoch = header.at("epoch").get<std::size_t>();
    ckpt.learning_rate = header.at("learning_rate").get<double>();
    if (!header.at("previous_dev_loss").is_null()) {
      ckpt.previous_dev_loss = header.at("previous_dev_loss").get<double>();
    }
    ckpt.rng_state = header.at("rng_state").get<std::string>();

    const std::size_t data_start = pos;
    auto named = ckpt.params.named();
    const auto& entries = header.at("entries");
    if (entries.size() != named.size()) {
      throw CheckpointError("checkpoint has " + std::to_string(entries.size()) +
                            " entries, expected " + std::to_string(named.size()));
    }
    for (std::size_t k = 0; k < named.size(); ++k) {
      const auto& e = entries[k];
      Tensor<float>& t = *named[k].tensor;
      if (e.at("name").get<std::string>() != named[k].name ||
          e.at("rows").get<std::size_t>() != t.rows() ||
          e.at("cols").get<std::size_t>() != t.cols()) {
        throw CheckpointError("checkpoint entry " + std::to_string(k) +
                              " does not match expected " + named[k].name +
                              " " + t.shape_string());
      }
      std::size_t p = data_start + 4 * e.at("offset").get<std::size_t>();
      for (auto& v : t.values()) {
        v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, p));
      }
      pos = std::max(pos, p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  if (pos != bytes.size()) throw CheckpointError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace t2s
