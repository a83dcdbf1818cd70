#include "t2s/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace t2s {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: '" + std::string(key) +
                                "' expects an integer, got '" +
                                std::string(value) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(value), &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + std::string(key) +
                                "' expects a number, got '" +
                                std::string(value) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("config: '" + std::string(key) +
                              "' expects true/false, got '" +
                              std::string(value) + "'");
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string to_string(LossMode mode) {
  return mode == LossMode::kBlackOut ? "blackout" : "softmax";
}

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kTree:
      return "tree";
    case EncoderKind::kSequential:
      return "sequential";
    case EncoderKind::kTreeNoLeafLstm:
      return "tree-no-leaf-lstm";
  }
  return "tree";
}

LossMode parse_loss_mode(std::string_view name) {
  if (name == "blackout") return LossMode::kBlackOut;
  if (name == "softmax") return LossMode::kSoftmax;
  throw std::invalid_argument("unknown loss mode '" + std::string(name) +
                              "' (blackout|softmax)");
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "tree") return EncoderKind::kTree;
  if (name == "sequential") return EncoderKind::kSequential;
  if (name == "tree-no-leaf-lstm") return EncoderKind::kTreeNoLeafLstm;
  throw std::invalid_argument("unknown encoder '" + std::string(name) +
                              "' (tree|sequential|tree-no-leaf-lstm)");
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    }
    out[trim(std::string_view(body).substr(0, eq))] =
        trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

bool apply_config_value(TrainConfig& c, std::string_view key,
                        std::string_view value) {
  if (key == "embed") c.embed = parse_int<std::size_t>(key, value);
  else if (key == "hidden") c.hidden = parse_int<std::size_t>(key, value);
  else if (key == "negatives") c.negatives = parse_int<std::size_t>(key, value);
  else if (key == "beta") c.beta = parse_double(key, value);
  else if (key == "batch_size") c.batch_size = parse_int<std::size_t>(key, value);
  else if (key == "learning_rate") c.learning_rate = parse_double(key, value);
  else if (key == "clip") c.clip = parse_double(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_int<std::size_t>(key, value);
  else if (key == "seed") c.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "loss") c.loss = parse_loss_mode(value);
  else if (key == "encoder") c.encoder = parse_encoder_kind(value);
  else if (key == "min_count") c.min_count = parse_int<std::size_t>(key, value);
  else if (key == "init_range") c.init_range = parse_double(key, value);
  else if (key == "bucket_by_length") c.bucket_by_length = parse_bool(key, value);
  else if (key == "reverse_source") c.reverse_source = parse_bool(key, value);
  else return false;
  return true;
}

std::vector<std::pair<std::string, std::string>> config_items(const TrainConfig& c) {
  return {
      {"embed", std::to_string(c.embed)},
      {"hidden", std::to_string(c.hidden)},
      {"negatives", std::to_string(c.negatives)},
      {"beta", format_double(c.beta)},
      {"batch_size", std::to_string(c.batch_size)},
      {"learning_rate", format_double(c.learning_rate)},
      {"clip", format_double(c.clip)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"seed", std::to_string(c.seed)},
      {"loss", to_string(c.loss)},
      {"encoder", to_string(c.encoder)},
      {"min_count", std::to_string(c.min_count)},
      {"init_range", format_double(c.init_range)},
      {"bucket_by_length", c.bucket_by_length ? "true" : "false"},
      {"reverse_source", c.reverse_source ? "true" : "false"},
  };
}

}  // namespace t2s
