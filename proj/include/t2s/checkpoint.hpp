#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "t2s/params.hpp"
#include "t2s/trainer.hpp"
#include "t2s/vocab.hpp"

namespace t2s {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume training or translate.
struct Checkpoint {
  ModelParams<float> params;
  TrainConfig config;
  Vocab source_vocab;
  Vocab target_vocab;
  std::vector<double> unigram_counts;  // target side, for the sampler
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  std::optional<double> previous_dev_loss;
  std::string rng_state;  // textual mt19937_64 state of the shuffler
};

/// Layout: 8-byte magic "T2SCKPT\0", u32 version, u64 header size, a UTF-8
/// JSON header (config, vocabularies, counters, named entries with shapes and
/// offsets), then every entry as row-major little-endian IEEE-754 float32.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace t2s
