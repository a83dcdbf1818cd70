#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "t2s/corpus.hpp"

namespace t2s {

/// Conditional distribution p(len(y) | len(x)) over target lengths
/// 1..max_target_length, add-one smoothed. Lengths exclude eos. Source
/// lengths never observed get the uniform row.
class LengthModel {
 public:
  static constexpr std::size_t kMaxTargetLength = 100;

  LengthModel() = default;

  /// Uses at most `cap` pairs (in order).
  static LengthModel estimate(std::span<const SentencePair> pairs,
                              std::size_t cap);
  static LengthModel estimate_from_lengths(
      std::span<const std::pair<std::size_t, std::size_t>> lengths,
      std::size_t cap);
  /// Every row uniform.
  static LengthModel uniform();

  double prob(std::size_t source_length, std::size_t target_length) const;
  /// Lengths outside 1..100 get the row's smoothing floor.
  double log_prob(std::size_t source_length, std::size_t target_length) const;
  std::size_t argmax(std::size_t source_length) const;

  /// Rows of "src_len tgt_len probability", one per observed source length
  /// and target length 1..100.
  void save(const std::filesystem::path& path) const;
  static LengthModel load(const std::filesystem::path& path);

  const std::map<std::size_t, std::vector<double>>& rows() const {
    return rows_;
  }

 private:
  const std::vector<double>* row(std::size_t source_length) const;
  double floor(std::size_t source_length) const;

  // rows_[src][tgt - 1]
  std::map<std::size_t, std::vector<double>> rows_;
};

}  // namespace t2s
