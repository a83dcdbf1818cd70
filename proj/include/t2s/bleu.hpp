#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "t2s/vocab.hpp"

namespace t2s {

struct BleuReport {
  double bleu = 0.0;  // percent
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
  /// First order n (1-based) whose clipped precision is zero, if any.
  std::optional<int> zero_precision_order;
};

/// Corpus-level BLEU-4 against a single reference per hypothesis.
BleuReport bleu(std::span<const Sentence> hypotheses,
                std::span<const Sentence> references);

}  // namespace t2s
