#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "t2s/corpus.hpp"
#include "t2s/tree.hpp"
#include "t2s/vocab.hpp"

namespace t2s {

enum class ToyTask {
  kCopy,
  kReverse,
  /// Leaves read out in tree order, except that nodes at even depth (the
  /// root is depth 0) emit their right child first.
  kBracketSensitive,
};

std::string to_string(ToyTask task);
ToyTask parse_toy_task(std::string_view name);

struct ToyCorpus {
  std::vector<Sentence> source;
  std::vector<Sentence> target;
  std::vector<BinaryTree> trees;

  /// Bracketed tree lines, one per source sentence.
  std::vector<std::string> tree_lines() const;
  std::vector<TextPair> pairs() const;
};

inline constexpr std::size_t kToyMinLength = 3;
inline constexpr std::size_t kToyMaxLength = 12;

/// Uniform over the binary shapes with n leaves.
BinaryTree random_binary_tree(std::size_t n, std::mt19937_64& rng);

/// Sentences of w0..w{vocab_size-1} with lengths uniform in [3, 12] and
/// trees uniform over binary shapes.
ToyCorpus generate_toy_corpus(std::size_t size, std::size_t vocab_size,
                              ToyTask task, std::uint64_t seed);

}  // namespace t2s
