#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "t2s/tree.hpp"
#include "t2s/vocab.hpp"

namespace t2s {

/// A tokenized pair as read from disk, before vocabulary mapping.
struct TextPair {
  Sentence source;
  Sentence target;
  std::optional<BinaryTree> tree;
  /// Why the tree is absent (parser sentinel, malformed line, leaf mismatch).
  std::string parse_diagnostic;
};

/// Encoded pair; both sides end with eos. The tree, when present, spans the
/// source tokens without eos.
struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  std::optional<BinaryTree> tree;

  std::size_t source_length() const { return source.size() - 1; }
  std::size_t target_length() const { return target.size() - 1; }
};

struct CorpusFiles {
  std::filesystem::path source;
  std::filesystem::path target;  // may be empty (translation input)
  std::filesystem::path trees;   // may be empty (no trees: all fallback)
};

/// Reads line-aligned source/target/tree files. Tree lines whose leaves do
/// not reproduce the source tokens are recorded as parse failures.
std::vector<TextPair> load_corpus(const CorpusFiles& files,
                                  TreeParseOptions tree_options = {});

/// Attaches trees parsed from tree lines to already tokenized sources.
std::optional<BinaryTree> tree_for_sentence(const std::string& tree_line,
                                            const Sentence& source,
                                            TreeParseOptions options,
                                            std::string* diagnostic);

struct FilterOptions {
  std::size_t max_length = 50;
  /// Training drops unparsed sources; evaluation keeps them for fallback.
  bool drop_parse_failures = true;
};

struct FilterStats {
  std::size_t kept = 0;
  std::size_t too_long = 0;
  std::size_t unparsed = 0;
  std::size_t empty = 0;
};

std::vector<TextPair> filter_pairs(std::span<const TextPair> pairs,
                                   FilterOptions options,
                                   FilterStats* stats = nullptr);

struct EncodeOptions {
  /// Reverse source token order (tree mirrored accordingly).
  bool reverse_source = false;
};

SentencePair encode_pair(const TextPair& pair, const Vocab& source_vocab,
                         const Vocab& target_vocab, EncodeOptions options = {});
std::vector<SentencePair> encode_pairs(std::span<const TextPair> pairs,
                                       const Vocab& source_vocab,
                                       const Vocab& target_vocab,
                                       EncodeOptions options = {});

/// Per-id counts over target sentences including eos and unk.
std::vector<double> unigram_counts(std::span<const SentencePair> pairs,
                                   std::size_t vocab_size);

}  // namespace t2s
