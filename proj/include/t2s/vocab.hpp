#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace t2s {

using TokenId = int;
using Sentence = std::vector<std::string>;

/// Token <-> id mapping with reserved "unk" (id 0) and "eos" (id 1).
class Vocab {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kEos = 1;
  static constexpr std::string_view kUnkToken = "unk";
  static constexpr std::string_view kEosToken = "eos";

  Vocab();
  /// Builds from an id-ordered token list whose first two entries are the
  /// reserved tokens.
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Tokens occurring at least min_count times, ordered by descending count
/// with ties broken lexicographically, after the reserved tokens.
Vocab build_vocab(std::span<const Sentence> corpus, std::size_t min_count);

/// Maps tokens to ids (OOV -> unk) and appends eos.
std::vector<TokenId> encode_sentence(std::span<const std::string> tokens,
                                     const Vocab& vocab);
/// Inverse of encode_sentence; a trailing eos is dropped.
Sentence decode_sentence(std::span<const TokenId> ids, const Vocab& vocab);

/// Splits on single spaces (runs of whitespace are collapsed).
Sentence split_tokens(std::string_view line);
std::string join_tokens(std::span<const std::string> tokens);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path,
                 std::span<const std::string> lines);

}  // namespace t2s
