#include "t2s/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace t2s {

Vocab::Vocab()
    : Vocab(std::vector<std::string>{std::string(kUnkToken),
                                     std::string(kEosToken)}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kUnk] != kUnkToken ||
      tokens_[kEos] != kEosToken) {
    throw std::invalid_argument("vocab must start with the reserved tokens '" +
                                std::string(kUnkToken) + "' and '" +
                                std::string(kEosToken) + "'");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw std::invalid_argument("duplicate vocab entry '" + tokens_[i] +
                                  "'");
    }
  }
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocab of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

void Vocab::save(const std::filesystem::path& path) const {
  write_lines(path, tokens_);
}

Vocab Vocab::load(const std::filesystem::path& path) {
  return Vocab(read_lines(path));
}

Vocab build_vocab(std::span<const Sentence> corpus, std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) ++counts[token];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_count && token != Vocab::kUnkToken &&
        token != Vocab::kEosToken) {
      kept.emplace_back(token, count);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens{std::string(Vocab::kUnkToken),
                                  std::string(Vocab::kEosToken)};
  for (auto& [token, count] : kept) tokens.push_back(token);
  return Vocab(std::move(tokens));
}

std::vector<TokenId> encode_sentence(std::span<const std::string> tokens,
                                     const Vocab& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size() + 1);
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  ids.push_back(Vocab::kEos);
  return ids;
}

Sentence decode_sentence(std::span<const TokenId> ids, const Vocab& vocab) {
  Sentence out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == Vocab::kEos && i + 1 == ids.size()) break;
    out.push_back(vocab.token(ids[i]));
  }
  return out;
}

Sentence split_tokens(std::string_view line) {
  Sentence out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path,
                 std::span<const std::string> lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace t2s
