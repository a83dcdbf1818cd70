#include "t2s/corpus.hpp"

#include <algorithm>
#include <stdexcept>

namespace t2s {

std::optional<BinaryTree> tree_for_sentence(const std::string& tree_line,
                                            const Sentence& source,
                                            TreeParseOptions options,
                                            std::string* diagnostic) {
  auto result = parse_tree(tree_line, options);
  if (auto* failure = std::get_if<ParseFailure>(&result)) {
    if (diagnostic) *diagnostic = failure->diagnostic;
    return std::nullopt;
  }
  auto& parsed = std::get<ParsedTree>(result);
  if (parsed.leaves != source) {
    if (diagnostic) {
      *diagnostic = "tree leaves (" + std::to_string(parsed.leaves.size()) +
                    ") do not match source tokens (" +
                    std::to_string(source.size()) + ")";
    }
    return std::nullopt;
  }
  return std::move(parsed.tree);
}

std::vector<TextPair> load_corpus(const CorpusFiles& files,
                                  TreeParseOptions tree_options) {
  const auto src = read_lines(files.source);
  std::vector<std::string> tgt, trees;
  if (!files.target.empty()) {
    tgt = read_lines(files.target);
    if (tgt.size() != src.size()) {
      throw std::runtime_error("line count mismatch: " +
                               files.source.string() + " has " +
                               std::to_string(src.size()) + ", " +
                               files.target.string() + " has " +
                               std::to_string(tgt.size()));
    }
  }
  if (!files.trees.empty()) {
    trees = read_lines(files.trees);
    if (trees.size() != src.size()) {
      throw std::runtime_error("line count mismatch: " +
                               files.source.string() + " has " +
                               std::to_string(src.size()) + ", " +
                               files.trees.string() + " has " +
                               std::to_string(trees.size()));
    }
  }
  std::vector<TextPair> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    out[i].source = split_tokens(src[i]);
    if (!tgt.empty()) out[i].target = split_tokens(tgt[i]);
    if (trees.empty()) {
      out[i].parse_diagnostic = "no tree file";
    } else {
      out[i].tree = tree_for_sentence(trees[i], out[i].source, tree_options,
                                      &out[i].parse_diagnostic);
    }
  }
  return out;
}

std::vector<TextPair> filter_pairs(std::span<const TextPair> pairs,
                                   FilterOptions options, FilterStats* stats) {
  FilterStats local;
  std::vector<TextPair> out;
  for (const auto& p : pairs) {
    if (p.source.empty() || p.target.empty()) {
      ++local.empty;
      continue;
    }
    if (p.source.size() > options.max_length ||
        p.target.size() > options.max_length) {
      ++local.too_long;
      continue;
    }
    if (!p.tree) {
      ++local.unparsed;
      if (options.drop_parse_failures) continue;
    }
    out.push_back(p);
  }
  local.kept = out.size();
  if (stats) *stats = local;
  return out;
}

SentencePair encode_pair(const TextPair& pair, const Vocab& source_vocab,
                         const Vocab& target_vocab, EncodeOptions options) {
  SentencePair out;
  Sentence src = pair.source;
  out.tree = pair.tree;
  if (options.reverse_source) {
    std::reverse(src.begin(), src.end());
    if (out.tree) out.tree = out.tree->mirrored();
  }
  out.source = encode_sentence(src, source_vocab);
  out.target = encode_sentence(pair.target, target_vocab);
  return out;
}

std::vector<SentencePair> encode_pairs(std::span<const TextPair> pairs,
                                       const Vocab& source_vocab,
                                       const Vocab& target_vocab,
                                       EncodeOptions options) {
  std::vector<SentencePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(encode_pair(p, source_vocab, target_vocab, options));
  }
  return out;
}

std::vector<double> unigram_counts(std::span<const SentencePair> pairs,
                                   std::size_t vocab_size) {
  std::vector<double> counts(vocab_size, 0.0);
  for (const auto& p : pairs) {
    for (TokenId id : p.target) counts.at(id) += 1.0;
  }
  return counts;
}

}  // namespace t2s
