#include "t2s/toy.hpp"

#include <array>
#include <random>
#include <stdexcept>

namespace t2s {

namespace {

using Rng = std::mt19937_64;

// catalan[k] = number of binary shapes with k + 1 leaves
constexpr std::array<double, kToyMaxLength> catalan_table() {
  std::array<double, kToyMaxLength> c{};
  c[0] = 1.0;
  for (std::size_t n = 1; n < c.size(); ++n) {
    for (std::size_t k = 0; k < n; ++k) c[n] += c[k] * c[n - 1 - k];
  }
  return c;
}
constexpr auto kCatalan = catalan_table();

struct Subtree {
  BinaryTree tree;
  std::vector<std::size_t> order;  // bracket-sensitive read-out
};

Subtree random_tree(std::size_t begin, std::size_t n, std::size_t depth, Rng& rng) {
  if (n == 1) return {BinaryTree(), {begin}};
  std::vector<double> weights(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    weights[k - 1] = kCatalan[k - 1] * kCatalan[n - k - 1];
  }
  std::discrete_distribution<std::size_t> split(weights.begin(), weights.end());
  const std::size_t left_n = split(rng) + 1;
  Subtree l = random_tree(begin, left_n, depth + 1, rng);
  Subtree r = random_tree(begin + left_n, n - left_n, depth + 1, rng);
  Subtree out{BinaryTree::join(l.tree, r.tree), {}};
  const bool swap = depth % 2 == 0;
  const auto& first = swap ? r.order : l.order;
  const auto& second = swap ? l.order : r.order;
  out.order = first;
  out.order.insert(out.order.end(), second.begin(), second.end());
  return out;
}

}  // namespace

BinaryTree random_binary_tree(std::size_t n, std::mt19937_64& rng) {
  if (n < 1 || n > kToyMaxLength) {
    throw std::invalid_argument("random_binary_tree: n must lie in [1, " +
                                std::to_string(kToyMaxLength) + "]");
  }
  return random_tree(0, n, 0, rng).tree;
}

std::string to_string(ToyTask task) {
  switch (task) {
    case ToyTask::kCopy: return "copy";
    case ToyTask::kReverse: return "reverse";
    case ToyTask::kBracketSensitive: return "bracket-sensitive";
  }
  return "?";
}

ToyTask parse_toy_task(std::string_view name) {
  if (name == "copy") return ToyTask::kCopy;
  if (name == "reverse") return ToyTask::kReverse;
  if (name == "bracket-sensitive") return ToyTask::kBracketSensitive;
  throw std::invalid_argument("unknown toy task '" + std::string(name) +
                              "' (copy|reverse|bracket-sensitive)");
}

std::vector<std::string> ToyCorpus::tree_lines() const {
  std::vector<std::string> out;
  out.reserve(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) out.push_back(trees[i].to_sexpr(source[i]));
  return out;
}

std::vector<TextPair> ToyCorpus::pairs() const {
  std::vector<TextPair> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    out[i].source = source[i];
    out[i].target = target[i];
    out[i].tree = trees[i];
  }
  return out;
}

ToyCorpus generate_toy_corpus(std::size_t size, std::size_t vocab_size,
                              ToyTask task, std::uint64_t seed) {
  if (vocab_size < 1) throw std::invalid_argument("toy vocab_size must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> length(kToyMinLength, kToyMaxLength);
  std::uniform_int_distribution<std::size_t> word(0, vocab_size - 1);
  ToyCorpus out;
  out.source.reserve(size);
  out.target.reserve(size);
  out.trees.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t n = length(rng);
    Sentence src(n);
    for (auto& w : src) w = "w" + std::to_string(word(rng));
    Subtree t = random_tree(0, n, 0, rng);
    Sentence tgt;
    switch (task) {
      case ToyTask::kCopy: tgt = src; break;
      case ToyTask::kReverse: tgt.assign(src.rbegin(), src.rend()); break;
      case ToyTask::kBracketSensitive:
        for (std::size_t k : t.order) tgt.push_back(src[k]);
        break;
    }
    out.source.push_back(std::move(src));
    out.target.push_back(std::move(tgt));
    out.trees.push_back(std::move(t.tree));
  }
  return out;
}

}  // namespace t2s
