#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace t2s {

/// Reference to a child of a phrase node: a leaf (token position) or an
/// earlier phrase node.
struct TreeChild {
  bool is_leaf = true;
  std::size_t index = 0;
  friend bool operator==(const TreeChild&, const TreeChild&) = default;
};

/// Internal node covering leaves [begin, end).
struct PhraseNode {
  TreeChild left;
  TreeChild right;
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const PhraseNode&, const PhraseNode&) = default;
};

/// Strictly binary tree over n leaves, stored as its n - 1 internal nodes in
/// post-order (children before parents, root last).
class BinaryTree {
 public:
  /// The one-leaf tree.
  BinaryTree() = default;

  static BinaryTree join(const BinaryTree& left, const BinaryTree& right);
  /// Left-branching and right-branching trees over n leaves.
  static BinaryTree left_branching(std::size_t n);
  static BinaryTree right_branching(std::size_t n);

  std::size_t leaf_count() const { return leaves_; }
  std::size_t phrase_count() const { return phrases_.size(); }
  const std::vector<PhraseNode>& phrases() const { return phrases_; }

  /// Children swapped at every node; leaves renumbered so that the leaf
  /// order is reversed.
  BinaryTree mirrored() const;

  /// Token positions in in-order traversal (always 0..n-1).
  std::vector<std::size_t> leaf_order() const;

  std::string to_sexpr(std::span<const std::string> tokens) const;

  friend bool operator==(const BinaryTree&, const BinaryTree&) = default;

 private:
  std::size_t leaves_ = 1;
  std::vector<PhraseNode> phrases_;
};

struct ParsedTree {
  BinaryTree tree;
  std::vector<std::string> leaves;
};

struct ParseFailure {
  std::string diagnostic;
};

using TreeParseResult = std::variant<ParsedTree, ParseFailure>;

inline constexpr std::string_view kNoParse = "NOPARSE";

struct TreeParseOptions {
  /// Repair n-ary nodes by left-binarization and collapse unary nodes
  /// instead of rejecting them.
  bool left_binarize = false;
};

/// Reads an S-expression such as "( ( a b ) c )". A bare token is a
/// one-leaf tree. "NOPARSE" and malformed input yield a ParseFailure.
TreeParseResult parse_tree(std::string_view line, TreeParseOptions options = {});

}  // namespace t2s
