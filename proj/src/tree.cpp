#include "t2s/tree.hpp"

#include <functional>
#include <memory>
#include <stdexcept>

#include "t2s/vocab.hpp"

namespace t2s {

namespace {

TreeChild shifted(TreeChild c, std::size_t leaf_offset,
                  std::size_t phrase_offset) {
  c.index += c.is_leaf ? leaf_offset : phrase_offset;
  return c;
}

TreeChild root_of(const BinaryTree& t, std::size_t leaf_offset,
                  std::size_t phrase_offset) {
  if (t.phrase_count() == 0) return {true, leaf_offset};
  return {false, phrase_offset + t.phrase_count() - 1};
}

// Generic S-expression node used only while parsing.
struct SNode {
  std::string token;  // nonempty for leaves
  std::vector<std::unique_ptr<SNode>> children;
};

std::vector<std::string> lex(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : line) {
    if (ch == '(' || ch == ')') {
      flush();
      out.emplace_back(1, ch);
    } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      flush();
    } else {
      cur += ch;
    }
  }
  flush();
  return out;
}

}  // namespace

BinaryTree BinaryTree::join(const BinaryTree& left, const BinaryTree& right) {
  BinaryTree out;
  out.leaves_ = left.leaves_ + right.leaves_;
  out.phrases_ = left.phrases_;
  const std::size_t loff = left.leaves_;
  const std::size_t poff = left.phrases_.size();
  for (PhraseNode p : right.phrases_) {
    p.left = shifted(p.left, loff, poff);
    p.right = shifted(p.right, loff, poff);
    p.begin += loff;
    p.end += loff;
    out.phrases_.push_back(p);
  }
  PhraseNode root;
  root.left = root_of(left, 0, 0);
  root.right = root_of(right, loff, poff);
  root.begin = 0;
  root.end = out.leaves_;
  out.phrases_.push_back(root);
  return out;
}

BinaryTree BinaryTree::left_branching(std::size_t n) {
  if (n == 0) throw std::invalid_argument("tree needs at least one leaf");
  BinaryTree t;
  for (std::size_t i = 1; i < n; ++i) t = join(t, BinaryTree());
  return t;
}

BinaryTree BinaryTree::right_branching(std::size_t n) {
  if (n == 0) throw std::invalid_argument("tree needs at least one leaf");
  BinaryTree t;
  for (std::size_t i = 1; i < n; ++i) t = join(BinaryTree(), t);
  return t;
}

BinaryTree BinaryTree::mirrored() const {
  std::function<BinaryTree(TreeChild)> build = [&](TreeChild c) {
    if (c.is_leaf) return BinaryTree();
    const PhraseNode& p = phrases_[c.index];
    return join(build(p.right), build(p.left));
  };
  return build(root_of(*this, 0, 0));
}

std::vector<std::size_t> BinaryTree::leaf_order() const {
  std::vector<std::size_t> order;
  std::function<void(TreeChild)> walk = [&](TreeChild c) {
    if (c.is_leaf) {
      order.push_back(c.index);
      return;
    }
    walk(phrases_[c.index].left);
    walk(phrases_[c.index].right);
  };
  walk(root_of(*this, 0, 0));
  return order;
}

std::string BinaryTree::to_sexpr(std::span<const std::string> tokens) const {
  if (tokens.size() != leaves_) {
    throw std::invalid_argument("to_sexpr: " + std::to_string(tokens.size()) +
                                " tokens for a tree with " +
                                std::to_string(leaves_) + " leaves");
  }
  std::function<std::string(TreeChild)> render = [&](TreeChild c) {
    if (c.is_leaf) return tokens[c.index];
    const PhraseNode& p = phrases_[c.index];
    return "( " + render(p.left) + " " + render(p.right) + " )";
  };
  return render(root_of(*this, 0, 0));
}

TreeParseResult parse_tree(std::string_view line, TreeParseOptions options) {
  const auto toks = lex(line);
  if (toks.empty()) return ParseFailure{"empty tree line"};
  if (toks.size() == 1 && toks[0] == kNoParse) {
    return ParseFailure{"parser failure sentinel"};
  }

  std::size_t pos = 0;
  std::string error;
  std::function<std::unique_ptr<SNode>()> read = [&]() -> std::unique_ptr<SNode> {
    if (pos >= toks.size()) {
      error = "unexpected end of input";
      return nullptr;
    }
    auto node = std::make_unique<SNode>();
    if (toks[pos] == ")") {
      error = "unbalanced ')' at token " + std::to_string(pos);
      return nullptr;
    }
    if (toks[pos] != "(") {
      node->token = toks[pos++];
      return node;
    }
    ++pos;
    while (pos < toks.size() && toks[pos] != ")") {
      auto child = read();
      if (!child) return nullptr;
      node->children.push_back(std::move(child));
    }
    if (pos >= toks.size()) {
      error = "unbalanced '(': missing ')'";
      return nullptr;
    }
    ++pos;
    return node;
  };

  auto root = read();
  if (!root) return ParseFailure{error};
  if (pos != toks.size()) {
    return ParseFailure{"trailing input after tree at token " +
                        std::to_string(pos)};
  }

  ParsedTree out;
  std::function<bool(const SNode&, BinaryTree&)> convert =
      [&](const SNode& n, BinaryTree& t) -> bool {
    if (!n.token.empty()) {
      out.leaves.push_back(n.token);
      t = BinaryTree();
      return true;
    }
    const std::size_t k = n.children.size();
    if (k == 0) {
      error = "empty node '( )'";
      return false;
    }
    if (k != 2 && !options.left_binarize) {
      error = "node with " + std::to_string(k) + " children (binary required)";
      return false;
    }
    if (!convert(*n.children[0], t)) return false;
    for (std::size_t i = 1; i < k; ++i) {
      BinaryTree rhs;
      if (!convert(*n.children[i], rhs)) return false;
      t = BinaryTree::join(t, rhs);
    }
    return true;
  };
  if (!convert(*root, out.tree)) return ParseFailure{error};
  return out;
}

}  // namespace t2s
