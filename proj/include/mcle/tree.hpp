// Ordered labelled trees and the Penn-style bracketed file format.
#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcle/common.hpp"

namespace mcle {

/// A node label plus its ordered children. A node without children is a
/// terminal leaf.
struct Tree {
  std::string label;
  std::vector<Tree> children;

  Tree() = default;
  explicit Tree(std::string l) : label(std::move(l)) {}
  Tree(std::string l, std::vector<Tree> kids) : label(std::move(l)), children(std::move(kids)) {}

  bool is_leaf() const { return children.empty(); }
  /// An internal node whose only child is a leaf.
  bool is_preterminal() const { return children.size() == 1 && children.front().is_leaf(); }

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Corpus {
  std::vector<Tree> trees;
  std::vector<std::string> ids;

  std::size_t size() const { return trees.size(); }
  bool empty() const { return trees.empty(); }

  void push_back(Tree t, std::string id = {}) {
    if (id.empty()) id = std::to_string(trees.size() + 1);
    trees.push_back(std::move(t));
    ids.push_back(std::move(id));
  }

  const std::string& id(std::size_t i) const { return ids.at(i); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline std::size_t node_count(const Tree& t) {
  std::size_t n = 1;
  for (const auto& c : t.children) n += node_count(c);
  return n;
}

namespace detail {

inline void collect_yield(const Tree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.label);
    return;
  }
  for (const auto& c : t.children) collect_yield(c, out);
}

class BracketLexer {
 public:
  explicit BracketLexer(std::string_view text) : text_(text) {}

  struct Token {
    enum Kind { Open, Close, Atom, End } kind;
    std::string text;
    std::size_t line, column;
  };

  Token next() {
    skip_space();
    Token tok{Token::End, {}, line_, column_};
    if (pos_ >= text_.size()) return tok;
    const char c = text_[pos_];
    if (c == '(' || c == ')') {
      tok.kind = c == '(' ? Token::Open : Token::Close;
      advance();
      return tok;
    }
    tok.kind = Token::Atom;
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (d == '(' || d == ')' || std::isspace(static_cast<unsigned char>(d))) break;
      tok.text.push_back(d);
      advance();
    }
    return tok;
  }

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

// Parses the remainder of a node after its opening parenthesis.
inline Tree parse_node(BracketLexer& lex, const BracketLexer::Token& open) {
  using Tok = BracketLexer::Token;
  Tok tok = lex.next();
  Tree node;
  if (tok.kind == Tok::Atom) {
    node.label = tok.text;
    tok = lex.next();
  }
  while (tok.kind != Tok::Close) {
    if (tok.kind == Tok::End)
      throw ParseError("unbalanced parentheses: node opened at line " + std::to_string(open.line) +
                           ", column " + std::to_string(open.column) + " is never closed",
                       tok.line, tok.column);
    if (tok.kind == Tok::Open) {
      node.children.push_back(parse_node(lex, tok));
    } else {
      node.children.emplace_back(tok.text);
    }
    tok = lex.next();
  }
  if (node.children.empty()) throw ParseError("empty node", open.line, open.column);
  // Penn files wrap each tree in an unlabelled outer bracket.
  if (node.label.empty()) {
    if (node.children.size() != 1 || node.children.front().is_leaf())
      throw ParseError("unlabelled node", open.line, open.column);
    Tree inner = std::move(node.children.front());
    return inner;
  }
  return node;
}

inline void write_node(std::ostream& os, const Tree& t) {
  if (t.is_leaf()) {
    os << t.label;
    return;
  }
  os << '(' << t.label;
  for (const auto& c : t.children) {
    os << ' ';
    write_node(os, c);
  }
  os << ')';
}

}  // namespace detail

inline std::vector<std::string> yield(const Tree& t) {
  std::vector<std::string> out;
  detail::collect_yield(t, out);
  return out;
}

/// Reads every tree in `text`, in file order. Trees must be parenthesised;
/// ids are the 1-based tree positions.
inline Corpus read_bracketed(std::string_view text) {
  detail::BracketLexer lex(text);
  Corpus corpus;
  for (;;) {
    auto tok = lex.next();
    if (tok.kind == detail::BracketLexer::Token::End) break;
    if (tok.kind == detail::BracketLexer::Token::Close)
      throw ParseError("unbalanced parentheses: unexpected ')'", tok.line, tok.column);
    if (tok.kind == detail::BracketLexer::Token::Atom)
      throw ParseError("expected '(' but found '" + tok.text + "'", tok.line, tok.column);
    corpus.push_back(detail::parse_node(lex, tok));
  }
  return corpus;
}

inline Corpus read_bracketed(std::istream& in) {
  std::stringstream ss;
  ss << in.rdbuf();
  return read_bracketed(ss.str());
}

inline Tree parse_tree(std::string_view text) {
  Corpus c = read_bracketed(text);
  if (c.size() != 1) throw DataError("expected exactly one tree, found " + std::to_string(c.size()));
  return std::move(c.trees.front());
}

inline std::string to_string(const Tree& t) {
  std::ostringstream os;
  detail::write_node(os, t);
  return os.str();
}

/// One tree per line.
inline void write_bracketed(std::ostream& os, const Corpus& c) {
  for (const auto& t : c.trees) {
    detail::write_node(os, t);
    os << '\n';
  }
}

inline std::string write_bracketed(const Corpus& c) {
  std::ostringstream os;
  write_bracketed(os, c);
  return os.str();
}

/// Replaces every preterminal by a leaf carrying the preterminal's label, so
/// the tree generates its part-of-speech string.
inline Tree strip_lexical(const Tree& t) {
  if (t.is_leaf()) throw DataError("malformed treebank: bare leaf '" + t.label + "' has no preterminal");
  if (t.is_preterminal()) return Tree(t.label);
  Tree out(t.label);
  out.children.reserve(t.children.size());
  for (const auto& c : t.children) {
    if (c.is_leaf())
      throw DataError("malformed treebank: leaf '" + c.label + "' under '" + t.label + "' has siblings");
    out.children.push_back(strip_lexical(c));
  }
  return out;
}

inline Corpus strip_lexical(const Corpus& c) {
  Corpus out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    try {
      out.push_back(strip_lexical(c.trees[i]), c.ids[i]);
    } catch (const DataError& e) {
      throw DataError("tree " + c.ids[i] + ": " + e.what());
    }
  }
  return out;
}

/// (word, preterminal) pairs in left-to-right order.
inline std::vector<std::pair<std::string, std::string>> tagged_yield(const Tree& t) {
  std::vector<std::pair<std::string, std::string>> out;
  auto walk = [&](auto&& self, const Tree& n) -> void {
    if (n.is_preterminal()) {
      out.emplace_back(n.children.front().label, n.label);
      return;
    }
    if (n.is_leaf()) throw DataError("malformed treebank: leaf '" + n.label + "' has no preterminal");
    for (const auto& c : n.children) self(self, c);
  };
  walk(walk, t);
  return out;
}

}  // namespace mcle
