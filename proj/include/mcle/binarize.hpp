// Head-driven binarization of n-ary trees and its inverse.
//
// A local tree P -> C1 .. Cn with head Ch and n > 2 is rebuilt by joining the
// head with each constituent to its right, then joining the result with each
// constituent to its left. Every introduced node is labelled with the label
// of its head-containing child plus "<marker>2" (head on the left) or
// "<marker>1" (head on the right); the topmost node keeps the label P.
// Labels compound, so the suffix alone identifies introduced nodes.
#pragma once

#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mcle/common.hpp"
#include "mcle/tree.hpp"

namespace mcle {

enum class HeadDirection { Leftmost, Rightmost };

class HeadRules {
 public:
  struct Rule {
    HeadDirection direction = HeadDirection::Rightmost;
    std::vector<std::string> priority;
  };

  HeadRules() = default;

  void add(std::string parent, Rule rule) { table_[std::move(parent)] = std::move(rule); }
  bool empty() const { return table_.empty(); }
  const std::map<std::string, Rule>& table() const { return table_; }

  /// Index of the head child. With a table entry, the priority labels are
  /// tried in order, each scanned from the rule's direction; if none occurs
  /// the first child from that direction is the head. Without an entry: the
  /// leftmost child labelled like the parent, else the rightmost child.
  std::size_t head(const std::string& parent, const std::vector<Tree>& children) const {
    if (children.empty()) throw Error("head lookup on a leaf");
    const std::size_t n = children.size();
    auto it = table_.find(parent);
    if (it == table_.end()) {
      for (std::size_t i = 0; i < n; ++i)
        if (children[i].label == parent) return i;
      return n - 1;
    }
    const Rule& r = it->second;
    const bool left = r.direction == HeadDirection::Leftmost;
    for (const auto& want : r.priority) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = left ? k : n - 1 - k;
        if (children[i].label == want) return i;
      }
    }
    return left ? 0 : n - 1;
  }

  /// One rule per line: `PARENT: left|right label1 label2 ...`. Blank lines
  /// and lines starting with '#' are ignored.
  static HeadRules parse(std::string_view text) {
    HeadRules rules;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = trim(text.substr(start, end - start));
      ++line_no;
      start = end + 1;
      if (line.empty() || line.front() == '#') continue;
      const auto colon = line.find(':');
      if (colon == std::string_view::npos || colon == 0)
        throw ParseError("head rule must look like 'PARENT: dir labels...'", line_no, 1);
      std::string parent(trim(line.substr(0, colon)));
      auto fields = split_ws(line.substr(colon + 1));
      if (fields.empty()) throw ParseError("head rule for '" + parent + "' lacks a direction", line_no, colon + 2);
      Rule r;
      if (fields[0] == "left") {
        r.direction = HeadDirection::Leftmost;
      } else if (fields[0] == "right") {
        r.direction = HeadDirection::Rightmost;
      } else {
        throw ParseError("head direction must be 'left' or 'right', got '" + fields[0] + "'", line_no, colon + 2);
      }
      r.priority.assign(fields.begin() + 1, fields.end());
      rules.add(std::move(parent), std::move(r));
    }
    return rules;
  }

  static HeadRules read(std::istream& in) {
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

 private:
  std::map<std::string, Rule> table_;
};

struct BinarizeOptions {
  std::string marker = "^";
};

inline bool is_binarization_label(std::string_view label, const BinarizeOptions& opts = {}) {
  const std::size_t m = opts.marker.size();
  if (label.size() < m + 2) return false;
  const char last = label.back();
  if (last != '1' && last != '2') return false;
  return label.substr(label.size() - 1 - m, m) == opts.marker;
}

inline Tree binarize(const Tree& t, const HeadRules& rules, const BinarizeOptions& opts = {}) {
  if (t.is_leaf()) return t;
  std::vector<Tree> kids;
  kids.reserve(t.children.size());
  for (const auto& c : t.children) kids.push_back(binarize(c, rules, opts));
  const std::size_t n = kids.size();
  if (n <= 2) return Tree(t.label, std::move(kids));

  const std::size_t h = rules.head(t.label, t.children);
  // Number of joins still to perform; the last one is labelled with the parent.
  std::size_t joins_left = n - 1;
  auto join = [&](Tree left, Tree right, bool head_on_left) {
    std::string label;
    if (--joins_left == 0) {
      label = t.label;
    } else {
      label = (head_on_left ? left.label : right.label) + opts.marker + (head_on_left ? "2" : "1");
    }
    return Tree(std::move(label), {std::move(left), std::move(right)});
  };
  Tree cur = std::move(kids[h]);
  for (std::size_t j = h + 1; j < n; ++j) cur = join(std::move(cur), std::move(kids[j]), true);
  for (std::size_t j = h; j-- > 0;) cur = join(std::move(kids[j]), std::move(cur), false);
  return cur;
}

inline Corpus binarize(const Corpus& c, const HeadRules& rules, const BinarizeOptions& opts = {}) {
  Corpus out;
  for (std::size_t i = 0; i < c.size(); ++i) out.push_back(binarize(c.trees[i], rules, opts), c.ids[i]);
  return out;
}

namespace detail {

inline void splice_into(const Tree& t, std::vector<Tree>& out, const BinarizeOptions& opts) {
  if (!t.is_leaf() && is_binarization_label(t.label, opts)) {
    for (const auto& c : t.children) splice_into(c, out, opts);
    return;
  }
  if (t.is_leaf()) {
    out.push_back(t);
    return;
  }
  Tree node(t.label);
  for (const auto& c : t.children) splice_into(c, node.children, opts);
  out.push_back(std::move(node));
}

}  // namespace detail

/// Splices out every internal node carrying a binarization suffix. A
/// suffixed root is kept (there is nothing to splice it into).
inline Tree debinarize(const Tree& t, const BinarizeOptions& opts = {}) {
  if (t.is_leaf()) return t;
  Tree out(t.label);
  for (const auto& c : t.children) detail::splice_into(c, out.children, opts);
  return out;
}

}  // namespace mcle
