// Probabilistic context-free grammars: representation, rule counting,
// relative-frequency estimation, tree scoring and the grammar file format.
#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcle/common.hpp"
#include "mcle/tree.hpp"

namespace mcle {

struct Production {
  std::string lhs;
  std::vector<std::string> rhs;

  auto operator<=>(const Production&) const = default;
  bool operator==(const Production&) const = default;
};

inline std::string to_string(const Production& p) { return p.lhs + " -> " + join(p.rhs); }

/// The production used at an internal node.
inline Production local_production(const Tree& node) {
  Production p{node.label, {}};
  p.rhs.reserve(node.children.size());
  for (const auto& c : node.children) p.rhs.push_back(c.label);
  return p;
}

/// Normalisation tolerance for per-nonterminal sums of rule weights.
inline constexpr double kNormalizationTolerance = 1e-12;

class Pcfg {
 public:
  Pcfg() = default;

  /// Takes ownership of the rule weights; throws unless every nonterminal's
  /// weights are non-negative and sum to one.
  Pcfg(std::string start, std::map<Production, double> theta) : start_(std::move(start)), theta_(std::move(theta)) {
    for (const auto& [p, w] : theta_) {
      if (p.rhs.empty()) throw DataError("production with empty right-hand side for '" + p.lhs + "'");
      if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("invalid weight for " + to_string(p));
    }
    for (const auto& [lhs, total] : lhs_totals())
      if (std::abs(total - 1.0) > kNormalizationTolerance)
        throw DataError("weights of '" + lhs + "' sum to " + format_exact(total));
  }

  const std::string& start() const { return start_; }
  const std::map<Production, double>& theta() const { return theta_; }
  std::size_t size() const { return theta_.size(); }

  /// 0 for productions outside the grammar.
  double weight(const Production& p) const {
    auto it = theta_.find(p);
    return it == theta_.end() ? 0.0 : it->second;
  }
  bool contains(const Production& p) const { return theta_.count(p) != 0; }

  std::map<std::string, double> lhs_totals() const {
    std::map<std::string, double> totals;
    for (const auto& [p, w] : theta_) totals[p.lhs] += w;
    return totals;
  }

  std::set<std::string> nonterminals() const {
    std::set<std::string> out;
    for (const auto& [p, w] : theta_) out.insert(p.lhs);
    return out;
  }

  /// Right-hand-side symbols that are never expanded.
  std::set<std::string> terminals() const {
    const auto nts = nonterminals();
    std::set<std::string> out;
    for (const auto& [p, w] : theta_)
      for (const auto& s : p.rhs)
        if (!nts.count(s)) out.insert(s);
    return out;
  }

 private:
  std::string start_;
  std::map<Production, double> theta_;
};

/// Rescales each nonterminal's weights to sum to one.
inline std::map<Production, double> renormalized(std::map<Production, double> theta) {
  std::map<std::string, double> totals;
  for (const auto& [p, w] : theta) totals[p.lhs] += w;
  for (auto& [p, w] : theta) w /= totals[p.lhs];
  return theta;
}

struct RuleCounts {
  std::string start;
  std::map<Production, double> counts;
  std::map<std::string, double> by_lhs;

  void add(const Production& p, double c = 1.0) {
    counts[p] += c;
    by_lhs[p.lhs] += c;
  }
  double count(const Production& p) const {
    auto it = counts.find(p);
    return it == counts.end() ? 0.0 : it->second;
  }
};

inline void add_tree_counts(const Tree& t, RuleCounts& rc) {
  if (t.is_leaf()) return;
  rc.add(local_production(t));
  for (const auto& c : t.children) add_tree_counts(c, rc);
}

/// Root label shared by every tree; a corpus with mixed roots has no single
/// start symbol and is rejected.
inline std::string corpus_start_symbol(const Corpus& c) {
  if (c.empty()) throw DataError("empty corpus");
  const std::string& start = c.trees.front().label;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.trees[i].label != start)
      throw DataError("tree " + c.id(i) + " has root '" + c.trees[i].label + "' but the corpus start symbol is '" +
                      start + "'");
  return start;
}

/// Exact production usage counts over trees whose leaves are terminals.
inline RuleCounts extract_counts(const Corpus& c) {
  RuleCounts rc;
  rc.start = corpus_start_symbol(c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.trees[i].is_leaf()) throw DataError("tree " + c.id(i) + " is a bare leaf");
    add_tree_counts(c.trees[i], rc);
  }
  return rc;
}

/// Relative-frequency estimate.
inline Pcfg estimate_mle(const RuleCounts& rc) {
  std::map<Production, double> theta;
  for (const auto& [p, n] : rc.counts) {
    const double total = rc.by_lhs.at(p.lhs);
    if (!(total > 0.0)) throw EstimationError("nonterminal '" + p.lhs + "' has zero total count");
    theta[p] = n / total;
  }
  return Pcfg(rc.start, std::move(theta));
}

/// Productions used by `t` that are missing from `g` (sorted, unique).
inline std::vector<Production> missing_productions(const Pcfg& g, const Tree& t) {
  std::set<Production> missing;
  auto walk = [&](auto&& self, const Tree& n) -> void {
    if (n.is_leaf()) return;
    auto p = local_production(n);
    if (!g.contains(p)) missing.insert(std::move(p));
    for (const auto& c : n.children) self(self, c);
  };
  walk(walk, t);
  return {missing.begin(), missing.end()};
}

/// Sum over the tree's productions of log theta; -inf when a production is
/// absent from the grammar (see missing_productions) or has weight zero.
inline double tree_log_prob(const Pcfg& g, const Tree& t) {
  if (t.is_leaf()) return 0.0;
  const double w = g.weight(local_production(t));
  if (w <= 0.0) return kNegInf;
  double lp = std::log(w);
  for (const auto& c : t.children) {
    lp += tree_log_prob(g, c);
    if (lp == kNegInf) return lp;
  }
  return lp;
}

// Grammar files: optional comment lines, a `#start: S` header, then one rule
// per line as `LHS -> RHS1 ... RHSk<TAB>theta`.

inline void write_grammar(std::ostream& os, const Pcfg& g) {
  os << "#start: " << g.start() << '\n';
  for (const auto& [p, w] : g.theta()) os << to_string(p) << '\t' << format_exact(w) << '\n';
}

inline Pcfg read_grammar(std::istream& in) {
  std::string start;
  std::map<Production, double> theta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      constexpr std::string_view key = "#start:";
      if (v.substr(0, key.size()) == key) start = std::string(trim(v.substr(key.size())));
      continue;
    }
    const auto tab = v.rfind('\t');
    if (tab == std::string_view::npos) throw ParseError("grammar rule lacks a tab-separated weight", line_no, 1);
    auto fields = split_ws(v.substr(0, tab));
    if (fields.size() < 3 || fields[1] != "->") throw ParseError("grammar rule must be 'LHS -> RHS...'", line_no, 1);
    Production p{fields[0], {fields.begin() + 2, fields.end()}};
    if (theta.count(p)) throw ParseError("duplicate rule " + to_string(p), line_no, 1);
    theta[p] = parse_double(trim(v.substr(tab + 1)), "rule weight");
  }
  if (start.empty()) throw DataError("grammar file lacks a '#start:' header");
  return Pcfg(std::move(start), std::move(theta));
}

}  // namespace mcle
