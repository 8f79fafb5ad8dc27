// Stochastic shift-reduce parsers over unlexicalised binarised trees. The
// joint parser conditions each move on the top two stack labels; the
// conditional parser also sees the look-ahead symbol. Both decode with a
// prefix-synchronous beam over explicit stacks.
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "mcle/binarize.hpp"
#include "mcle/common.hpp"
#include "mcle/interpolation.hpp"
#include "mcle/pcfg.hpp"
#include "mcle/tree.hpp"

namespace mcle {

struct Move {
  enum class Kind { Shift = 0, Reduce1 = 1, Reduce2 = 2 };
  Kind kind;
  std::string symbol;

  static Move shift(std::string w) { return {Kind::Shift, std::move(w)}; }
  static Move reduce1(std::string c) { return {Kind::Reduce1, std::move(c)}; }
  static Move reduce2(std::string c) { return {Kind::Reduce2, std::move(c)}; }

  auto operator<=>(const Move&) const = default;
};

inline std::string to_string(const Move& m) {
  static const char* names[] = {"shift", "reduce1", "reduce2"};
  return std::string(names[static_cast<int>(m.kind)]) + "(" + m.symbol + ")";
}

inline std::ostream& operator<<(std::ostream& os, const Move& m) { return os << to_string(m); }

/// Immutable stack sharing structure with the stacks it was built from.
template <class Label>
class PersistentStack {
 public:
  PersistentStack() = default;

  std::size_t size() const { return top_ ? top_->size : 0; }
  bool empty() const { return !top_; }

  /// i-th label from the top (0 = top); `absent` beyond the bottom.
  Label peek(std::size_t i, const Label& absent) const {
    const Node* n = top_.get();
    for (; n && i > 0; --i) n = n->below.get();
    return n ? n->label : absent;
  }

  PersistentStack push(Label l) const {
    PersistentStack s;
    s.top_ = std::make_shared<const Node>(Node{std::move(l), top_, size() + 1});
    return s;
  }

  PersistentStack pop(std::size_t k = 1) const {
    if (k > size()) throw DataError("pop from a stack of size " + std::to_string(size()));
    PersistentStack s = *this;
    for (; k > 0; --k) s.top_ = s.top_->below;
    return s;
  }

  /// Bottom to top.
  std::vector<Label> labels() const {
    std::vector<Label> out;
    for (const Node* n = top_.get(); n; n = n->below.get()) out.push_back(n->label);
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    Label label;
    std::shared_ptr<const Node> below;
    std::size_t size;
  };
  std::shared_ptr<const Node> top_;
};

using Stack = PersistentStack<std::string>;

inline std::string s1(const Stack& s) { return s.peek(0, std::string(kEndSymbol)); }
inline std::string s2(const Stack& s) { return s.peek(1, std::string(kEndSymbol)); }

inline Stack apply_move(const Stack& s, const Move& m) {
  switch (m.kind) {
    case Move::Kind::Shift:
      return s.push(m.symbol);
    case Move::Kind::Reduce1:
      if (s.size() < 1) throw DataError(to_string(m) + " needs a non-empty stack");
      return s.pop(1).push(m.symbol);
    case Move::Kind::Reduce2:
      if (s.size() < 2) throw DataError(to_string(m) + " needs two stack elements");
      return s.pop(2).push(m.symbol);
  }
  return s;
}

namespace detail {

inline void post_order(const Tree& t, std::vector<Move>& out) {
  if (t.is_leaf()) {
    if (t.label == kEndSymbol) throw DataError("the end symbol cannot appear in a tree");
    out.push_back(Move::shift(t.label));
    return;
  }
  if (t.children.size() > 2) throw DataError("node " + t.label + " has more than two children; binarize first");
  for (const auto& c : t.children) post_order(c, out);
  out.push_back(t.children.size() == 1 ? Move::reduce1(t.label) : Move::reduce2(t.label));
}

}  // namespace detail

/// Post-order moves of a binarised tree, ending with shift of the end symbol.
inline std::vector<Move> oracle_moves(const Tree& t) {
  std::vector<Move> out;
  detail::post_order(t, out);
  out.push_back(Move::shift(std::string(kEndSymbol)));
  return out;
}

/// Rebuilds the tree a complete move sequence describes.
inline Tree tree_from_moves(const std::vector<Move>& moves) {
  std::vector<Tree> st;
  bool done = false;
  for (const auto& m : moves) {
    if (done) throw DataError("moves continue after the end symbol was shifted");
    const std::size_t arity = static_cast<std::size_t>(m.kind);
    if (m.kind == Move::Kind::Shift) {
      if (m.symbol == kEndSymbol) {
        done = true;
        continue;
      }
      st.emplace_back(m.symbol);
      continue;
    }
    if (st.size() < arity) throw DataError(to_string(m) + " applied to a stack that is too short");
    Tree t(m.symbol);
    for (std::size_t i = st.size() - arity; i < st.size(); ++i) t.children.push_back(std::move(st[i]));
    st.resize(st.size() - arity);
    st.push_back(std::move(t));
  }
  if (!done || st.size() != 1) throw DataError("moves do not describe a single complete tree");
  return std::move(st.front());
}

enum class Flavor { Joint, Conditional };

inline std::string to_string(Flavor f) { return f == Flavor::Joint ? "joint" : "conditional"; }

inline Flavor parse_flavor(const std::string& s) {
  if (s == "joint") return Flavor::Joint;
  if (s == "cond" || s == "conditional") return Flavor::Conditional;
  throw ConfigError("unknown parser flavor '" + s + "' (choices: joint, cond)");
}

struct BeamConfig {
  /// States scoring below threshold x the best state that has shifted the
  /// same number of words are pruned.
  double threshold = 1e-6;
  bool require_observed_pairs = true;
  /// Hard limit on states expanded per prefix class.
  std::size_t max_states = 10000;

  void validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("beam threshold must be in (0, 1]");
    if (max_states == 0) throw ConfigError("beam state cap must be positive");
  }
};

/// Move distributions over symbol ids. Symbols (the end symbol included) are
/// numbered in sorted order, and a move's code is kind * |symbols| + symbol,
/// so comparing codes compares moves by kind and then symbol text.
class MoveModel {
 public:
  /// Unknown symbols in contexts.
  static constexpr int kUnknown = -2;

  MoveModel() = default;

  Flavor flavor() const { return flavor_; }
  void set_flavor(Flavor f) { flavor_ = f; }
  const std::string& start() const { return symbols_.at(static_cast<std::size_t>(start_)); }
  int start_id() const { return start_; }
  int end_id() const { return end_; }
  const std::vector<std::string>& symbols() const { return symbols_; }
  int num_symbols() const { return static_cast<int>(symbols_.size()); }
  const InterpolatedCondDist<2>& mixture() const { return dist_; }
  InterpolatedCondDist<2>& mixture() { return dist_; }
  const std::set<std::pair<int, int>>& observed_pairs() const { return observed_; }

  int symbol_id(const std::string& s) const {
    auto it = std::lower_bound(symbols_.begin(), symbols_.end(), s);
    return it != symbols_.end() && *it == s ? static_cast<int>(it - symbols_.begin()) : kUnknown;
  }

  int code(Move::Kind k, int sym) const { return static_cast<int>(k) * num_symbols() + sym; }
  Move::Kind kind_of(int code) const { return static_cast<Move::Kind>(code / num_symbols()); }
  int symbol_of(int code) const { return code % num_symbols(); }
  Move move(int code) const { return {kind_of(code), symbols_.at(static_cast<std::size_t>(symbol_of(code)))}; }
  std::optional<int> code(const Move& m) const {
    const int s = symbol_id(m.symbol);
    if (s < 0) return std::nullopt;
    return code(m.kind, s);
  }

  bool observed(int a, int b) const { return observed_.count({a, b}) > 0; }

  /// Structural constraints on moves regardless of estimates.
  bool allowed(int code, int a, int b) const {
    switch (kind_of(code)) {
      case Move::Kind::Shift:
        return symbol_of(code) != end_ || (a == start_ && b == end_);
      case Move::Kind::Reduce1:
        return a != end_;
      case Move::Kind::Reduce2:
        return b != end_;
    }
    return false;
  }

  /// Normalised distribution over allowed moves in context (s1, s2) and, for
  /// the conditional flavor, look-ahead `la`, as (code, probability) pairs in
  /// code order. Empty when the context carries no mass.
  std::vector<std::pair<int, double>> distribution(int a, int b, int la) const {
    std::vector<std::pair<int, double>> out;
    const bool cond = flavor_ == Flavor::Conditional;
    const Context pair_ctx = context(a, b), full_ctx = context(a, b, la);
    std::set<int> candidates;
    if (const auto* r = dist_.component(1).row(pair_ctx))
      for (const auto& [c, n] : r->counts) candidates.insert(c);
    if (cond)
      if (const auto* r = dist_.component(0).row(full_ctx))
        for (const auto& [c, n] : r->counts) candidates.insert(c);
    double z = 0.0;
    for (int c : candidates) {
      if (!allowed(c, a, b)) continue;
      if (cond && kind_of(c) == Move::Kind::Shift && symbol_of(c) != la) continue;
      const double p = cond ? dist_.prob({full_ctx, pair_ctx}, c) : dist_.component_prob(1, pair_ctx, c);
      if (p > 0.0) {
        out.emplace_back(c, p);
        z += p;
      }
    }
    for (auto& [c, p] : out) p /= z;
    return out;
  }

  /// String-level probability of move m in context (s1, s2, look-ahead).
  double prob(const Move& m, const std::string& a, const std::string& b, const std::string& la) const {
    const auto c = code(m);
    if (!c) return 0.0;
    for (const auto& [x, p] : distribution(symbol_id(a), symbol_id(b), symbol_id(la)))
      if (x == *c) return p;
    return 0.0;
  }

  // --- construction ---

  /// Symbols, counts and observed pairs from binarised training trees.
  static MoveModel from_treebank(const Corpus& train, int bucket_cap = 16) {
    if (train.empty()) throw DataError("empty training treebank");
    MoveModel m;
    std::set<std::string> syms{std::string(kEndSymbol)};
    for (const auto& t : train.trees)
      for (const auto& mv : oracle_moves(t)) syms.insert(mv.symbol);
    m.symbols_.assign(syms.begin(), syms.end());
    m.end_ = m.symbol_id(std::string(kEndSymbol));
    m.start_ = m.symbol_id(corpus_start_symbol(train));
    m.dist_ = InterpolatedCondDist<2>(3 * syms.size(), UnseenContext::Zero, 0, bucket_cap);
    for (const auto& t : train.trees)
      for (const auto& e : m.events(t)) m.dist_.observe(e.contexts, e.outcome);
    m.observe_pairs();
    return m;
  }

  /// (s1, s2, look-ahead) and (s1, s2) contexts of every oracle move of t.
  std::vector<InterpolatedCondDist<2>::Event> events(const Tree& t) const {
    std::vector<InterpolatedCondDist<2>::Event> out;
    const auto moves = oracle_moves(t);
    std::vector<int> words;
    for (const auto& w : yield(t)) words.push_back(symbol_id(w));
    std::size_t shifted = 0;
    PersistentStack<int> st;
    for (const auto& mv : moves) {
      const int a = st.peek(0, end_), b = st.peek(1, end_);
      const int la = shifted < words.size() ? words[shifted] : end_;
      const auto c = code(mv);
      out.push_back({{context(a, b, la), context(a, b)}, c ? *c : kUnknown});
      const int sym = c ? symbol_of(*c) : kUnknown;
      if (mv.kind == Move::Kind::Shift) {
        st = st.push(sym);
        ++shifted;
      } else {
        st = st.pop(static_cast<std::size_t>(mv.kind)).push(sym);
      }
    }
    return out;
  }

  void observe_pairs() {
    observed_.clear();
    for (const auto& [ctx, row] : dist_.component(1).rows()) observed_.insert({ctx[0], ctx[1]});
    observed_.insert({end_, start_});  // after the final shift
  }

  // --- persistence ---

  void write(std::ostream& os) const {
    os << "# mcle shift-reduce model\n";
    os << "flavor " << to_string(flavor_) << '\n';
    os << "start " << start() << '\n';
    os << "bucket_cap " << dist_.bucket_cap() << '\n';
    os << "[symbols]\n";
    for (const auto& s : symbols_) os << s << '\n';
    os << "[mixture]\n";
    dist_.write(os);
  }

  static MoveModel read(std::istream& in) {
    MoveModel m;
    std::string section, start;
    int cap = 16;
    std::vector<std::vector<std::string>> mixture;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
      ++lineno;
      auto f = split_ws(line);
      if (f.empty() || f[0][0] == '#') continue;
      if (f.size() == 1 && f[0].front() == '[' && f[0].back() == ']' && f[0].size() > 2) {
        section = f[0];
        continue;
      }
      const std::string where = "shift-reduce model line " + std::to_string(lineno);
      if (section.empty() && f.size() == 2 && f[0] == "flavor") {
        m.flavor_ = parse_flavor(f[1]);
      } else if (section.empty() && f.size() == 2 && f[0] == "start") {
        start = f[1];
      } else if (section.empty() && f.size() == 2 && f[0] == "bucket_cap") {
        cap = std::stoi(f[1]);
      } else if (section == "[symbols]" && f.size() == 1) {
        m.symbols_.push_back(f[0]);
      } else if (section == "[mixture]") {
        mixture.push_back(std::move(f));
      } else {
        throw DataError(where + ": unexpected line");
      }
    }
    if (!std::is_sorted(m.symbols_.begin(), m.symbols_.end()) ||
        std::adjacent_find(m.symbols_.begin(), m.symbols_.end()) != m.symbols_.end())
      throw DataError("shift-reduce model symbols must be sorted and distinct");
    m.end_ = m.symbol_id(std::string(kEndSymbol));
    m.start_ = m.symbol_id(start);
    if (m.end_ < 0 || m.start_ < 0) throw DataError("shift-reduce model lacks the end or start symbol");
    m.dist_ = InterpolatedCondDist<2>(3 * m.symbols_.size(), UnseenContext::Zero, 0, cap);
    for (const auto& f : mixture)
      if (!m.dist_.read_line(f)) throw DataError("bad shift-reduce mixture line: " + join(f));
    m.observe_pairs();
    return m;
  }

 private:
  Flavor flavor_ = Flavor::Joint;
  std::vector<std::string> symbols_;
  int start_ = 0;
  int end_ = 0;
  InterpolatedCondDist<2> dist_;
  std::set<std::pair<int, int>> observed_;
};

/// Relative frequencies of moves given the top two stack labels.
inline MoveModel estimate_joint(const Corpus& train) {
  MoveModel m = MoveModel::from_treebank(train);
  m.set_flavor(Flavor::Joint);
  return m;
}

struct ConditionalFit {
  MoveModel model;
  EmTrace trace;
};

/// Mixture of Phat(m | s1, s2, look-ahead) and Phat(m | s1, s2) with weights
/// bucketed by the training count of (s1, s2, look-ahead), fitted on heldout.
inline ConditionalFit estimate_conditional(const Corpus& train, const Corpus& heldout, const EmOptions& em = {},
                                           int bucket_cap = 16) {
  if (heldout.empty()) throw DataError("empty heldout treebank");
  ConditionalFit f{MoveModel::from_treebank(train, bucket_cap), {}};
  f.model.set_flavor(Flavor::Conditional);
  std::vector<InterpolatedCondDist<2>::Event> events;
  for (const auto& t : heldout.trees)
    for (const auto& e : f.model.events(t))
      if (e.outcome >= 0) events.push_back(e);
  f.trace = f.model.mixture().fit(events, em);
  return f;
}

/// log P of a complete move sequence for `words`; -inf if some move has zero
/// probability.
inline double parse_log_prob(const MoveModel& m, const std::vector<Move>& moves, const std::vector<std::string>& words) {
  PersistentStack<int> st;
  std::size_t shifted = 0;
  double lp = 0.0;
  bool done = false;
  for (const auto& mv : moves) {
    if (done) throw DataError("moves continue after the end symbol was shifted");
    const int a = st.peek(0, m.end_id()), b = st.peek(1, m.end_id());
    const std::string la = shifted < words.size() ? words[shifted] : std::string(kEndSymbol);
    if (mv.kind == Move::Kind::Shift && mv.symbol != la)
      throw DataError(to_string(mv) + " does not shift the next input symbol " + la);
    if (mv.kind != Move::Kind::Shift && st.size() < static_cast<std::size_t>(mv.kind))
      throw DataError(to_string(mv) + " applied to a stack that is too short");
    const auto c = m.code(mv);
    double p = 0.0;
    if (c)
      for (const auto& [x, q] : m.distribution(a, b, m.symbol_id(la)))
        if (x == *c) p = q;
    lp += std::log(p);
    const int sym = c ? m.symbol_of(*c) : MoveModel::kUnknown;
    if (mv.kind == Move::Kind::Shift) {
      st = st.push(sym);
      done = ++shifted > words.size();
    } else {
      st = st.pop(static_cast<std::size_t>(mv.kind)).push(sym);
    }
  }
  if (!done) throw DataError("moves do not end by shifting the end symbol");
  return lp;
}

struct BeamParse {
  Tree tree;
  std::vector<Move> moves;
  double log_prob;
};

namespace detail {

struct MoveList {
  int code;
  std::shared_ptr<const MoveList> prev;
};

inline std::vector<int> unroll(const std::shared_ptr<const MoveList>& l) {
  std::vector<int> out;
  for (const MoveList* n = l.get(); n; n = n->prev.get()) out.push_back(n->code);
  std::reverse(out.begin(), out.end());
  return out;
}

struct SearchState {
  PersistentStack<int> stack;
  std::shared_ptr<const MoveList> moves;
  double logp;
};

/// Higher score first; equal scores by move sequence.
struct StateOrder {
  bool operator()(const SearchState& x, const SearchState& y) const {  // true if x after y
    if (x.logp != y.logp) return x.logp < y.logp;
    return unroll(y.moves) < unroll(x.moves);
  }
};

}  // namespace detail

/// Scores within this much (in log space) of the best complete parse tie, and
/// the tie goes to the smaller move sequence.
inline constexpr double kScoreTieTolerance = 1e-12;

inline std::optional<BeamParse> beam_parse(const MoveModel& m, const std::vector<std::string>& words,
                                           const BeamConfig& cfg = {}) {
  using detail::SearchState;
  cfg.validate();
  if (words.empty()) throw DataError("cannot parse an empty sentence");
  const int E = m.end_id();
  std::vector<int> w;
  for (const auto& x : words) w.push_back(m.symbol_id(x));
  w.push_back(E);
  const double log_thr = std::log(cfg.threshold);
  auto keep = [&](const PersistentStack<int>& s) {
    return !cfg.require_observed_pairs || m.observed(s.peek(0, E), s.peek(1, E));
  };

  std::vector<SearchState> incoming{{PersistentStack<int>{}, nullptr, 0.0}};
  std::vector<SearchState> complete;
  for (std::size_t k = 0; k <= words.size() && !incoming.empty(); ++k) {
    const int la = w[k];
    double best = kNegInf;
    for (const auto& s : incoming) best = std::max(best, s.logp);
    std::priority_queue<SearchState, std::vector<SearchState>, detail::StateOrder> agenda(detail::StateOrder{},
                                                                                        std::move(incoming));
    incoming.clear();
    std::size_t expanded = 0;
    while (!agenda.empty() && expanded < cfg.max_states) {
      SearchState s = agenda.top();
      agenda.pop();
      if (s.logp < best + log_thr) break;
      ++expanded;
      const int a = s.stack.peek(0, E), b = s.stack.peek(1, E);
      for (const auto& [c, p] : m.distribution(a, b, la)) {
        const auto kind = m.kind_of(c);
        if (kind == Move::Kind::Shift && m.symbol_of(c) != la) continue;
        SearchState next{kind == Move::Kind::Shift
                             ? s.stack.push(la)
                             : s.stack.pop(static_cast<std::size_t>(kind)).push(m.symbol_of(c)),
                         std::make_shared<const detail::MoveList>(detail::MoveList{c, s.moves}), s.logp + std::log(p)};
        if (!keep(next.stack)) continue;
        if (kind != Move::Kind::Shift) {
          if (next.logp >= best + log_thr) agenda.push(std::move(next));
        } else if (la == E) {
          complete.push_back(std::move(next));
        } else {
          incoming.push_back(std::move(next));
        }
      }
    }
  }
  if (complete.empty()) return std::nullopt;
  double top = kNegInf;
  for (const auto& s : complete) top = std::max(top, s.logp);
  const SearchState* pick = nullptr;
  std::vector<int> pick_moves;
  for (const auto& s : complete) {
    if (s.logp < top - kScoreTieTolerance) continue;
    auto mv = detail::unroll(s.moves);
    if (!pick || mv < pick_moves) {
      pick = &s;
      pick_moves = std::move(mv);
    }
  }
  BeamParse r{Tree(), {}, pick->logp};
  for (int c : pick_moves) r.moves.push_back(m.move(c));
  r.tree = tree_from_moves(r.moves);
  return r;
}

struct CorpusParse {
  /// Debinarised trees; empty for sentences the beam failed on.
  std::vector<std::optional<Tree>> trees;
  std::size_t failures = 0;
};

inline CorpusParse parse_corpus(const MoveModel& m, const std::vector<std::vector<std::string>>& sentences,
                                const BeamConfig& cfg = {}, const BinarizeOptions& bin = {}, unsigned threads = 1) {
  CorpusParse out;
  out.trees.resize(sentences.size());
  parallel_for(sentences.size(), threads, [&](std::size_t i) {
    if (auto r = beam_parse(m, sentences[i], cfg)) out.trees[i] = debinarize(r->tree, bin);
  });
  for (const auto& t : out.trees) out.failures += !t;
  return out;
}

}  // namespace mcle
