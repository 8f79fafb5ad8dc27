// Chart algorithms over a PCFG of arbitrary arity: inside-outside expected
// rule counts and Viterbi (CKY) parsing.
//
// The grammar is compiled into a unary/binary form. A rule A -> X1 .. Xk with
// k > 2 becomes a left-branching chain of private intermediate symbols
//   [A->X1..Xk,2] -> X1 X2 (weight 1), [.,i] -> [.,i-1] Xi (weight 1),
//   A -> [.,k-1] Xk (weight theta),
// so every use of the original rule is exactly one use of its final binary
// rule and expectations map back without approximation. Terminals are chart
// symbols with inside value 1 over their own one-word span. Unary chains
// between nonterminals (including cycles) are summed in closed form through
// (I - U)^-1, where U holds the nonterminal-to-nonterminal unary weights.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcle/common.hpp"
#include "mcle/pcfg.hpp"
#include "mcle/tree.hpp"

namespace mcle {

struct SentenceExpectations {
  /// log of the summed probability of every parse of the string; -inf when
  /// the string is outside the grammar's language.
  double log_marginal = kNegInf;
  bool parsable = false;
  /// Expected usage of each grammar rule given the string (all zero when
  /// unparsable).
  std::map<Production, double> expected_counts;
};

class ChartGrammar {
 public:
  /// Dense form of the expectations, indexed like rules().
  struct Expectations {
    double log_marginal = kNegInf;
    bool parsable = false;
    std::vector<double> expected;
  };

  explicit ChartGrammar(const Pcfg& g) : start_name_(g.start()) {
    const auto nts = g.nonterminals();
    for (const auto& a : nts) names_.push_back(a);
    nt_count_ = static_cast<int>(names_.size());
    std::unordered_map<std::string, int> nt_id;
    for (int a = 0; a < nt_count_; ++a) nt_id[names_[static_cast<std::size_t>(a)]] = a;
    for (const auto& t : g.terminals()) {
      term_id_[t] = static_cast<int>(names_.size());
      names_.push_back(t);
    }
    term_end_ = static_cast<int>(names_.size());
    auto sym = [&](const std::string& s) {
      auto it = nt_id.find(s);
      return it != nt_id.end() ? it->second : term_id_.at(s);
    };
    start_ = nt_id.count(g.start()) ? nt_id[g.start()] : -1;

    lexical_.resize(static_cast<std::size_t>(term_end_));
    for (const auto& [p, w] : g.theta()) {
      const int r = static_cast<int>(rules_.size());
      rules_.push_back(p);
      weights_.push_back(w);
      const int lhs = nt_id.at(p.lhs);
      const std::size_t k = p.rhs.size();
      if (k == 1) {
        const int c = sym(p.rhs[0]);
        if (c < nt_count_)
          unary_.push_back({lhs, c, r, w, std::log(w)});
        else
          lexical_[static_cast<std::size_t>(c)].push_back({lhs, r, w, std::log(w)});
        continue;
      }
      int left = sym(p.rhs[0]);
      for (std::size_t i = 1; i + 1 < k; ++i) {
        const int dotted = static_cast<int>(names_.size());
        names_.push_back("[" + to_string(p) + "," + std::to_string(i + 1) + "]");
        binary_.push_back({dotted, left, sym(p.rhs[i]), r, 1.0, 0.0, false});
        left = dotted;
      }
      binary_.push_back({lhs, left, sym(p.rhs[k - 1]), r, w, std::log(w), true});
    }
    sym_count_ = static_cast<int>(names_.size());
    by_left_.resize(static_cast<std::size_t>(sym_count_));
    for (std::size_t b = 0; b < binary_.size(); ++b) by_left_[static_cast<std::size_t>(binary_[b].left)].push_back(static_cast<int>(b));
    build_closure();
  }

  const std::vector<Production>& rules() const { return rules_; }
  const std::vector<double>& weights() const { return weights_; }

  Expectations expectations(std::span<const std::string> x) const {
    Expectations out;
    out.expected.assign(rules_.size(), 0.0);
    if (x.empty()) throw DataError("inside-outside needs a non-empty string");
    Chart ch = inside(x);
    const double z = start_ < 0 ? 0.0 : ch.beta(0, ch.n)[start_];
    if (!(z > 0.0)) return out;
    out.parsable = true;
    out.log_marginal = std::log(z);
    outside(ch, z, out.expected);
    return out;
  }

  SentenceExpectations inside_outside(std::span<const std::string> x) const {
    auto e = expectations(x);
    SentenceExpectations out;
    out.log_marginal = e.log_marginal;
    out.parsable = e.parsable;
    for (std::size_t r = 0; r < rules_.size(); ++r) out.expected_counts[rules_[r]] = e.expected[r];
    return out;
  }

  double log_marginal(std::span<const std::string> x) const {
    if (x.empty()) throw DataError("inside pass needs a non-empty string");
    Chart ch = inside(x);
    const double z = start_ < 0 ? 0.0 : ch.beta(0, ch.n)[start_];
    return z > 0.0 ? std::log(z) : kNegInf;
  }

  /// Most probable parse. Ties go to the lexicographically smaller rule
  /// (lhs, then rhs), then to the smaller split point.
  std::optional<Tree> viterbi(std::span<const std::string> x) const;

 private:
  struct Unary {
    int lhs, child, rule;
    double w, logw;
  };
  struct Lexical {
    int lhs, rule;
    double w, logw;
  };
  struct Binary {
    int parent, left, right, rule;
    double w, logw;
    bool final;
  };
  struct ClosureEntry {
    int from, to;
    double v;
  };

  struct Chart {
    std::size_t n = 0;
    std::size_t syms = 0;
    std::vector<int> words;  // terminal symbol id or -1
    std::vector<double> in, out;
    std::vector<std::vector<int>> support;  // symbols with nonzero inside value

    std::size_t idx(std::size_t i, std::size_t j) const { return i * (n + 1) + j; }
    double* beta(std::size_t i, std::size_t j) { return in.data() + idx(i, j) * syms; }
    const double* beta(std::size_t i, std::size_t j) const { return in.data() + idx(i, j) * syms; }
    double* alpha(std::size_t i, std::size_t j) { return out.data() + idx(i, j) * syms; }
    const std::vector<int>& live(std::size_t i, std::size_t j) const { return support[idx(i, j)]; }
  };

  void build_closure() {
    bool any = false;
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(nt_count_, nt_count_);
    std::vector<std::vector<char>> reach(static_cast<std::size_t>(nt_count_), std::vector<char>(static_cast<std::size_t>(nt_count_), 0));
    for (int a = 0; a < nt_count_; ++a) reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = 1;
    for (const auto& un : unary_) {
      u(un.lhs, un.child) += un.w;
      if (un.w > 0.0) {
        reach[static_cast<std::size_t>(un.lhs)][static_cast<std::size_t>(un.child)] = 1;
        any = true;
      }
    }
    has_unary_ = any;
    if (!any) return;
    for (int k = 0; k < nt_count_; ++k)
      for (int a = 0; a < nt_count_; ++a)
        if (reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)])
          for (int b = 0; b < nt_count_; ++b)
            if (reach[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)]) reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(nt_count_, nt_count_) - u;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw EstimationError("unary rules form a cycle with probability one");
    const Eigen::MatrixXd star = lu.inverse();
    for (int a = 0; a < nt_count_; ++a)
      for (int b = 0; b < nt_count_; ++b)
        if (reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) {
          const double v = star(a, b);
          if (!(v > 0.0) || !std::isfinite(v)) throw EstimationError("unary closure is not a proper sum of chains");
          closure_.push_back({a, b, v});
        }
  }

  std::vector<int> map_words(std::span<const std::string> x) const {
    std::vector<int> w(x.size(), -1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto it = term_id_.find(x[i]);
      if (it != term_id_.end()) w[i] = it->second;
    }
    return w;
  }

  Chart inside(std::span<const std::string> x) const {
    Chart ch;
    ch.n = x.size();
    ch.syms = static_cast<std::size_t>(sym_count_);
    ch.words = map_words(x);
    ch.in.assign((ch.n + 1) * (ch.n + 1) * ch.syms, 0.0);
    ch.support.resize((ch.n + 1) * (ch.n + 1));
    std::vector<double> tmp(ch.syms);
    for (std::size_t w = 1; w <= ch.n; ++w) {
      for (std::size_t i = 0; i + w <= ch.n; ++i) {
        const std::size_t j = i + w;
        std::fill(tmp.begin(), tmp.end(), 0.0);
        double* b = ch.beta(i, j);
        if (w == 1) {
          const int t = ch.words[i];
          if (t >= 0) {
            b[t] = 1.0;
            for (const auto& lx : lexical_[static_cast<std::size_t>(t)]) tmp[static_cast<std::size_t>(lx.lhs)] += lx.w;
          }
        } else {
          for (std::size_t k = i + 1; k < j; ++k) {
            const double* bl = ch.beta(i, k);
            const double* br = ch.beta(k, j);
            if (ch.live(k, j).empty()) continue;
            for (int y : ch.live(i, k)) {
              const double by = bl[y];
              for (int bi : by_left_[static_cast<std::size_t>(y)]) {
                const Binary& r = binary_[static_cast<std::size_t>(bi)];
                const double bz = br[r.right];
                if (bz > 0.0) tmp[static_cast<std::size_t>(r.parent)] += r.w * by * bz;
              }
            }
          }
        }
        close_unary(tmp, b);
        for (int s = 0; s < sym_count_; ++s)
          if (b[s] > 0.0) ch.support[ch.idx(i, j)].push_back(s);
      }
    }
    return ch;
  }

  // b[nt] = sum_c closure(nt, c) * tmp[c]; other symbols copy through.
  void close_unary(const std::vector<double>& tmp, double* b) const {
    if (!has_unary_) {
      for (int s = 0; s < sym_count_; ++s)
        if (s < nt_count_ || s >= term_end_) b[s] = tmp[static_cast<std::size_t>(s)];
      return;
    }
    for (int s = term_end_; s < sym_count_; ++s) b[s] = tmp[static_cast<std::size_t>(s)];
    for (const auto& c : closure_) b[c.from] += c.v * tmp[static_cast<std::size_t>(c.to)];
  }

  void outside(Chart& ch, double z, std::vector<double>& expected) const {
    ch.out.assign(ch.in.size(), 0.0);
    ch.alpha(0, ch.n)[start_] = 1.0;
    std::vector<double> a0(ch.syms);
    for (std::size_t w = ch.n; w >= 1; --w) {
      for (std::size_t i = 0; i + w <= ch.n; ++i) {
        const std::size_t j = i + w;
        const double* b = ch.beta(i, j);
        const double* a = ch.alpha(i, j);
        // a0: outside weight of a symbol just below any unary chain.
        std::fill(a0.begin(), a0.end(), 0.0);
        for (int s = term_end_; s < sym_count_; ++s) a0[static_cast<std::size_t>(s)] = a[s];
        if (has_unary_) {
          for (const auto& c : closure_) a0[static_cast<std::size_t>(c.to)] += a[c.from] * c.v;
        } else {
          for (int s = 0; s < nt_count_; ++s) a0[static_cast<std::size_t>(s)] = a[s];
        }
        for (const auto& un : unary_) {
          const double c = a0[static_cast<std::size_t>(un.lhs)] * un.w * b[un.child];
          if (c > 0.0) expected[static_cast<std::size_t>(un.rule)] += c / z;
        }
        if (w == 1) {
          const int t = ch.words[i];
          if (t >= 0)
            for (const auto& lx : lexical_[static_cast<std::size_t>(t)])
              expected[static_cast<std::size_t>(lx.rule)] += a0[static_cast<std::size_t>(lx.lhs)] * lx.w / z;
          continue;
        }
        for (std::size_t k = i + 1; k < j; ++k) {
          const double* bl = ch.beta(i, k);
          const double* br = ch.beta(k, j);
          double* al = ch.alpha(i, k);
          double* ar = ch.alpha(k, j);
          for (int y : ch.live(i, k)) {
            const double by = bl[y];
            for (int bi : by_left_[static_cast<std::size_t>(y)]) {
              const Binary& r = binary_[static_cast<std::size_t>(bi)];
              const double ap = a0[static_cast<std::size_t>(r.parent)];
              if (ap == 0.0) continue;
              const double bz = br[r.right];
              if (bz == 0.0) continue;
              const double c = ap * r.w;
              al[y] += c * bz;
              ar[r.right] += c * by;
              if (r.final) expected[static_cast<std::size_t>(r.rule)] += c * by * bz / z;
            }
          }
        }
      }
    }
  }

  std::string start_name_;
  int start_ = -1;
  int nt_count_ = 0;
  int term_end_ = 0;
  int sym_count_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> term_id_;
  std::vector<Production> rules_;
  std::vector<double> weights_;
  std::vector<Unary> unary_;
  std::vector<std::vector<Lexical>> lexical_;
  std::vector<Binary> binary_;
  std::vector<std::vector<int>> by_left_;
  std::vector<ClosureEntry> closure_;
  bool has_unary_ = false;
};

inline std::optional<Tree> ChartGrammar::viterbi(std::span<const std::string> x) const {
  if (x.empty()) throw DataError("viterbi parse needs a non-empty string");
  const std::size_t n = x.size();
  const std::size_t syms = static_cast<std::size_t>(sym_count_);
  const auto words = map_words(x);
  auto idx = [&](std::size_t i, std::size_t j) { return (i * (n + 1) + j) * syms; };

  // Best score before unary chains (best0) and after (best). bp0 records the
  // producing lexical (-1 - rule) or binary (index) rule plus split; bpu the
  // unary rule taken at the top of the chain, or -1.
  struct Back {
    int rule = -1;
    int binary = -1;
    int split = -1;
    int rank = std::numeric_limits<int>::max();
  };
  const std::size_t cells = (n + 1) * (n + 1) * syms;
  std::vector<double> best0(cells, kNegInf), best(cells, kNegInf);
  std::vector<Back> bp0(cells);
  std::vector<int> bpu(cells, -1);
  std::vector<std::vector<int>> live((n + 1) * (n + 1));

  for (std::size_t w = 1; w <= n; ++w) {
    for (std::size_t i = 0; i + w <= n; ++i) {
      const std::size_t j = i + w;
      const std::size_t base = idx(i, j);
      auto offer = [&](int s, double score, int rank, int split, int binary, int rule) {
        const std::size_t c = base + static_cast<std::size_t>(s);
        Back& cur = bp0[c];
        if (score > best0[c] || (score == best0[c] && std::pair(rank, split) < std::pair(cur.rank, cur.split))) {
          best0[c] = score;
          cur = Back{rule, binary, split, rank};
        }
      };
      if (w == 1) {
        const int t = words[i];
        if (t >= 0) {
          best[base + static_cast<std::size_t>(t)] = 0.0;
          for (const auto& lx : lexical_[static_cast<std::size_t>(t)]) offer(lx.lhs, lx.logw, lx.rule, 0, -1, lx.rule);
        }
      } else {
        for (std::size_t k = i + 1; k < j; ++k) {
          const std::size_t lb = idx(i, k), rb = idx(k, j);
          for (int y : live[(i * (n + 1) + k)]) {
            const double sy = best[lb + static_cast<std::size_t>(y)];
            for (int bi : by_left_[static_cast<std::size_t>(y)]) {
              const Binary& r = binary_[static_cast<std::size_t>(bi)];
              const double sz = best[rb + static_cast<std::size_t>(r.right)];
              if (sz == kNegInf) continue;
              offer(r.parent, r.logw + sy + sz, r.rule, static_cast<int>(k), bi, r.rule);
            }
          }
        }
      }
      for (int s = 0; s < sym_count_; ++s)
        if (s < nt_count_ || s >= term_end_) best[base + static_cast<std::size_t>(s)] = best0[base + static_cast<std::size_t>(s)];
      // Unary chains: relax to a fixed point. Improvements are strict, so
      // back-pointers never form a cycle.
      for (int pass = 0; pass <= nt_count_ && has_unary_; ++pass) {
        bool changed = false;
        for (std::size_t u = 0; u < unary_.size(); ++u) {
          const Unary& un = unary_[u];
          const double s = un.logw + best[base + static_cast<std::size_t>(un.child)];
          if (s > best[base + static_cast<std::size_t>(un.lhs)]) {
            best[base + static_cast<std::size_t>(un.lhs)] = s;
            bpu[base + static_cast<std::size_t>(un.lhs)] = static_cast<int>(u);
            changed = true;
          }
        }
        if (!changed) break;
      }
      for (int s = 0; s < sym_count_; ++s)
        if (best[base + static_cast<std::size_t>(s)] > kNegInf) live[i * (n + 1) + j].push_back(s);
    }
  }
  if (start_ < 0 || best[idx(0, n) + static_cast<std::size_t>(start_)] == kNegInf) return std::nullopt;

  auto build_full = [&](auto&& self, int s, std::size_t i, std::size_t j) -> Tree {
    const std::size_t c = idx(i, j) + static_cast<std::size_t>(s);
    if (s >= nt_count_ && s < term_end_) return Tree(x[i]);
    if (s < nt_count_ && bpu[c] >= 0) {
      const Unary& un = unary_[static_cast<std::size_t>(bpu[c])];
      return Tree(names_[static_cast<std::size_t>(s)], {self(self, un.child, i, j)});
    }
    const Back& b = bp0[c];
    if (b.binary < 0) return Tree(names_[static_cast<std::size_t>(s)], {Tree(x[i])});
    std::vector<Tree> kids;
    // Unfold the intermediate-symbol chain into the original rule's children.
    auto expand = [&](auto&& rec, int sym, std::size_t a, std::size_t e) -> void {
      const std::size_t cc = idx(a, e) + static_cast<std::size_t>(sym);
      if (sym >= term_end_) {
        const Back& bb = bp0[cc];
        const Binary& r = binary_[static_cast<std::size_t>(bb.binary)];
        rec(rec, r.left, a, static_cast<std::size_t>(bb.split));
        kids.push_back(self(self, r.right, static_cast<std::size_t>(bb.split), e));
        return;
      }
      kids.push_back(self(self, sym, a, e));
    };
    const Binary& r = binary_[static_cast<std::size_t>(b.binary)];
    expand(expand, r.left, i, static_cast<std::size_t>(b.split));
    kids.push_back(self(self, r.right, static_cast<std::size_t>(b.split), j));
    return Tree(names_[static_cast<std::size_t>(s)], std::move(kids));
  };
  return build_full(build_full, start_, 0, n);
}

/// Convenience wrappers compiling the grammar per call. Reuse a ChartGrammar
/// when scoring many strings.
inline SentenceExpectations inside_outside(const Pcfg& g, std::span<const std::string> x) {
  return ChartGrammar(g).inside_outside(x);
}

inline std::optional<Tree> viterbi_parse(const Pcfg& g, std::span<const std::string> x) {
  return ChartGrammar(g).viterbi(x);
}

}  // namespace mcle
