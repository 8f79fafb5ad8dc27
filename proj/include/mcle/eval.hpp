// Labelled bracket scoring and a paired bootstrap test on F-score differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "mcle/common.hpp"
#include "mcle/tree.hpp"

namespace mcle {

struct Bracket {
  std::size_t start;
  std::size_t end;
  std::string label;

  auto operator<=>(const Bracket&) const = default;
};

/// One bracket per internal node over the terminal positions it spans, in
/// sorted order. Leaves are terminals and contribute nothing.
inline std::vector<Bracket> brackets(const Tree& t) {
  std::vector<Bracket> out;
  std::size_t pos = 0;
  auto walk = [&](auto&& self, const Tree& n) -> void {
    if (n.is_leaf()) {
      ++pos;
      return;
    }
    const std::size_t start = pos;
    for (const auto& c : n.children) self(self, c);
    out.push_back({start, pos, n.label});
  };
  walk(walk, t);
  std::sort(out.begin(), out.end());
  return out;
}

struct BracketCounts {
  std::int64_t matched = 0;
  std::int64_t gold = 0;
  std::int64_t predicted = 0;

  BracketCounts& operator+=(const BracketCounts& o) {
    matched += o.matched;
    gold += o.gold;
    predicted += o.predicted;
    return *this;
  }
};

/// Micro-averaged scores. Precision is 1 when nothing was predicted; F is 0
/// when P + R = 0.
struct EvalReport {
  BracketCounts counts;
  std::size_t sentences = 0;
  std::size_t failures = 0;

  double precision() const {
    return counts.predicted == 0 ? 1.0 : static_cast<double>(counts.matched) / static_cast<double>(counts.predicted);
  }
  double recall() const {
    return counts.gold == 0 ? 1.0 : static_cast<double>(counts.matched) / static_cast<double>(counts.gold);
  }
  double f_score() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

/// Multiset intersection size of two sorted bracket lists.
inline std::int64_t matched_brackets(const std::vector<Bracket>& a, const std::vector<Bracket>& b) {
  std::int64_t n = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n, ++i, ++j;
    }
  }
  return n;
}

using Predictions = std::vector<std::optional<Tree>>;

inline Predictions as_predictions(const Corpus& c) { return Predictions(c.trees.begin(), c.trees.end()); }

/// Counts for one sentence; a missing prediction has no brackets.
inline BracketCounts sentence_counts(const Corpus& gold, std::size_t i, const std::optional<Tree>& pred) {
  const auto g = brackets(gold.trees[i]);
  BracketCounts c;
  c.gold = static_cast<std::int64_t>(g.size());
  if (!pred) return c;
  if (yield(*pred) != yield(gold.trees[i]))
    throw DataError("sentence " + gold.id(i) + ": predicted and gold terminal strings differ");
  const auto p = brackets(*pred);
  c.predicted = static_cast<std::int64_t>(p.size());
  c.matched = matched_brackets(g, p);
  return c;
}

inline std::vector<BracketCounts> per_sentence_counts(const Corpus& gold, const Predictions& pred) {
  if (pred.size() != gold.size())
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences but predictions have " +
                    std::to_string(pred.size()));
  std::vector<BracketCounts> out;
  out.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) out.push_back(sentence_counts(gold, i, pred[i]));
  return out;
}

inline EvalReport score_corpus(const Corpus& gold, const Predictions& pred) {
  EvalReport r;
  for (const auto& c : per_sentence_counts(gold, pred)) r.counts += c;
  r.sentences = gold.size();
  r.failures = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), std::nullopt));
  return r;
}

inline EvalReport score_corpus(const Corpus& gold, const Corpus& pred) { return score_corpus(gold, as_predictions(pred)); }

struct BootstrapResult {
  double p_value = 1.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  double observed_delta_f = 0.0;
};

/// Generator for resample `iteration`: mt19937_64 seeded through seed_seq
/// with the low and high halves of `seed` and the iteration index.
inline std::mt19937_64 bootstrap_generator(std::uint64_t seed, std::size_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration)};
  return std::mt19937_64(seq);
}

/// Paired bootstrap, shift method: with d the observed F(A) - F(B) and d_b
/// the difference on resample b, p = #{b : |d_b - d| >= |d|} / B. Sentences
/// are first put in an order that depends only on their content, so the
/// result does not depend on how the corpus was ordered. Index draws use
/// gen() % n, which is portable across standard libraries.
inline BootstrapResult bootstrap_test(const Corpus& gold, const Predictions& a, const Predictions& b,
                                      std::size_t iterations, std::uint64_t seed, unsigned threads = 1) {
  if (iterations == 0) throw ConfigError("bootstrap needs at least one iteration");
  const auto ca = per_sentence_counts(gold, a), cb = per_sentence_counts(gold, b);
  const std::size_t n = gold.size();

  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<std::pair<Key, std::size_t>> keyed;
  auto text = [](const std::optional<Tree>& t) { return t ? to_string(*t) : std::string(); };
  for (std::size_t i = 0; i < n; ++i) keyed.push_back({{to_string(gold.trees[i]), text(a[i]), text(b[i])}, i});
  std::sort(keyed.begin(), keyed.end());
  std::vector<BracketCounts> sa, sb;
  for (const auto& [k, i] : keyed) {
    sa.push_back(ca[i]);
    sb.push_back(cb[i]);
  }

  auto delta = [&](const auto& pick) {
    EvalReport ra, rb;
    for (std::size_t i = 0; i < n; ++i) {
      ra.counts += sa[pick(i)];
      rb.counts += sb[pick(i)];
    }
    return ra.f_score() - rb.f_score();
  };

  BootstrapResult r;
  r.iterations = iterations;
  r.seed = seed;
  r.observed_delta_f = delta([](std::size_t i) { return i; });
  std::vector<char> extreme(iterations, 0);
  if (n > 0) {
    parallel_for(iterations, threads, [&](std::size_t it) {
      auto gen = bootstrap_generator(seed, it);
      std::vector<std::size_t> idx(n);
      for (auto& x : idx) x = static_cast<std::size_t>(gen() % n);
      const double d = delta([&](std::size_t i) { return idx[i]; });
      extreme[it] = std::abs(d - r.observed_delta_f) >= std::abs(r.observed_delta_f);
    });
  } else {
    std::fill(extreme.begin(), extreme.end(), 1);
  }
  r.p_value = static_cast<double>(std::count(extreme.begin(), extreme.end(), 1)) / static_cast<double>(iterations);
  return r;
}

}  // namespace mcle
