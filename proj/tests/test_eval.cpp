#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "mcle/binarize.hpp"
#include "mcle/eval.hpp"

namespace mcle {
namespace {

TEST(Brackets, Examples) {
  EXPECT_EQ(brackets(parse_tree("(S (A a) (B b))")),
            (std::vector<Bracket>{{0, 1, "A"}, {0, 2, "S"}, {1, 2, "B"}}));
  EXPECT_EQ(brackets(parse_tree("(S a)")), (std::vector<Bracket>{{0, 1, "S"}}));
  // unary chains give repeated spans
  EXPECT_EQ(brackets(parse_tree("(S (S (A a)))")),
            (std::vector<Bracket>{{0, 1, "A"}, {0, 1, "S"}, {0, 1, "S"}}));
}

Tree random_nary(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> labels{"S", "NP", "VP"};
  std::uniform_int_distribution<int> arity(0, depth > 0 ? 4 : 0);
  const int n = arity(rng);
  if (n == 0) return Tree("x");
  Tree t(labels[std::uniform_int_distribution<std::size_t>(0, 2)(rng)]);
  for (int i = 0; i < n; ++i) t.children.push_back(random_nary(rng, depth - 1));
  return t;
}

TEST(Brackets, SurviveBinarisationRoundTrip) {
  std::mt19937_64 rng(3);
  const auto rules = HeadRules::parse("S: left S\n");
  for (int i = 0; i < 200; ++i) {
    Tree t = random_nary(rng, 4);
    if (t.is_leaf()) t = Tree("S", {t});
    EXPECT_EQ(brackets(debinarize(binarize(t, rules))), brackets(t));
    EXPECT_EQ(brackets(t).size(), node_count(t) - yield(t).size());
  }
}

TEST(ScoreCorpus, IdentityAndOneRelabelledBracket) {
  const auto gold = read_bracketed("(S (A a) (B b) (C c))");
  auto r = score_corpus(gold, gold);
  EXPECT_EQ(r.precision(), 1.0);
  EXPECT_EQ(r.recall(), 1.0);
  EXPECT_EQ(r.f_score(), 1.0);
  r = score_corpus(gold, read_bracketed("(S (A a) (B b) (D c))"));
  EXPECT_EQ(r.counts.matched, 3);
  EXPECT_EQ(r.precision(), 0.75);
  EXPECT_EQ(r.recall(), 0.75);
}

TEST(ScoreCorpus, FailuresAndMicroAveraging) {
  const auto gold = read_bracketed("(S (A a) (B b))\n(S a)");
  auto r = score_corpus(gold, Predictions{std::nullopt, std::nullopt});
  EXPECT_EQ(r.precision(), 1.0);
  EXPECT_EQ(r.recall(), 0.0);
  EXPECT_EQ(r.f_score(), 0.0);
  EXPECT_EQ(r.failures, 2u);
  // 2 of 3 predicted brackets right in sentence 1, nothing predicted for 2.
  r = score_corpus(gold, Predictions{parse_tree("(S (A a) (A b))"), std::nullopt});
  EXPECT_EQ(r.counts.matched, 2);
  EXPECT_EQ(r.counts.predicted, 3);
  EXPECT_EQ(r.counts.gold, 4);
  EXPECT_DOUBLE_EQ(r.f_score(), 2 * (2.0 / 3) * 0.5 / (2.0 / 3 + 0.5));
}

TEST(ScoreCorpus, MisalignmentNamesTheSentence) {
  Corpus gold;
  gold.push_back(parse_tree("(S a)"), "s1");
  gold.push_back(parse_tree("(S b)"), "s2");
  try {
    score_corpus(gold, read_bracketed("(S a)\n(S c)"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("s2"), std::string::npos);
  }
  EXPECT_THROW(score_corpus(gold, read_bracketed("(S a)")), DataError);
}

Tree random_parse(std::mt19937_64& rng, std::size_t len) {
  static const std::vector<std::string> labels{"S", "A", "B"};
  auto lab = [&] { return labels[std::uniform_int_distribution<std::size_t>(0, 2)(rng)]; };
  std::vector<Tree> nodes;
  for (std::size_t i = 0; i < len; ++i) nodes.push_back(Tree(lab(), {Tree("w")}));
  while (nodes.size() > 1) {
    const auto i = std::uniform_int_distribution<std::size_t>(0, nodes.size() - 2)(rng);
    Tree t(lab(), {nodes[i], nodes[i + 1]});
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(i), nodes.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(i), t);
  }
  return nodes[0];
}

struct Triple {
  Corpus gold;
  Predictions a, b;
};

Triple random_triple(std::mt19937_64& rng, std::size_t n) {
  Triple t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    t.gold.push_back(random_parse(rng, len));
    t.a.push_back(random_parse(rng, len));
    t.b.push_back(random_parse(rng, len));
  }
  return t;
}

TEST(ScoreCorpus, PrecisionRecallSymmetryAndOrderInvariance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = random_triple(rng, 10);
    Corpus pred;
    for (const auto& p : t.a) pred.push_back(*p);
    const auto r = score_corpus(t.gold, pred), s = score_corpus(pred, t.gold);
    EXPECT_EQ(r.precision(), s.recall());
    EXPECT_EQ(r.recall(), s.precision());
    std::vector<std::size_t> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Corpus g2, p2;
    for (auto i : perm) {
      g2.push_back(t.gold.trees[i]);
      p2.push_back(pred.trees[i]);
    }
    EXPECT_EQ(score_corpus(g2, p2).f_score(), r.f_score());
  }
}

// Exact shift-method p-value over all n^n equally likely resamples.
double exact_p(const Triple& t) {
  const std::size_t n = t.gold.size();
  std::vector<BracketCounts> ca, cb;
  for (std::size_t i = 0; i < n; ++i) {
    ca.push_back(sentence_counts(t.gold, i, t.a[i]));
    cb.push_back(sentence_counts(t.gold, i, t.b[i]));
  }
  auto f = [](BracketCounts c) {
    const double p = c.predicted ? double(c.matched) / double(c.predicted) : 1.0;
    const double r = c.gold ? double(c.matched) / double(c.gold) : 1.0;
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  };
  BracketCounts A, B;
  for (std::size_t i = 0; i < n; ++i) A += ca[i], B += cb[i];
  const double d = f(A) - f(B);
  std::size_t total = 1, hits = 0;
  for (std::size_t i = 0; i < n; ++i) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    BracketCounts x, y;
    for (std::size_t i = 0, c = code; i < n; ++i, c /= n) x += ca[c % n], y += cb[c % n];
    hits += std::abs(f(x) - f(y) - d) >= std::abs(d);
  }
  return double(hits) / double(total);
}

TEST(Bootstrap, ApproachesExactResamplingDistribution) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto t = random_triple(rng, 5);
    const double want = exact_p(t);
    const auto got = bootstrap_test(t.gold, t.a, t.b, 40000, 100 + trial);
    // binomial standard error is at most 0.0025 here
    EXPECT_NEAR(got.p_value, want, 0.015) << "trial " << trial;
  }
}

TEST(Bootstrap, IdenticalSystems) {
  std::mt19937_64 rng(13);
  const auto t = random_triple(rng, 30);
  const auto r = bootstrap_test(t.gold, t.a, t.a, 2000, 1);
  EXPECT_EQ(r.observed_delta_f, 0.0);
  EXPECT_GE(r.p_value, 0.5);
}

TEST(Bootstrap, DominatingSystem) {
  std::mt19937_64 rng(14);
  Corpus gold;
  Predictions a, b;
  for (int i = 0; i < 50; ++i) {
    const Tree g = random_parse(rng, std::uniform_int_distribution<std::size_t>(2, 6)(rng));
    gold.push_back(g);
    a.push_back(g);
    Tree worse = g;
    worse.label = worse.label == "S" ? "A" : "S";
    b.push_back(worse);
  }
  const auto r = bootstrap_test(gold, a, b, 10000, 7);
  EXPECT_GT(r.observed_delta_f, 0.0);
  EXPECT_LT(r.p_value, 0.01);
}

TEST(Bootstrap, DeterministicAcrossRunsThreadsAndOrder) {
  std::mt19937_64 rng(15);
  const auto t = random_triple(rng, 20);
  const auto r1 = bootstrap_test(t.gold, t.a, t.b, 3000, 42);
  const auto r2 = bootstrap_test(t.gold, t.a, t.b, 3000, 42, 4);
  EXPECT_EQ(r1.p_value, r2.p_value);
  EXPECT_EQ(r1.p_value, bootstrap_test(t.gold, t.a, t.b, 3000, 42).p_value);
  Triple rev;
  for (std::size_t i = t.gold.size(); i-- > 0;) {
    rev.gold.push_back(t.gold.trees[i]);
    rev.a.push_back(t.a[i]);
    rev.b.push_back(t.b[i]);
  }
  EXPECT_EQ(bootstrap_test(rev.gold, rev.a, rev.b, 3000, 42).p_value, r1.p_value);
  EXPECT_THROW(bootstrap_test(t.gold, t.a, t.b, 0, 42), ConfigError);
}

}  // namespace
}  // namespace mcle
