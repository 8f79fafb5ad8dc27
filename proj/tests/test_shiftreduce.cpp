#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mcle/shiftreduce.hpp"
#include "oracles/sr_oracle.hpp"

namespace mcle {
namespace {

using Strings = std::vector<std::string>;
const std::string E(kEndSymbol);

TEST(ApplyMove, Definitions) {
  Stack s;
  s = apply_move(s, Move::shift("a"));
  EXPECT_EQ(s.labels(), Strings{"a"});
  Stack ab = Stack().push("A").push("B");
  EXPECT_EQ(apply_move(ab, Move::reduce2("S")).labels(), Strings{"S"});
  EXPECT_EQ(apply_move(ab, Move::reduce1("C")).labels(), (Strings{"A", "C"}));
  EXPECT_EQ(ab.labels(), (Strings{"A", "B"}));  // persistent
  EXPECT_THROW(apply_move(Stack().push("A"), Move::reduce2("S")), DataError);
  EXPECT_THROW(apply_move(Stack(), Move::reduce1("S")), DataError);
}

TEST(Stack, TopTwoReadEndWhenAbsent) {
  EXPECT_EQ(s1(Stack()), E);
  EXPECT_EQ(s2(Stack().push("A")), E);
  EXPECT_EQ(s1(Stack().push("A")), "A");
  EXPECT_EQ(s2(Stack().push("A").push("B")), "A");
}

TEST(OracleMoves, Examples) {
  EXPECT_EQ(oracle_moves(parse_tree("(S (A a) (B b))")),
            (std::vector<Move>{Move::shift("a"), Move::reduce1("A"), Move::shift("b"), Move::reduce1("B"),
                               Move::reduce2("S"), Move::shift(E)}));
  EXPECT_EQ(oracle_moves(parse_tree("(S a)")), (std::vector<Move>{Move::shift("a"), Move::reduce1("S"), Move::shift(E)}));
  EXPECT_THROW(oracle_moves(parse_tree("(S a b c)")), DataError);
}

Tree random_nary(std::mt19937_64& rng, int depth) {
  static const Strings labels{"S", "NP", "VP", "PP"};
  static const Strings leaves{"a", "b", "c"};
  std::uniform_int_distribution<int> arity(0, depth > 0 ? 4 : 0);
  const int n = arity(rng);
  if (n == 0) return Tree(leaves[std::uniform_int_distribution<std::size_t>(0, 2)(rng)]);
  Tree t(labels[std::uniform_int_distribution<std::size_t>(0, 3)(rng)]);
  for (int i = 0; i < n; ++i) t.children.push_back(random_nary(rng, depth - 1));
  return t;
}

TEST(OracleMoves, ReplayRebuildsRandomBinarisedTrees) {
  std::mt19937_64 rng(5);
  const HeadRules rules = HeadRules::parse("S: left VP\nVP: left VP\nNP: right NP\n");
  for (int trial = 0; trial < 300; ++trial) {
    Tree t = random_nary(rng, 4);
    if (t.is_leaf()) t = Tree("S", {t});
    const Tree b = binarize(t, rules);
    const auto moves = oracle_moves(b);
    ASSERT_EQ(tree_from_moves(moves), b);
    Stack s;
    for (const auto& m : moves) s = apply_move(s, m);
    ASSERT_EQ(s.labels(), (Strings{b.label, E}));
  }
}

TEST(TreeFromMoves, RejectsIncompleteSequences) {
  EXPECT_THROW(tree_from_moves({Move::shift("a")}), DataError);
  EXPECT_THROW(tree_from_moves({Move::shift("a"), Move::shift("b"), Move::shift(E)}), DataError);
  EXPECT_THROW(tree_from_moves({Move::reduce1("A"), Move::shift(E)}), DataError);
}

Corpus one_tree() { return read_bracketed("(S (A a) (B b))"); }

TEST(EstimateJoint, Examples) {
  const auto m = estimate_joint(one_tree());
  EXPECT_EQ(m.prob(Move::shift("a"), E, E, "a"), 1.0);
  EXPECT_EQ(m.prob(Move::reduce2("S"), "B", "A", E), 1.0);
  EXPECT_EQ(m.prob(Move::reduce1("A"), E, E, "a"), 0.0);
  EXPECT_EQ(m.prob(Move::reduce1("X"), E, E, "a"), 0.0);
  EXPECT_EQ(m.prob(Move::shift(E), "S", E, E), 1.0);
}

TEST(EstimateJoint, StructuralZerosSurviveContradictoryCounts) {
  // Shift(b) is the only move ever seen in context (S, <*>) with the joint
  // flavor's counts, but ending is what the second tree does there.
  auto m = estimate_joint(read_bracketed("(S (S a) b)\n(S a)"));
  EXPECT_NEAR(m.prob(Move::shift("b"), "S", E, "b") + m.prob(Move::shift(E), "S", E, E), 1.0, 1e-15);
  EXPECT_EQ(m.prob(Move::shift(E), "a", E, E), 0.0);
}

// Every context over the model's symbols, for both flavors.
void check_structural_zeros(const MoveModel& m) {
  const int n = m.num_symbols(), start = m.start_id(), end = m.end_id();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int la = 0; la < n; ++la) {
        const auto d = m.distribution(a, b, la);
        double z = 0;
        for (const auto& [c, p] : d) {
          z += p;
          const auto kind = m.kind_of(c);
          const int sym = m.symbol_of(c);
          ASSERT_FALSE(a == end && b == end && kind == Move::Kind::Reduce1);
          ASSERT_FALSE(b == end && kind == Move::Kind::Reduce2);
          ASSERT_FALSE(kind == Move::Kind::Shift && sym == end && !(a == start && b == end));
          ASSERT_FALSE(m.flavor() == Flavor::Conditional && kind == Move::Kind::Shift && sym != la);
        }
        ASSERT_TRUE(d.empty() || std::abs(z - 1.0) <= 1e-9);
      }
}

TEST(MoveModel, StructuralZerosHoldInEveryContext) {
  std::mt19937_64 rng(7);
  const auto train = oracle::random_sr_corpus(rng, 40), heldout = oracle::random_sr_corpus(rng, 15);
  check_structural_zeros(estimate_joint(train));
  check_structural_zeros(estimate_conditional(train, heldout).model);
}

TEST(EstimateConditional, DegenerateModelReproducesOracleMoves) {
  auto fit = estimate_conditional(one_tree(), one_tree());
  auto& m = fit.model;
  m.mixture().set_all_lambdas({1, 0});
  const auto moves = oracle_moves(one_tree().trees[0]);
  EXPECT_EQ(parse_log_prob(m, moves, {"a", "b"}), 0.0);
  EXPECT_EQ(m.prob(Move::shift("b"), E, E, "a"), 0.0);
  auto r = beam_parse(m, {"a", "b"}, {1e-9, true});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->tree, one_tree().trees[0]);
}

TEST(EstimateConditional, ShiftOnlyTheLookahead) {
  std::mt19937_64 rng(9);
  auto m = estimate_conditional(oracle::random_sr_corpus(rng, 30), oracle::random_sr_corpus(rng, 10)).model;
  for (const auto& a : m.symbols())
    for (const auto& b : m.symbols()) EXPECT_EQ(m.prob(Move::shift("b"), a, b, "a"), 0.0);
  for (const auto& [bucket, w] : m.mixture().fitted_lambdas()) EXPECT_NEAR(w[0] + w[1], 1.0, 1e-12);
}

TEST(ParseLogProb, DegenerateJointIsCertainAndInvalidReplaysThrow) {
  const auto m = estimate_joint(one_tree());
  const auto moves = oracle_moves(one_tree().trees[0]);
  EXPECT_EQ(parse_log_prob(m, moves, {"a", "b"}), 0.0);
  EXPECT_THROW(parse_log_prob(m, moves, {"b", "b"}), DataError);
  EXPECT_THROW(parse_log_prob(m, {Move::shift("a")}, {"a"}), DataError);
  EXPECT_EQ(parse_log_prob(m, {Move::shift("a"), Move::reduce1("S"), Move::shift(E)}, {"a"}), kNegInf);
}

std::function<std::array<double, 2>(int)> lambdas_of(const MoveModel& m) {
  return [&m](int b) {
    const auto w = m.mixture().lambdas(b);
    return std::array<double, 2>{w[0], w[1]};
  };
}

TEST(MoveModel, ProbabilitiesMatchRecount) {
  std::mt19937_64 rng(10);
  const auto train = oracle::random_sr_corpus(rng, 30), heldout = oracle::random_sr_corpus(rng, 10);
  const auto joint = estimate_joint(train);
  const auto cond = estimate_conditional(train, heldout).model;
  const oracle::SrOracle oj(train, Flavor::Joint), oc(train, Flavor::Conditional, lambdas_of(cond));
  for (const auto& a : joint.symbols())
    for (const auto& b : joint.symbols())
      for (const auto& la : joint.symbols())
        for (const auto& mv : oj.all_moves()) {
          ASSERT_NEAR(joint.prob(mv, a, b, la), oj.prob(mv, a, b, la), 1e-12);
          ASSERT_NEAR(cond.prob(mv, a, b, la), oc.prob(mv, a, b, la), 1e-12);
        }
}

Strings random_string(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 3), coin(0, 1);
  Strings w(static_cast<std::size_t>(len(rng)));
  for (auto& x : w) x = coin(rng) ? "a" : "b";
  return w;
}

BeamConfig exhaustive() {
  BeamConfig cfg;
  cfg.threshold = 1e-12;
  cfg.require_observed_pairs = false;
  return cfg;
}

// Conditional toy models get fixed moderate weights here: weights fitted on a
// handful of heldout trees can sit within 1e-40 of a vertex, and then the best
// parse of an odd string may score below the beam threshold itself.
MoveModel toy_model(const Corpus& train, const Corpus& heldout, bool joint) {
  if (joint) return estimate_joint(train);
  auto m = estimate_conditional(train, heldout).model;
  m.mixture().set_all_lambdas({0.7, 0.3});
  return m;
}

TEST(BeamParse, MatchesBruteForceArgmax) {
  std::mt19937_64 rng(21);
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto train = oracle::random_sr_corpus(rng, 12), heldout = oracle::random_sr_corpus(rng, 6);
    const auto m = toy_model(train, heldout, trial % 2 == 0);
    const oracle::SrOracle o(train, m.flavor(), lambdas_of(m));
    const auto words = random_string(rng);
    const auto all = o.enumerate(words);
    const auto* want = oracle::SrOracle::best(all);
    const auto got = beam_parse(m, words, exhaustive());
    ASSERT_EQ(static_cast<bool>(got), want != nullptr) << "trial " << trial;
    if (!want) continue;
    ++compared;
    ASSERT_EQ(got->moves, want->moves) << "trial " << trial;
    ASSERT_NEAR(std::exp(got->log_prob), want->prob, 1e-12);
    ASSERT_NEAR(got->log_prob, parse_log_prob(m, got->moves, words), 1e-12);
    double total = 0;
    for (const auto& p : all) total += p.prob;
    ASSERT_LE(total, 1.0 + 1e-9);
  }
  EXPECT_GT(compared, 50);
}

TEST(BeamParse, FittedConditionalModelsFailOnlyBelowThreshold) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const auto train = oracle::random_sr_corpus(rng, 12), heldout = oracle::random_sr_corpus(rng, 6);
    const auto m = estimate_conditional(train, heldout).model;
    const oracle::SrOracle o(train, m.flavor(), lambdas_of(m));
    const auto words = random_string(rng);
    const auto all = o.enumerate(words);
    const auto* want = oracle::SrOracle::best(all);
    const auto got = beam_parse(m, words, exhaustive());
    if (got) {
      ASSERT_TRUE(want);
      ASSERT_EQ(got->moves, want->moves) << "trial " << trial;
    } else if (want) {
      ASSERT_LT(want->prob, 1e-12) << "trial " << trial;
    }
  }
}

TEST(BeamParse, GreedyBeamNeverBeatsBruteForce) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const auto train = oracle::random_sr_corpus(rng, 12);
    const auto m = estimate_joint(train);
    const oracle::SrOracle o(train, Flavor::Joint);
    const auto words = yield(train.trees[0]);
    const auto all = o.enumerate(words);
    const auto* want = oracle::SrOracle::best(all);
    ASSERT_TRUE(want);
    BeamConfig greedy;
    greedy.threshold = 1.0;
    greedy.require_observed_pairs = false;
    if (const auto got = beam_parse(m, words, greedy)) {
      ASSERT_LE(std::exp(got->log_prob), want->prob * (1 + 1e-12));
    }
  }
}

TEST(BeamParse, JointMassOverAllShortStringsIsAtMostOne) {
  std::mt19937_64 rng(23);
  const auto train = oracle::random_sr_corpus(rng, 20);
  const oracle::SrOracle o(train, Flavor::Joint);
  double total = 0;
  std::vector<Strings> strings{{}};
  for (int len = 1; len <= 3; ++len) {
    std::vector<Strings> next;
    for (const auto& s : strings)
      for (const char* x : {"a", "b"}) {
        auto t = s;
        t.push_back(x);
        next.push_back(t);
      }
    strings = next;
    for (const auto& s : strings)
      for (const auto& p : o.enumerate(s)) total += p.prob;
  }
  EXPECT_GT(total, 0.0);
  EXPECT_LE(total, 1.0 + 1e-9);
}

TEST(BeamParse, ObservedPairFilterOnlyDropsDeadEnds) {
  // Unseen (s1, s2) pairs have no move distribution, so filtering them early
  // must not change any result.
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 40; ++trial) {
    const auto train = oracle::random_sr_corpus(rng, 12), heldout = oracle::random_sr_corpus(rng, 6);
    const auto m = toy_model(train, heldout, trial % 2 == 0);
    BeamConfig on = exhaustive();
    on.require_observed_pairs = true;
    const auto words = random_string(rng);
    const auto a = beam_parse(m, words, exhaustive()), b = beam_parse(m, words, on);
    ASSERT_EQ(static_cast<bool>(a), static_cast<bool>(b));
    if (a) {
      ASSERT_EQ(a->moves, b->moves);
    }
  }
}

TEST(ParseCorpus, DegenerateModelAndFailures) {
  const auto train = read_bracketed("(S (A a) (B b))\n(S (A a) (A a))");
  const auto m = estimate_joint(train);
  EXPECT_TRUE(parse_corpus(m, {}).trees.empty());
  const auto r = parse_corpus(m, {{"a", "b"}, {"a", "a"}, {"c"}}, {1e-9, true});
  ASSERT_EQ(r.trees.size(), 3u);
  EXPECT_EQ(*r.trees[0], train.trees[0]);
  EXPECT_EQ(*r.trees[1], train.trees[1]);
  EXPECT_FALSE(r.trees[2]);
  EXPECT_EQ(r.failures, 1u);
}

TEST(ParseCorpus, DebinarisesAndIgnoresThreadCount) {
  const auto rules = HeadRules::parse("S: left A\n");
  const auto train = binarize(read_bracketed("(S (A a) (B b) (B b))\n(S (A a) (B b))"), rules);
  const auto m = estimate_joint(train);
  const std::vector<Strings> sentences{{"a", "b", "b"}, {"a", "b"}, {"a"}};
  const auto one = parse_corpus(m, sentences, {}, {}, 1);
  EXPECT_EQ(*one.trees[0], parse_tree("(S (A a) (B b) (B b))"));
  const auto three = parse_corpus(m, sentences, {}, {}, 3);
  EXPECT_EQ(one.trees, three.trees);
}

TEST(MoveModelFile, RoundTripIsExact) {
  std::mt19937_64 rng(31);
  const auto train = oracle::random_sr_corpus(rng, 20), heldout = oracle::random_sr_corpus(rng, 8);
  for (const auto& m : {estimate_joint(train), estimate_conditional(train, heldout).model}) {
    std::stringstream io;
    m.write(io);
    const auto back = MoveModel::read(io);
    std::stringstream again;
    back.write(again);
    EXPECT_EQ(again.str(), io.str());
    EXPECT_EQ(back.observed_pairs(), m.observed_pairs());
    for (int q = 0; q < 10; ++q) {
      const auto w = random_string(rng);
      const auto a = beam_parse(m, w), b = beam_parse(back, w);
      ASSERT_EQ(static_cast<bool>(a), static_cast<bool>(b));
      if (a) {
        EXPECT_EQ(a->moves, b->moves);
      }
    }
  }
}

}  // namespace
}  // namespace mcle
