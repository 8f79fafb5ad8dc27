#include <gtest/gtest.h>

#include <random>

#include "mcle/binarize.hpp"
#include "mcle/tree.hpp"

namespace mcle {
namespace {

Tree T(std::string label, std::vector<Tree> kids = {}) { return Tree(std::move(label), std::move(kids)); }

TEST(ReadBracketed, SingleTree) {
  auto c = read_bracketed("(S (A a))");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.trees[0], T("S", {T("A", {T("a")})}));
  EXPECT_EQ(c.id(0), "1");
}

TEST(ReadBracketed, TwoChildren) {
  auto t = parse_tree("(S (A a) (B b))");
  ASSERT_EQ(t.children.size(), 2u);
  EXPECT_EQ(t.children[1], T("B", {T("b")}));
}

TEST(ReadBracketed, MultipleTreesAcrossLines) {
  auto c = read_bracketed("(S (A a))\n\n  (S\n (B b)\n)\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.ids, (std::vector<std::string>{"1", "2"}));
}

TEST(ReadBracketed, PennOuterBracketIsUnwrapped) {
  EXPECT_EQ(parse_tree("( (S (A a)) )"), parse_tree("(S (A a))"));
}

TEST(ReadBracketed, UnbalancedReportsEndOfInput) {
  try {
    read_bracketed("(S (A a)");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 9u);
  }
}

TEST(ReadBracketed, Errors) {
  EXPECT_THROW(read_bracketed("(S (A a)))"), ParseError);
  EXPECT_THROW(read_bracketed("(S ())"), ParseError);
  EXPECT_THROW(read_bracketed("(S)"), ParseError);
  EXPECT_THROW(read_bracketed("S"), ParseError);
  try {
    read_bracketed("(S (A a))\n(S (B b) ())");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 10u);
  }
}

TEST(WriteBracketed, RoundTrip) {
  const std::string text = "(S (A a) (B b))\n(S (NP (D the) (N dog)) (VP (V barks)))\n";
  auto c = read_bracketed(text);
  EXPECT_EQ(write_bracketed(c), text);
  EXPECT_EQ(read_bracketed(write_bracketed(c)), c);
}

TEST(StripLexical, PreterminalsBecomeLeaves) {
  EXPECT_EQ(strip_lexical(parse_tree("(S (A a) (B b))")), T("S", {T("A"), T("B")}));
  EXPECT_EQ(yield(strip_lexical(parse_tree("(S (A a) (A a))"))), (std::vector<std::string>{"A", "A"}));
}

TEST(StripLexical, LeafWithSiblingsIsMalformed) {
  EXPECT_THROW(strip_lexical(parse_tree("(S (A a) b)")), DataError);
}

TEST(Yield, LeftToRight) {
  EXPECT_EQ(yield(parse_tree("(S (A a) (B b))")), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(yield(T("a")), std::vector<std::string>{"a"});
}

TEST(TaggedYield, WordsAndTags) {
  auto tv = tagged_yield(parse_tree("(S (NP (D the) (N dog)) (V ran))"));
  ASSERT_EQ(tv.size(), 3u);
  EXPECT_EQ(tv[1], (std::pair<std::string, std::string>{"dog", "N"}));
}

// --- head rules and binarization ---

TEST(HeadRules, DefaultPrefersParentLabelElseRightmost) {
  HeadRules r;
  EXPECT_EQ(r.head("NP", {T("D"), T("NP"), T("NP")}), 1u);
  EXPECT_EQ(r.head("NP", {T("D"), T("N")}), 1u);
  EXPECT_EQ(r.head("NP", {T("D")}), 0u);
}

TEST(HeadRules, ParsedTable) {
  auto r = HeadRules::parse("# comment\nVP: left V VP\nNP: right N NP\n\nPP: left\n");
  EXPECT_EQ(r.head("VP", {T("ADV"), T("V"), T("NP"), T("V")}), 1u);
  EXPECT_EQ(r.head("NP", {T("N"), T("PP"), T("N")}), 2u);
  EXPECT_EQ(r.head("NP", {T("D"), T("A")}), 1u);  // no match: rightmost
  EXPECT_EQ(r.head("PP", {T("P"), T("NP")}), 0u);
  EXPECT_THROW(HeadRules::parse("VP left V"), ParseError);
  EXPECT_THROW(HeadRules::parse("VP: up V"), ParseError);
}

HeadRules head_is(const std::string& parent, const std::string& child) {
  HeadRules r;
  r.add(parent, {HeadDirection::Leftmost, {child}});
  return r;
}

TEST(Binarize, HeadJoinsRightThenLeft) {
  const Tree t = T("P", {T("C1"), T("C2"), T("C3"), T("C4")});
  const Tree want = T("P", {T("C1"), T("C2-2-2", {T("C2-2", {T("C2"), T("C3")}), T("C4")})});
  EXPECT_EQ(binarize(t, head_is("P", "C2"), {"-"}), want);
  // Default marker.
  const Tree b = binarize(t, head_is("P", "C2"));
  EXPECT_EQ(b.children[1].label, "C2^2^2");
  EXPECT_EQ(node_count(b) - node_count(t), 2u);
}

TEST(Binarize, HeadOnTheRightUsesSuffixOne) {
  const Tree t = T("NP", {T("D"), T("A"), T("N")});
  EXPECT_EQ(binarize(t, head_is("NP", "N")), T("NP", {T("D"), T("N^1", {T("A"), T("N")})}));
}

TEST(Binarize, SmallLocalTreesUnchanged) {
  HeadRules r;
  EXPECT_EQ(binarize(T("P", {T("C1"), T("C2")}), r), T("P", {T("C1"), T("C2")}));
  EXPECT_EQ(binarize(T("P", {T("C1")}), r), T("P", {T("C1")}));
}

TEST(Debinarize, UndoesExample) {
  const Tree t = T("P", {T("C1"), T("C2"), T("C3"), T("C4")});
  EXPECT_EQ(debinarize(binarize(t, head_is("P", "C2"))), t);
  EXPECT_EQ(debinarize(t), t);
  BinarizeOptions dash{"-"};
  EXPECT_EQ(debinarize(binarize(t, head_is("P", "C2"), dash), dash), t);
}

TEST(Debinarize, IgnoresHyphenatedTreebankLabels) {
  const Tree t = T("S", {T("NP-SBJ", {T("N")}), T("VP", {T("V")})});
  EXPECT_EQ(debinarize(t), t);
}

// Random n-ary trees over labels without the marker.
Tree random_tree(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> labels{"S", "NP", "VP", "PP", "X"};
  static const std::vector<std::string> leaves{"a", "b", "c"};
  std::uniform_int_distribution<std::size_t> lab(0, labels.size() - 1), leaf(0, leaves.size() - 1);
  std::uniform_int_distribution<int> arity(1, depth > 0 ? 6 : 0);
  const int n = depth > 0 ? arity(rng) : 0;
  if (n == 0) return T(leaves[leaf(rng)]);
  Tree t(labels[lab(rng)]);
  for (int i = 0; i < n; ++i) t.children.push_back(random_tree(rng, depth - 1));
  return t;
}

std::size_t expected_inserted(const Tree& t) {
  std::size_t n = t.children.size() > 2 ? t.children.size() - 2 : 0;
  for (const auto& c : t.children) n += expected_inserted(c);
  return n;
}

bool unary_or_binary(const Tree& t) {
  if (t.is_leaf()) return true;
  if (t.children.size() > 2) return false;
  for (const auto& c : t.children)
    if (!unary_or_binary(c)) return false;
  return true;
}

TEST(BinarizeProperty, RoundTripNodeCountAndYield) {
  std::mt19937_64 rng(7);
  HeadRules rules = HeadRules::parse("S: left VP\nNP: right NP X\nVP: left VP\n");
  for (int trial = 0; trial < 300; ++trial) {
    Tree t = random_tree(rng, 4);
    if (t.is_leaf()) continue;
    Tree b = binarize(t, rules);
    ASSERT_TRUE(unary_or_binary(b));
    ASSERT_EQ(node_count(b), node_count(t) + expected_inserted(t));
    ASSERT_EQ(yield(b), yield(t));
    ASSERT_EQ(debinarize(b), t);
  }
}

}  // namespace
}  // namespace mcle
