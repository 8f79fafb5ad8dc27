#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mcle/interpolation.hpp"

namespace mcle {
namespace {

using Dist3 = InterpolatedCondDist<3>;

TEST(CondCounts, RelativeFrequency) {
  CondCounts c;
  c.add(context(1), 0, 3);
  c.add(context(1), 2);
  bool defined = false;
  EXPECT_DOUBLE_EQ(c.prob(context(1), 0, &defined), 0.75);
  EXPECT_TRUE(defined);
  EXPECT_EQ(c.prob(context(1), 1), 0.0);
  EXPECT_EQ(c.prob(context(2), 0, &defined), 0.0);
  EXPECT_FALSE(defined);
}

TEST(Interpolated, UnseenContextPolicy) {
  Dist3 u(4, UnseenContext::Uniform, 2), z(4, UnseenContext::Zero, 2);
  EXPECT_DOUBLE_EQ(u.component_prob(0, context(9), 1), 0.25);
  EXPECT_EQ(z.component_prob(0, context(9), 1), 0.0);
}

TEST(Interpolated, BucketsByLogCount) {
  Dist3 d(2, UnseenContext::Uniform, 2, 3);
  const Dist3::Contexts ctx{context(0), context(0), context(5)};
  EXPECT_EQ(d.bucket(ctx), 0);
  d.add_count(2, context(5), 0);
  EXPECT_EQ(d.bucket(ctx), 1);  // log2(2)
  d.add_count(2, context(5), 0, 2);
  EXPECT_EQ(d.bucket(ctx), 2);  // log2(4)
  d.add_count(2, context(5), 0, 100);
  EXPECT_EQ(d.bucket(ctx), 3);  // capped
  d.add_count(0, context(0), 1, 1000);
  EXPECT_EQ(d.bucket(ctx), 3);  // only the bucketing component counts
}

TEST(Interpolated, MixtureSumsToOne) {
  Dist3 d(3, UnseenContext::Uniform, 2);
  d.observe({context(0), context(1), context(0, 1)}, 0);
  d.observe({context(0), context(1), context(0, 1)}, 2);
  d.observe({context(0), context(2), context(0, 2)}, 1);
  d.set_all_lambdas({0.2, 0.3, 0.5});
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const Dist3::Contexts ctx{context(a), context(b), context(a, b)};
      double s = 0;
      for (int o = 0; o < 3; ++o) s += d.prob(ctx, o);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  EXPECT_THROW(d.set_lambdas(0, {0.5, 0.5, 0.5}), DataError);
  EXPECT_THROW(d.set_lambdas(0, {1.5, -0.5, 0.0}), DataError);
}

TEST(Interpolated, UnfittedBucketsAreUniform) {
  Dist3 d(2, UnseenContext::Uniform, 0);
  for (double w : d.lambdas(7)) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
}

// Component 0 is a peaked distribution over 5 outcomes per context; components
// 1 and 2 only ever see unseen contexts and so are uniform noise. Heldout
// events are drawn from component 0.
struct Synthetic {
  Dist3 dist;
  std::vector<Dist3::Event> heldout;
};

Synthetic peaked_first_component(std::uint64_t seed) {
  constexpr int kOutcomes = 5;
  Synthetic s{Dist3(kOutcomes, UnseenContext::Uniform, 0), {}};
  std::mt19937_64 rng(seed);
  const std::vector<double> peak{0.9, 0.05, 0.03, 0.01, 0.01};
  std::discrete_distribution<int> draw(peak.begin(), peak.end());
  for (int ctx = 0; ctx < 4; ++ctx) {
    for (int o = 0; o < kOutcomes; ++o) s.dist.add_count(0, context(ctx), (o + ctx) % kOutcomes, 1000 * peak[o]);
    for (int i = 0; i < 200; ++i)
      s.heldout.push_back({{context(ctx), context(100 + ctx), context(200 + ctx)}, (draw(rng) + ctx) % kOutcomes});
  }
  return s;
}

TEST(InterpolatedFit, RecoversTheGeneratingComponent) {
  auto s = peaked_first_component(5);
  EmOptions opts;
  opts.max_iters = 50;
  opts.tol = 0.0;
  auto trace = s.dist.fit(s.heldout, opts);
  EXPECT_EQ(trace.iterations, 50);
  ASSERT_FALSE(s.dist.fitted_lambdas().empty());
  for (const auto& [b, w] : s.dist.fitted_lambdas()) {
    EXPECT_GT(w[0], 0.95) << "bucket " << b;
    EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
  }
  for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i)
    EXPECT_GE(trace.log_likelihood[i], trace.log_likelihood[i - 1]);
}

TEST(InterpolatedFit, IdenticalComponentsKeepEqualWeights) {
  Dist3 d(3, UnseenContext::Uniform, 2);
  std::vector<Dist3::Event> heldout;
  for (int o : {0, 0, 1, 2, 0}) {
    d.observe({context(0), context(0), context(0)}, o);
    heldout.push_back({{context(0), context(0), context(0)}, o});
  }
  d.fit(heldout);
  for (const auto& [b, w] : d.fitted_lambdas())
    for (double x : w) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST(InterpolatedFit, StopsOnRelativeImprovement) {
  auto s = peaked_first_component(9);
  auto trace = s.dist.fit(s.heldout);
  EXPECT_LE(trace.iterations, 100);
  const auto& ll = trace.log_likelihood;
  ASSERT_GE(ll.size(), 2u);
  if (trace.iterations < 100) {
    EXPECT_LE(ll.back() - ll[ll.size() - 2], 1e-7 * std::abs(ll[ll.size() - 2]));
  }
}

TEST(InterpolatedFit, SkipsEventsNoComponentExplains) {
  using Dist2 = InterpolatedCondDist<2>;
  Dist2 d(3, UnseenContext::Zero, 0);
  d.add_count(0, context(1), 0);
  d.add_count(1, context(1), 1);
  std::vector<Dist2::Event> heldout{{{context(1), context(1)}, 0}, {{context(7), context(7)}, 2}};
  auto trace = d.fit(heldout);
  ASSERT_EQ(d.fitted_lambdas().size(), 1u);
  EXPECT_NEAR(d.fitted_lambdas().begin()->second[0], 1.0, 1e-6);
  for (double ll : trace.log_likelihood) EXPECT_TRUE(std::isfinite(ll));
}

TEST(Interpolated, TextRoundTrip) {
  auto s = peaked_first_component(3);
  s.dist.fit(s.heldout);
  std::ostringstream out;
  s.dist.write(out);
  Dist3 back(5, UnseenContext::Uniform, 0);
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);) ASSERT_TRUE(back.read_line(split_ws(line)));
  for (const auto& e : s.heldout) ASSERT_EQ(back.prob(e.contexts, e.outcome), s.dist.prob(e.contexts, e.outcome));
}

}  // namespace
}  // namespace mcle
