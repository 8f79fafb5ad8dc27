// Conditional likelihood of a treebank under a PCFG, its gradient, and
// maximum conditional likelihood estimation by exponentiated-gradient ascent.
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mcle/chart.hpp"
#include "mcle/common.hpp"
#include "mcle/pcfg.hpp"
#include "mcle/tree.hpp"

namespace mcle {

/// Weights below this are floored before dividing by them in the gradient.
inline constexpr double kThetaFloor = 1e-12;

struct AscentConfig {
  int max_iters = 200;
  /// Stop once an iteration improves the conditional log-likelihood by less
  /// than this fraction of its magnitude.
  double tol = 1e-6;
  double initial_step = 1.0;
  double line_search_shrink = 0.5;
  int max_shrinks = 20;
  unsigned threads = 1;

  void validate() const {
    if (max_iters <= 0) throw ConfigError("max_iters must be positive");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (!(initial_step > 0.0)) throw ConfigError("initial_step must be positive");
    if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
      throw ConfigError("line_search_shrink must lie in (0,1)");
    if (max_shrinks <= 0) throw ConfigError("max_shrinks must be positive");
  }
};

/// The three corpus log-likelihoods compared by the estimators:
/// joint = sum log P(y), conditional = sum log P(y|x), marginal = sum log P(x).
struct CorpusLikelihood {
  double joint = 0.0;
  double conditional = 0.0;
  double marginal = 0.0;
};

struct McleResult {
  Pcfg grammar;
  /// Conditional log-likelihood of the start point and after every accepted
  /// step; non-decreasing.
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// A corpus compiled against a fixed rule list: yields plus sparse rule counts.
struct IndexedCorpus {
  std::vector<std::vector<std::string>> yields;
  std::vector<std::vector<std::pair<int, double>>> counts;
  std::vector<double> total_counts;
};

inline IndexedCorpus index_corpus(const std::vector<Production>& rules, const Corpus& c) {
  std::map<Production, int> rule_id;
  for (std::size_t r = 0; r < rules.size(); ++r) rule_id[rules[r]] = static_cast<int>(r);
  IndexedCorpus ic;
  ic.total_counts.assign(rules.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    RuleCounts rc;
    add_tree_counts(c.trees[i], rc);
    std::vector<std::pair<int, double>> sparse;
    for (const auto& [p, n] : rc.counts) {
      auto it = rule_id.find(p);
      if (it == rule_id.end())
        throw EstimationError("tree " + c.id(i) + " is not derivable: missing rule " + to_string(p));
      sparse.emplace_back(it->second, n);
      ic.total_counts[static_cast<std::size_t>(it->second)] += n;
    }
    ic.counts.push_back(std::move(sparse));
    ic.yields.push_back(yield(c.trees[i]));
  }
  return ic;
}

inline double tree_log_prob(const std::vector<std::pair<int, double>>& counts, const std::vector<double>& theta) {
  double lp = 0.0;
  for (const auto& [r, n] : counts) {
    const double w = theta[static_cast<std::size_t>(r)];
    if (w <= 0.0) return kNegInf;
    lp += n * std::log(w);
  }
  return lp;
}

inline Pcfg with_weights(const Pcfg& g, const std::vector<double>& theta) {
  std::map<Production, double> m;
  std::size_t r = 0;
  for (const auto& [p, w] : g.theta()) m[p] = theta[r++];
  return Pcfg(g.start(), std::move(m));
}

// Corpus likelihoods; all -inf (or an exception naming the tree, when `ids`
// is given) if some tree is not derivable.
inline CorpusLikelihood likelihoods(const ChartGrammar& cg, const IndexedCorpus& ic, const std::vector<double>& theta,
                                    const Corpus* ids, unsigned threads) {
  const std::size_t n = ic.yields.size();
  std::vector<double> joint(n), marginal(n);
  parallel_for(n, threads, [&](std::size_t i) {
    joint[i] = tree_log_prob(ic.counts[i], theta);
    marginal[i] = cg.log_marginal(ic.yields[i]);
  });
  CorpusLikelihood out;
  for (std::size_t i = 0; i < n; ++i) {
    if (joint[i] == kNegInf || marginal[i] == kNegInf) {
      if (ids) throw EstimationError("tree " + ids->id(i) + " is not derivable under the grammar");
      return {kNegInf, kNegInf, kNegInf};
    }
    out.joint += joint[i];
    out.marginal += marginal[i];
    out.conditional += joint[i] - marginal[i];
  }
  return out;
}

// sum_i (f_r(y_i) - E[f_r | x_i]) for every rule, reduced in corpus order.
inline std::vector<double> count_residuals(const ChartGrammar& cg, const IndexedCorpus& ic, unsigned threads) {
  const std::size_t n = ic.yields.size();
  std::vector<std::vector<double>> per(n);
  parallel_for(n, threads, [&](std::size_t i) { per[i] = cg.expectations(ic.yields[i]).expected; });
  std::vector<double> d = ic.total_counts;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d.size(); ++r) d[r] -= per[i][r];
  return d;
}

inline std::vector<double> weight_vector(const Pcfg& g) {
  std::vector<double> theta;
  theta.reserve(g.size());
  for (const auto& [p, w] : g.theta()) theta.push_back(w);
  return theta;
}

}  // namespace detail

inline CorpusLikelihood corpus_likelihood(const Pcfg& g, const Corpus& c, unsigned threads = 1) {
  const ChartGrammar cg(g);
  const auto ic = detail::index_corpus(cg.rules(), c);
  return detail::likelihoods(cg, ic, detail::weight_vector(g), &c, threads);
}

/// sum_i [log P(y_i) - log P(x_i)]; throws naming the first underivable tree.
inline double conditional_log_likelihood(const Pcfg& g, const Corpus& c, unsigned threads = 1) {
  return corpus_likelihood(g, c, threads).conditional;
}

/// d/d theta_r of the conditional log-likelihood:
/// (1/theta_r) * sum_i (f_r(y_i) - E[f_r | x_i]).
inline std::map<Production, double> cll_gradient(const Pcfg& g, const Corpus& c, unsigned threads = 1) {
  const ChartGrammar cg(g);
  const auto ic = detail::index_corpus(cg.rules(), c);
  const auto theta = detail::weight_vector(g);
  for (std::size_t r = 0; r < theta.size(); ++r)
    if (theta[r] == 0.0 && ic.total_counts[r] > 0.0)
      throw EstimationError("singular gradient: rule " + to_string(cg.rules()[r]) +
                            " has weight zero but is used by the corpus");
  const auto d = detail::count_residuals(cg, ic, threads);
  std::map<Production, double> grad;
  for (std::size_t r = 0; r < theta.size(); ++r) grad[cg.rules()[r]] = d[r] / std::max(theta[r], kThetaFloor);
  return grad;
}

/// Gradient ascent on the conditional log-likelihood, constrained to the
/// per-nonterminal simplex by the multiplicative update
///   theta_r <- theta_r * exp(step * theta_r * grad_r), then renormalise,
/// with backtracking on the step so every accepted step strictly improves.
inline McleResult estimate_mcle(const Corpus& c, const Pcfg& init, const AscentConfig& cfg = {}) {
  cfg.validate();
  if (c.empty()) throw DataError("empty corpus");
  const auto ic = detail::index_corpus(ChartGrammar(init).rules(), c);
  std::vector<std::string> lhs;
  for (const auto& [p, w] : init.theta()) lhs.push_back(p.lhs);

  std::vector<double> theta = detail::weight_vector(init);
  Pcfg current = init;
  ChartGrammar cg(current);
  double cll = detail::likelihoods(cg, ic, theta, &c, cfg.threads).conditional;

  McleResult result{init, {cll}, 0, false};
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (cll >= 0.0) {
      result.converged = true;
      break;
    }
    const auto residual = detail::count_residuals(cg, ic, cfg.threads);
    std::vector<double> direction(theta.size());
    for (std::size_t r = 0; r < theta.size(); ++r) direction[r] = theta[r] * residual[r] / std::max(theta[r], kThetaFloor);

    double step = cfg.initial_step;
    bool accepted = false;
    for (int s = 0; s <= cfg.max_shrinks; ++s, step *= cfg.line_search_shrink) {
      std::vector<double> proposal(theta.size());
      std::map<std::string, double> totals;
      for (std::size_t r = 0; r < theta.size(); ++r) {
        proposal[r] = theta[r] * std::exp(step * direction[r]);
        totals[lhs[r]] += proposal[r];
      }
      for (std::size_t r = 0; r < theta.size(); ++r) proposal[r] /= totals[lhs[r]];
      Pcfg candidate = detail::with_weights(init, proposal);
      ChartGrammar candidate_chart(candidate);
      const double next = detail::likelihoods(candidate_chart, ic, proposal, nullptr, cfg.threads).conditional;
      if (next > cll) {
        const double gain = (next - cll) / std::abs(cll);
        theta = std::move(proposal);
        current = std::move(candidate);
        cg = std::move(candidate_chart);
        cll = next;
        result.trace.push_back(cll);
        result.iterations = it + 1;
        accepted = true;
        if (gain < cfg.tol) result.converged = true;
        break;
      }
    }
    if (!accepted) result.converged = true;
    if (result.converged) break;
  }
  result.grammar = std::move(current);
  return result;
}

}  // namespace mcle
