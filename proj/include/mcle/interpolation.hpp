// Bucketed linear interpolation of empirical conditional distributions, with
// mixture weights fitted by EM on heldout data (deleted interpolation).
#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mcle/common.hpp"

namespace mcle {

/// Conditioning context as up to three symbol ids; unused slots are -1.
using Context = std::array<int, 3>;

inline constexpr Context context(int a, int b = -1, int c = -1) { return {a, b, c}; }

/// What a component contributes for a context it never saw in training.
enum class UnseenContext {
  Uniform,  ///< the uniform distribution over all outcomes
  Zero,     ///< nothing; callers renormalise over what remains
};

struct EmOptions {
  int max_iters = 100;
  /// Stop when the heldout log-likelihood improves by less than this
  /// fraction of its magnitude.
  double tol = 1e-7;
};

struct EmTrace {
  /// Heldout log-likelihood at the initial weights and after each update.
  std::vector<double> log_likelihood;
  int iterations = 0;
};

/// Counts of outcomes per context for one empirical conditional distribution.
class CondCounts {
 public:
  struct Row {
    double total = 0.0;
    std::map<int, double> counts;
  };

  void add(const Context& ctx, int outcome, double n = 1.0) {
    Row& r = rows_[ctx];
    r.total += n;
    r.counts[outcome] += n;
  }

  const Row* row(const Context& ctx) const {
    auto it = rows_.find(ctx);
    return it == rows_.end() ? nullptr : &it->second;
  }

  double context_count(const Context& ctx) const {
    const Row* r = row(ctx);
    return r ? r->total : 0.0;
  }

  /// Empirical probability; `defined` is false when the context is unseen.
  double prob(const Context& ctx, int outcome, bool* defined = nullptr) const {
    const Row* r = row(ctx);
    if (defined) *defined = r && r->total > 0.0;
    if (!r || !(r->total > 0.0)) return 0.0;
    auto it = r->counts.find(outcome);
    return it == r->counts.end() ? 0.0 : it->second / r->total;
  }

  const std::map<Context, Row>& rows() const { return rows_; }

 private:
  std::map<Context, Row> rows_;
};

/// P(outcome | contexts) = sum_k lambda[b][k] * Phat_k(outcome | context_k),
/// where the bucket b = min(cap, floor(log2(c + 1))) is computed from the
/// training count c of the bucketing component's context. Buckets never seen
/// in heldout data use equal weights.
template <std::size_t K>
class InterpolatedCondDist {
 public:
  using Contexts = std::array<Context, K>;
  using Weights = std::array<double, K>;

  struct Event {
    Contexts contexts;
    int outcome;
  };

  InterpolatedCondDist() = default;
  InterpolatedCondDist(std::size_t outcomes, UnseenContext unseen, std::size_t bucket_component, int bucket_cap = 16)
      : outcomes_(outcomes), unseen_(unseen), bucket_component_(bucket_component), bucket_cap_(bucket_cap) {
    if (bucket_component >= K) throw Error("bucket component out of range");
    if (bucket_cap < 0) throw ConfigError("bucket cap must be non-negative");
  }

  void add_count(std::size_t k, const Context& ctx, int outcome, double n = 1.0) { components_.at(k).add(ctx, outcome, n); }

  void observe(const Contexts& ctx, int outcome, double n = 1.0) {
    for (std::size_t k = 0; k < K; ++k) components_[k].add(ctx[k], outcome, n);
  }

  const CondCounts& component(std::size_t k) const { return components_.at(k); }
  std::size_t outcomes() const { return outcomes_; }
  UnseenContext unseen_policy() const { return unseen_; }
  std::size_t bucket_component() const { return bucket_component_; }
  int bucket_cap() const { return bucket_cap_; }

  int bucket(const Contexts& ctx) const {
    const double c = components_[bucket_component_].context_count(ctx[bucket_component_]);
    const int b = static_cast<int>(std::floor(std::log2(c + 1.0)));
    return std::min(b, bucket_cap_);
  }

  double component_prob(std::size_t k, const Context& ctx, int outcome) const {
    bool defined = false;
    const double p = components_[k].prob(ctx, outcome, &defined);
    if (defined || unseen_ == UnseenContext::Zero) return p;
    return 1.0 / static_cast<double>(outcomes_);
  }

  Weights lambdas(int bucket) const {
    auto it = lambdas_.find(bucket);
    if (it != lambdas_.end()) return it->second;
    Weights w;
    w.fill(1.0 / static_cast<double>(K));
    return w;
  }
  const std::map<int, Weights>& fitted_lambdas() const { return lambdas_; }

  void set_lambdas(int bucket, const Weights& w) { lambdas_[bucket] = checked(w); }
  /// Same weights in every bucket.
  void set_all_lambdas(const Weights& w) {
    for (int b = 0; b <= bucket_cap_; ++b) lambdas_[b] = checked(w);
  }

  double prob(const Contexts& ctx, int outcome) const {
    const Weights w = lambdas(bucket(ctx));
    double p = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      if (w[k] > 0.0) p += w[k] * component_prob(k, ctx[k], outcome);
    return p;
  }

  /// Fits per-bucket weights to maximise the heldout log-likelihood by EM,
  /// starting from equal weights. Events no component can explain carry no
  /// information about the weights and are skipped.
  EmTrace fit(std::span<const Event> heldout, const EmOptions& opts = {}) {
    struct Row {
      int bucket;
      Weights p;
    };
    std::vector<Row> rows;
    rows.reserve(heldout.size());
    for (const auto& e : heldout) {
      Row r{bucket(e.contexts), {}};
      double any = 0.0;
      for (std::size_t k = 0; k < K; ++k) any += r.p[k] = component_prob(k, e.contexts[k], e.outcome);
      if (any > 0.0) rows.push_back(r);
    }
    lambdas_.clear();
    Weights uniform;
    uniform.fill(1.0 / static_cast<double>(K));
    for (const auto& r : rows) lambdas_[r.bucket] = uniform;

    auto log_likelihood = [&] {
      double ll = 0.0;
      for (const auto& r : rows) {
        const Weights& w = lambdas_[r.bucket];
        double mix = 0.0;
        for (std::size_t k = 0; k < K; ++k) mix += w[k] * r.p[k];
        ll += std::log(mix);
      }
      return ll;
    };

    EmTrace trace;
    double prev = log_likelihood();
    trace.log_likelihood.push_back(prev);
    for (int it = 0; it < opts.max_iters; ++it) {
      std::map<int, Weights> mass;
      std::map<int, double> events;
      for (const auto& r : rows) {
        const Weights& w = lambdas_[r.bucket];
        double mix = 0.0;
        for (std::size_t k = 0; k < K; ++k) mix += w[k] * r.p[k];
        Weights& m = mass.try_emplace(r.bucket, Weights{}).first->second;
        for (std::size_t k = 0; k < K; ++k) m[k] += w[k] * r.p[k] / mix;
        events[r.bucket] += 1.0;
      }
      for (auto& [b, m] : mass) {
        for (std::size_t k = 0; k < K; ++k) m[k] /= events[b];
        lambdas_[b] = m;
      }
      const double ll = log_likelihood();
      trace.log_likelihood.push_back(ll);
      trace.iterations = it + 1;
      if (ll - prev <= opts.tol * std::abs(prev)) break;
      prev = ll;
    }
    return trace;
  }

  /// Line-oriented text: `count k c0 c1 c2 outcome n` and `lambda b w0..wK-1`.
  void write(std::ostream& os) const {
    for (std::size_t k = 0; k < K; ++k)
      for (const auto& [ctx, row] : components_[k].rows())
        for (const auto& [o, n] : row.counts)
          os << "count " << k << ' ' << ctx[0] << ' ' << ctx[1] << ' ' << ctx[2] << ' ' << o << ' ' << format_exact(n)
             << '\n';
    for (const auto& [b, w] : lambdas_) {
      os << "lambda " << b;
      for (double x : w) os << ' ' << format_exact(x);
      os << '\n';
    }
  }

  /// Parses one line written by write(); false if the line belongs elsewhere.
  bool read_line(const std::vector<std::string>& f) {
    if (f.empty()) return false;
    if (f[0] == "count" && f.size() == 7) {
      const auto k = static_cast<std::size_t>(std::stoul(f[1]));
      if (k >= K) throw DataError("component index out of range: " + f[1]);
      add_count(k, {std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4])}, std::stoi(f[5]), parse_double(f[6], "count"));
      return true;
    }
    if (f[0] == "lambda" && f.size() == K + 2) {
      Weights w;
      for (std::size_t k = 0; k < K; ++k) w[k] = parse_double(f[k + 2], "lambda");
      lambdas_[std::stoi(f[1])] = checked(w);
      return true;
    }
    return false;
  }

 private:
  static Weights checked(const Weights& w) {
    double s = 0.0;
    for (double x : w) {
      if (!(x >= 0.0)) throw DataError("negative interpolation weight");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DataError("interpolation weights sum to " + format_exact(s));
    return w;
  }

  std::size_t outcomes_ = 1;
  UnseenContext unseen_ = UnseenContext::Uniform;
  std::size_t bucket_component_ = 0;
  int bucket_cap_ = 16;
  std::array<CondCounts, K> components_;
  std::map<int, Weights> lambdas_;
};

}  // namespace mcle
