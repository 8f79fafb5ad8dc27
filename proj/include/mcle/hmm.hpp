// Bitag taggers: the standard joint HMM, its conditional counterpart, and two
// further joint models built from the conditional model's interpolated
// distribution. All four factor along the tag chain, so one forward-backward
// routine decodes them all by posterior marginals.
#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mcle/common.hpp"
#include "mcle/interpolation.hpp"
#include "mcle/tree.hpp"

namespace mcle {

/// Stands in for words with too few training occurrences and for words never
/// seen in training.
inline constexpr std::string_view kUnknownWord = "<unk>";

struct TaggedSentence {
  std::vector<std::string> words;
  std::vector<std::string> tags;

  bool operator==(const TaggedSentence&) const = default;
};

using TaggedCorpus = std::vector<TaggedSentence>;

inline void check_tagged(const TaggedSentence& s, std::size_t index, bool allow_unknown_word = false) {
  const std::string where = "sentence " + std::to_string(index + 1);
  if (s.words.empty()) throw DataError(where + " is empty");
  if (s.words.size() != s.tags.size()) throw DataError(where + " has different numbers of words and tags");
  for (const auto* v : {&s.words, &s.tags})
    for (const auto& x : *v)
      if (x == kEndSymbol || (x == kUnknownWord && !(allow_unknown_word && v == &s.words)))
        throw DataError(where + " uses the reserved symbol " + x);
}

/// One sentence per line as space-separated `word_tag` tokens.
inline TaggedCorpus read_tagged(std::istream& in) {
  TaggedCorpus out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    TaggedSentence s;
    for (const auto& tok : toks) {
      const auto u = tok.find('_');
      if (u == std::string::npos || u == 0 || u + 1 == tok.size() || tok.find('_', u + 1) != std::string::npos)
        throw DataError("line " + std::to_string(lineno) + ": expected word_tag, got '" + tok + "'");
      s.words.push_back(tok.substr(0, u));
      s.tags.push_back(tok.substr(u + 1));
    }
    check_tagged(s, out.size());
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_tagged(std::ostream& os, const TaggedCorpus& c) {
  for (const auto& s : c) {
    for (std::size_t j = 0; j < s.words.size(); ++j) os << (j ? " " : "") << s.words[j] << '_' << s.tags[j];
    os << '\n';
  }
}

/// Words and preterminals of a lexicalised treebank.
inline TaggedCorpus tagged_corpus(const Corpus& c) {
  TaggedCorpus out;
  for (const auto& t : c.trees) {
    TaggedSentence s;
    for (auto& [w, tag] : tagged_yield(t)) {
      s.words.push_back(w);
      s.tags.push_back(tag);
    }
    check_tagged(s, out.size());
    out.push_back(std::move(s));
  }
  return out;
}

/// Replaces words seen fewer than `threshold` times with the unknown word.
inline TaggedCorpus replace_rare_words(const TaggedCorpus& c, double threshold) {
  std::map<std::string, double> freq;
  for (const auto& s : c)
    for (const auto& w : s.words) freq[w] += 1;
  TaggedCorpus out = c;
  for (auto& s : out)
    for (auto& w : s.words)
      if (freq[w] < threshold) w = kUnknownWord;
  return out;
}

template <std::size_t N>
using CountTable = std::map<std::array<int, N>, double>;

template <std::size_t N>
double lookup(const CountTable<N>& t, const std::array<int, N>& key) {
  auto it = t.find(key);
  return it == t.end() ? 0.0 : it->second;
}

/// Training counts over positions j with w_0 = t_0 = w_{m+1} = t_{m+1} = end.
/// Word id 0 and tag id 0 are the end marker; word id 1 is the unknown word.
struct EmpiricalTables {
  Vocab words;
  Vocab tags;
  CountTable<1> tag;                      // t_j, j = 1..m
  CountTable<2> tag_bigram;               // (t_{j-1}, t_j), j = 1..m+1
  CountTable<2> word_tag;                 // (w_j, t_j), j = 1..m
  CountTable<2> prev_word_tag;            // (w_{j-1}, t_j), j = 1..m+1
  CountTable<2> word_prev_tag;            // (w_j, t_{j-1}), j = 1..m+1
  CountTable<3> word_prev_tag_tag;        // (w_j, t_{j-1}, t_j), j = 1..m+1
  CountTable<3> prev_word_prev_tag_tag;   // (w_{j-1}, t_{j-1}, t_j), j = 1..m+1
  std::vector<double> prev_tag_total;     // occurrences of each tag as t_{j-1}

  EmpiricalTables() {
    words.intern(kEndSymbol);
    words.intern(kUnknownWord);
    tags.intern(kEndSymbol);
  }

  static constexpr int kEnd = 0;
  static constexpr int kUnk = 1;

  std::size_t num_tags() const { return tags.size() - 1; }

  int word_id(const std::string& w) const {
    const int id = words.find(w);
    return id < 0 ? kUnk : id;
  }

  void add(const TaggedSentence& s) {
    const std::size_t m = s.words.size();
    std::vector<int> w(m + 2, kEnd), t(m + 2, kEnd);
    for (std::size_t j = 1; j <= m; ++j) {
      w[j] = words.intern(s.words[j - 1]);
      t[j] = tags.intern(s.tags[j - 1]);
    }
    for (std::size_t j = 1; j <= m + 1; ++j) {
      if (j <= m) {
        tag[{t[j]}] += 1;
        word_tag[{w[j], t[j]}] += 1;
      }
      tag_bigram[{t[j - 1], t[j]}] += 1;
      prev_word_tag[{w[j - 1], t[j]}] += 1;
      word_prev_tag[{w[j], t[j - 1]}] += 1;
      word_prev_tag_tag[{w[j], t[j - 1], t[j]}] += 1;
      prev_word_prev_tag_tag[{w[j - 1], t[j - 1], t[j]}] += 1;
    }
  }

  void finish() {
    prev_tag_total.assign(tags.size(), 0.0);
    for (const auto& [k, n] : tag_bigram) prev_tag_total[static_cast<std::size_t>(k[0])] += n;
  }

  /// Phat(t | t_prev).
  double transition(int tp, int t) const {
    const double d = prev_tag_total[static_cast<std::size_t>(tp)];
    return d > 0 ? lookup(tag_bigram, {tp, t}) / d : 0.0;
  }
  /// Phat(w | t); the end tag emits the end word.
  double emission(int w, int t) const {
    if (t == kEnd) return w == kEnd ? 1.0 : 0.0;
    const double d = lookup(tag, {t});
    return d > 0 ? lookup(word_tag, {w, t}) / d : 0.0;
  }
  /// Phat(w_j | t_{j-1}).
  double emission_from_prev(int w, int tp) const {
    const double d = prev_tag_total[static_cast<std::size_t>(tp)];
    return d > 0 ? lookup(word_prev_tag, {w, tp}) / d : 0.0;
  }
};

/// Counts exactly as given; rare-word replacement is the caller's business.
inline EmpiricalTables collect_tables(const TaggedCorpus& train) {
  if (train.empty()) throw DataError("empty training corpus");
  EmpiricalTables tables;
  for (std::size_t i = 0; i < train.size(); ++i) {
    check_tagged(train[i], i, true);
    tables.add(train[i]);
  }
  tables.finish();
  return tables;
}

/// Pr0(T_j | W_j, T_{j-1}) mixes Phat(T|W), Phat(T|T_prev), Phat(T|W,T_prev)
/// over real tags; Pr1(T_j | W_{j-1}, T_{j-1}) mixes the same shapes over the
/// previous word, with the end tag as a possible outcome.
enum class Mixture { Pr0, Pr1 };

using TagMixture = InterpolatedCondDist<3>;

inline TagMixture mixture_from_tables(const EmpiricalTables& tb, Mixture which, int bucket_cap = 16) {
  const int E = EmpiricalTables::kEnd;
  if (which == Mixture::Pr0) {
    TagMixture d(tb.num_tags(), UnseenContext::Uniform, 2, bucket_cap);
    for (const auto& [k, n] : tb.word_tag) d.add_count(0, context(k[0]), k[1], n);
    for (const auto& [k, n] : tb.tag_bigram)
      if (k[1] != E) d.add_count(1, context(k[0]), k[1], n);
    for (const auto& [k, n] : tb.word_prev_tag_tag)
      if (k[2] != E) d.add_count(2, context(k[0], k[1]), k[2], n);
    return d;
  }
  TagMixture d(tb.num_tags() + 1, UnseenContext::Uniform, 2, bucket_cap);
  for (const auto& [k, n] : tb.prev_word_tag) d.add_count(0, context(k[0]), k[1], n);
  for (const auto& [k, n] : tb.tag_bigram) d.add_count(1, context(k[0]), k[1], n);
  for (const auto& [k, n] : tb.prev_word_prev_tag_tag) d.add_count(2, context(k[0], k[1]), k[2], n);
  return d;
}

inline TagMixture::Contexts mixture_contexts(Mixture which, int w, int wp, int tp) {
  const int x = which == Mixture::Pr0 ? w : wp;
  return {context(x), context(tp), context(x, tp)};
}

/// Heldout events for fitting `which`. Tags unknown to training cannot be
/// scored and their events are dropped.
inline std::vector<TagMixture::Event> mixture_events(const EmpiricalTables& tb, const TaggedCorpus& heldout,
                                                     Mixture which) {
  std::vector<TagMixture::Event> out;
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    const auto& s = heldout[i];
    check_tagged(s, i, true);
    const std::size_t m = s.words.size();
    std::vector<int> w(m + 2, EmpiricalTables::kEnd), t(m + 2, EmpiricalTables::kEnd);
    for (std::size_t j = 1; j <= m; ++j) {
      w[j] = tb.word_id(s.words[j - 1]);
      t[j] = tb.tags.find(s.tags[j - 1]);
    }
    const std::size_t last = which == Mixture::Pr0 ? m : m + 1;
    for (std::size_t j = 1; j <= last; ++j) {
      if (t[j] < 0 || t[j - 1] < 0) continue;
      out.push_back({mixture_contexts(which, w[j], w[j - 1], t[j - 1]), t[j]});
    }
  }
  return out;
}

struct FittedMixture {
  TagMixture dist;
  EmTrace trace;
};

inline FittedMixture fit_deleted_interpolation(const EmpiricalTables& tb, const TaggedCorpus& heldout, Mixture which,
                                               const EmOptions& em = {}, int bucket_cap = 16) {
  if (heldout.empty()) throw DataError("empty heldout corpus");
  FittedMixture f{mixture_from_tables(tb, which, bucket_cap), {}};
  const auto events = mixture_events(tb, heldout, which);
  f.trace = f.dist.fit(events, em);
  return f;
}

enum class TaggerVariant { Joint, Conditional, PrevWord, NextEmission };

inline const std::vector<std::pair<TaggerVariant, std::string>>& tagger_variant_names() {
  static const std::vector<std::pair<TaggerVariant, std::string>> names{{TaggerVariant::Joint, "joint"},
                                                                       {TaggerVariant::Conditional, "conditional"},
                                                                       {TaggerVariant::PrevWord, "joint-prev-word"},
                                                                       {TaggerVariant::NextEmission, "joint-next-emission"}};
  return names;
}

inline std::string to_string(TaggerVariant v) {
  for (const auto& [x, n] : tagger_variant_names())
    if (x == v) return n;
  return "?";
}

inline TaggerVariant parse_tagger_variant(const std::string& s) {
  std::string choices;
  for (const auto& [x, n] : tagger_variant_names()) {
    if (n == s) return x;
    choices += (choices.empty() ? "" : ", ") + n;
  }
  throw ConfigError("unknown tagger variant '" + s + "' (choices: " + choices + ")");
}

struct TaggerOptions {
  /// Training words seen fewer times than this become the unknown word.
  double unk_threshold = 2;
  int bucket_cap = 16;
  EmOptions em;
};

/// Everything the four variants need; one training run serves all of them.
struct TaggerParameters {
  TaggerOptions options;
  EmpiricalTables tables;
  TagMixture pr0;
  TagMixture pr1;
  EmTrace pr0_trace;
  EmTrace pr1_trace;
};

inline TaggerParameters train_tagger(const TaggedCorpus& train, const TaggedCorpus& heldout,
                                     const TaggerOptions& opts = {}) {
  TaggerParameters p;
  p.options = opts;
  p.tables = collect_tables(replace_rare_words(train, opts.unk_threshold));
  auto f0 = fit_deleted_interpolation(p.tables, heldout, Mixture::Pr0, opts.em, opts.bucket_cap);
  auto f1 = fit_deleted_interpolation(p.tables, heldout, Mixture::Pr1, opts.em, opts.bucket_cap);
  p.pr0 = std::move(f0.dist);
  p.pr0_trace = std::move(f0.trace);
  p.pr1 = std::move(f1.dist);
  p.pr1_trace = std::move(f1.trace);
  return p;
}

struct Lattice {
  /// posteriors[j][t]: marginal probability of tag id t at word j (id 0 unused).
  std::vector<std::vector<double>> posteriors;
  /// log of the sum over all tag sequences of the product of factors.
  double log_partition = 0.0;
  /// Positions whose factors were replaced by tag transitions alone.
  std::vector<std::size_t> fallback_columns;
};

/// A view of trained parameters as one of the four models. The parameters
/// must outlive the model.
class TaggerModel {
 public:
  TaggerModel(const TaggerParameters& p, TaggerVariant v) : p_(&p), variant_(v) {
    const auto& tags = p.tables.tags;
    for (int t = 1; t < static_cast<int>(tags.size()); ++t) by_name_.push_back(t);
    std::sort(by_name_.begin(), by_name_.end(), [&](int a, int b) { return tags.str(a) < tags.str(b); });
  }

  TaggerVariant variant() const { return variant_; }
  const TaggerParameters& parameters() const { return *p_; }

  std::vector<int> word_ids(const std::vector<std::string>& words) const {
    std::vector<int> w(words.size() + 2, EmpiricalTables::kEnd);
    for (std::size_t j = 0; j < words.size(); ++j) w[j + 1] = p_->tables.word_id(words[j]);
    return w;
  }

  /// The variant's factor at position j (1..m+1) for the transition tp -> t,
  /// given padded word ids w (w[0] = w[m+1] = end).
  double factor(const std::vector<int>& w, std::size_t j, int tp, int t) const {
    const auto& tb = p_->tables;
    const bool last = j + 1 == w.size();
    switch (variant_) {
      case TaggerVariant::Joint:
        return tb.transition(tp, t) * tb.emission(w[j], t);
      case TaggerVariant::Conditional:
        if (last) return t == EmpiricalTables::kEnd ? 1.0 : 0.0;
        return p_->pr0.prob(mixture_contexts(Mixture::Pr0, w[j], w[j - 1], tp), t);
      case TaggerVariant::PrevWord:
        return tb.emission(w[j], t) * p_->pr1.prob(mixture_contexts(Mixture::Pr1, w[j], w[j - 1], tp), t);
      case TaggerVariant::NextEmission: {
        const double pr0 = last ? (t == EmpiricalTables::kEnd ? 1.0 : 0.0)
                                : p_->pr0.prob(mixture_contexts(Mixture::Pr0, w[j], w[j - 1], tp), t);
        return pr0 * tb.emission_from_prev(w[j], tp);
      }
    }
    return 0.0;
  }

  double sequence_log_prob(const std::vector<std::string>& words, const std::vector<std::string>& tags) const {
    if (words.size() != tags.size()) throw DataError("words and tags differ in length");
    const auto w = word_ids(words);
    std::vector<int> t(words.size() + 2, EmpiricalTables::kEnd);
    for (std::size_t j = 0; j < tags.size(); ++j) {
      t[j + 1] = p_->tables.tags.find(tags[j]);
      if (t[j + 1] < 0) return kNegInf;
    }
    double lp = 0.0;
    for (std::size_t j = 1; j < w.size(); ++j) lp += std::log(factor(w, j, t[j - 1], t[j]));
    return lp;
  }

  /// Forward-backward with per-position scaling. A position where every path
  /// has zero weight is recomputed with tag transitions only; if that is
  /// still zero the sentence cannot be tagged.
  Lattice forward_backward(const std::vector<std::string>& words) const {
    if (words.empty()) throw DataError("cannot tag an empty sentence");
    const auto& tb = p_->tables;
    const std::size_t m = words.size(), n = tb.num_tags() + 1;
    const auto w = word_ids(words);
    Lattice out;
    // phi[j][tp * n + t]
    std::vector<std::vector<double>> phi(m + 2, std::vector<double>(n * n, 0.0));
    auto fill = [&](std::size_t j, bool fallback) {
      auto& f = phi[j];
      std::fill(f.begin(), f.end(), 0.0);
      const std::size_t tp_lo = j == 1 ? 0 : 1, tp_hi = j == 1 ? 1 : n;
      const std::size_t t_lo = j == m + 1 ? 0 : 1, t_hi = j == m + 1 ? 1 : n;
      for (std::size_t tp = tp_lo; tp < tp_hi; ++tp)
        for (std::size_t t = t_lo; t < t_hi; ++t)
          f[tp * n + t] = fallback ? tb.transition(static_cast<int>(tp), static_cast<int>(t))
                                   : factor(w, j, static_cast<int>(tp), static_cast<int>(t));
    };
    std::vector<std::vector<double>> alpha(m + 2, std::vector<double>(n, 0.0));
    std::vector<double> scale(m + 2, 1.0);
    alpha[0][0] = 1.0;
    for (std::size_t j = 1; j <= m + 1; ++j) {
      for (bool fallback : {false, true}) {
        fill(j, fallback);
        std::fill(alpha[j].begin(), alpha[j].end(), 0.0);
        double c = 0.0;
        for (std::size_t tp = 0; tp < n; ++tp) {
          if (alpha[j - 1][tp] == 0.0) continue;
          for (std::size_t t = 0; t < n; ++t) alpha[j][t] += alpha[j - 1][tp] * phi[j][tp * n + t];
        }
        for (double a : alpha[j]) c += a;
        if (c > 0.0) {
          for (double& a : alpha[j]) a /= c;
          scale[j] = c;
          if (fallback) out.fallback_columns.push_back(j);
          break;
        }
        if (fallback)
          throw DataError("no tag sequence has positive probability at word " + std::to_string(j) + " ('" +
                          (j <= m ? words[j - 1] : std::string(kEndSymbol)) + "')");
      }
    }
    std::vector<std::vector<double>> beta(m + 2, std::vector<double>(n, 0.0));
    beta[m + 1][0] = 1.0;
    for (std::size_t j = m + 1; j >= 2; --j)
      for (std::size_t tp = 0; tp < n; ++tp) {
        double b = 0.0;
        for (std::size_t t = 0; t < n; ++t) b += phi[j][tp * n + t] * beta[j][t];
        beta[j - 1][tp] = b / scale[j];
      }
    out.posteriors.assign(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 1; j <= m; ++j)
      for (std::size_t t = 1; t < n; ++t) out.posteriors[j - 1][t] = alpha[j][t] * beta[j][t];
    for (std::size_t j = 1; j <= m + 1; ++j) out.log_partition += std::log(scale[j]);
    return out;
  }

  /// Per-position argmax of the posterior marginal; ties go to the tag that
  /// sorts first.
  std::vector<std::string> decode(const std::vector<std::string>& words) const {
    const auto lat = forward_backward(words);
    std::vector<std::string> tags;
    for (const auto& col : lat.posteriors) {
      int best = by_name_.front();
      for (int t : by_name_)
        if (col[static_cast<std::size_t>(t)] > col[static_cast<std::size_t>(best)]) best = t;
      tags.push_back(p_->tables.tags.str(best));
    }
    return tags;
  }

 private:
  const TaggerParameters* p_;
  TaggerVariant variant_;
  std::vector<int> by_name_;
};

inline std::vector<std::string> posterior_decode(const TaggerModel& m, const std::vector<std::string>& words) {
  return m.decode(words);
}

/// Tags every sentence; the words of `c` are kept and its tags replaced.
inline TaggedCorpus tag_corpus(const TaggerModel& m, const TaggedCorpus& c, unsigned threads = 1) {
  TaggedCorpus out = c;
  parallel_for(c.size(), threads, [&](std::size_t i) { out[i].tags = m.decode(c[i].words); });
  return out;
}

inline double tagging_accuracy(const TaggedCorpus& pred, const TaggedCorpus& gold) {
  if (pred.size() != gold.size()) throw DataError("predicted and gold corpora differ in length");
  double right = 0, total = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred[i].tags.size() != gold[i].tags.size())
      throw DataError("sentence " + std::to_string(i + 1) + ": predicted and gold differ in length");
    for (std::size_t j = 0; j < gold[i].tags.size(); ++j) {
      right += pred[i].tags[j] == gold[i].tags[j];
      total += 1;
    }
  }
  if (total == 0) throw DataError("no tagged positions to score");
  return right / total;
}

namespace detail {

template <std::size_t N>
void write_table(std::ostream& os, const char* name, const CountTable<N>& t) {
  for (const auto& [k, n] : t) {
    os << name;
    for (int x : k) os << ' ' << x;
    os << ' ' << format_exact(n) << '\n';
  }
}

template <std::size_t N>
bool read_table(const std::vector<std::string>& f, const char* name, CountTable<N>& t) {
  if (f.size() != N + 2 || f[0] != name) return false;
  std::array<int, N> k;
  for (std::size_t i = 0; i < N; ++i) k[i] = std::stoi(f[i + 1]);
  t[k] += parse_double(f[N + 1], name);
  return true;
}

}  // namespace detail

/// Sectioned text: options, the two vocabularies, the raw count tables and
/// the fitted weights of both mixtures. The mixtures' component counts are
/// rebuilt from the tables on load.
inline void write_tagger(std::ostream& os, const TaggerParameters& p) {
  os << "# mcle tagger\n[options]\n";
  os << "unk_threshold " << format_exact(p.options.unk_threshold) << '\n';
  os << "bucket_cap " << p.options.bucket_cap << '\n';
  os << "[words]\n";
  for (const auto& w : p.tables.words.strings()) os << w << '\n';
  os << "[tags]\n";
  for (const auto& t : p.tables.tags.strings()) os << t << '\n';
  os << "[counts]\n";
  const auto& tb = p.tables;
  detail::write_table(os, "tag", tb.tag);
  detail::write_table(os, "tag_bigram", tb.tag_bigram);
  detail::write_table(os, "word_tag", tb.word_tag);
  detail::write_table(os, "prev_word_tag", tb.prev_word_tag);
  detail::write_table(os, "word_prev_tag", tb.word_prev_tag);
  detail::write_table(os, "word_prev_tag_tag", tb.word_prev_tag_tag);
  detail::write_table(os, "prev_word_prev_tag_tag", tb.prev_word_prev_tag_tag);
  for (const auto& [name, mix] : {std::pair{"[pr0]", &p.pr0}, std::pair{"[pr1]", &p.pr1}}) {
    os << name << '\n';
    for (const auto& [b, w] : mix->fitted_lambdas())
      os << "lambda " << b << ' ' << format_exact(w[0]) << ' ' << format_exact(w[1]) << ' ' << format_exact(w[2])
         << '\n';
  }
}

inline TaggerParameters read_tagger(std::istream& in) {
  TaggerParameters p;
  std::string section;
  std::vector<std::string> words, tags, pr0, pr1;
  std::size_t lineno = 0;
  auto& tb = p.tables;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto f = split_ws(line);
    if (f.empty() || f[0][0] == '#') continue;
    if (f.size() == 1 && f[0].front() == '[' && f[0].back() == ']') {
      section = f[0];
      continue;
    }
    const std::string where = "tagger model line " + std::to_string(lineno);
    if (section == "[options]" && f.size() == 2) {
      if (f[0] == "unk_threshold") p.options.unk_threshold = parse_double(f[1], f[0]);
      else if (f[0] == "bucket_cap") p.options.bucket_cap = std::stoi(f[1]);
      else throw DataError(where + ": unknown option " + f[0]);
    } else if (section == "[words]" && f.size() == 1) {
      words.push_back(f[0]);
    } else if (section == "[tags]" && f.size() == 1) {
      tags.push_back(f[0]);
    } else if (section == "[counts]") {
      if (!(detail::read_table(f, "tag", tb.tag) || detail::read_table(f, "tag_bigram", tb.tag_bigram) ||
            detail::read_table(f, "word_tag", tb.word_tag) || detail::read_table(f, "prev_word_tag", tb.prev_word_tag) ||
            detail::read_table(f, "word_prev_tag", tb.word_prev_tag) ||
            detail::read_table(f, "word_prev_tag_tag", tb.word_prev_tag_tag) ||
            detail::read_table(f, "prev_word_prev_tag_tag", tb.prev_word_prev_tag_tag)))
        throw DataError(where + ": bad count line");
    } else if (section == "[pr0]") {
      pr0.push_back(line);
    } else if (section == "[pr1]") {
      pr1.push_back(line);
    } else {
      throw DataError(where + ": unexpected content in section " + (section.empty() ? "(none)" : section));
    }
  }
  if (words.size() < 2 || words[0] != kEndSymbol || words[1] != kUnknownWord || tags.empty() || tags[0] != kEndSymbol)
    throw DataError("tagger model has malformed vocabularies");
  for (std::size_t i = 2; i < words.size(); ++i) tb.words.intern(words[i]);
  for (std::size_t i = 1; i < tags.size(); ++i) tb.tags.intern(tags[i]);
  if (tb.words.size() != words.size() || tb.tags.size() != tags.size())
    throw DataError("tagger model has duplicate vocabulary entries");
  tb.finish();
  p.pr0 = mixture_from_tables(tb, Mixture::Pr0, p.options.bucket_cap);
  p.pr1 = mixture_from_tables(tb, Mixture::Pr1, p.options.bucket_cap);
  for (const auto& l : pr0)
    if (!p.pr0.read_line(split_ws(l))) throw DataError("bad [pr0] line: " + l);
  for (const auto& l : pr1)
    if (!p.pr1.read_line(split_ws(l))) throw DataError("bad [pr1] line: " + l);
  return p;
}

}  // namespace mcle
