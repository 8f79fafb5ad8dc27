// The three comparison pipelines: file I/O around the estimators and the
// metric tables they produce.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcle/chart.hpp"
#include "mcle/config.hpp"
#include "mcle/eval.hpp"
#include "mcle/hmm.hpp"
#include "mcle/pcfg_mcle.hpp"
#include "mcle/shiftreduce.hpp"

namespace mcle {

using Json = nlohmann::ordered_json;

/// Marks a sentence the parser could not analyse in prediction files.
inline constexpr std::string_view kNoParse = "NOPARSE";

inline std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  if (!out) throw DataError("error writing " + p.string());
}

template <class F>
decltype(auto) with_file_context(const std::filesystem::path& p, F fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

inline Corpus read_treebank(const std::filesystem::path& p) {
  return with_file_context(p, [&] {
    auto in = open_input(p);
    auto c = read_bracketed(in);
    if (c.empty()) throw DataError("no trees");
    return c;
  });
}

/// One sentence per line, whitespace-separated tokens.
inline std::vector<std::vector<std::string>> read_sentences(const std::filesystem::path& p) {
  auto in = open_input(p);
  std::vector<std::vector<std::string>> out;
  for (std::string line; std::getline(in, line);) {
    auto toks = split_ws(line);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

inline std::string format_predictions(const Predictions& p) {
  std::string out;
  for (const auto& t : p) (out += t ? to_string(*t) : std::string(kNoParse)) += '\n';
  return out;
}

inline Predictions read_predictions(const std::filesystem::path& p) {
  return with_file_context(p, [&] {
    auto in = open_input(p);
    Predictions out;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      const auto v = trim(line);
      if (v.empty()) continue;
      if (v == kNoParse) {
        out.push_back(std::nullopt);
        continue;
      }
      try {
        out.push_back(parse_tree(v));
      } catch (const Error& e) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return out;
  });
}

inline std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string short_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

inline Json bracket_json(const EvalReport& r) {
  return {{"precision", r.precision()},      {"recall", r.recall()},   {"f_score", r.f_score()},
          {"matched", r.counts.matched},     {"gold", r.counts.gold},  {"predicted", r.counts.predicted},
          {"sentences", r.sentences},        {"failures", r.failures}};
}

inline Json bootstrap_json(const BootstrapResult& b) {
  return {{"p_value", b.p_value}, {"iterations", b.iterations}, {"seed", b.seed}, {"observed_delta_f", b.observed_delta_f}};
}

inline std::vector<std::vector<std::string>> yields(const Corpus& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : c.trees) out.push_back(yield(t));
  return out;
}

inline Predictions viterbi_corpus(const Pcfg& g, const std::vector<std::vector<std::string>>& sentences,
                                  unsigned threads) {
  const ChartGrammar cg(g);
  Predictions out(sentences.size());
  parallel_for(sentences.size(), threads, [&](std::size_t i) { out[i] = cg.viterbi(sentences[i]); });
  return out;
}

struct PipelineReport {
  Json metrics;
  std::string table;  ///< tab-separated
};

namespace detail {

inline std::string grammar_text(const Pcfg& g) {
  std::ostringstream os;
  write_grammar(os, g);
  return os.str();
}

inline PipelineReport run_pcfg(const ExperimentConfig& cfg) {
  const auto train = strip_lexical(read_treebank(cfg.train));
  const auto test = strip_lexical(read_treebank(cfg.test));
  const auto& out = cfg.output_dir;

  const Pcfg mle = estimate_mle(extract_counts(train));
  AscentConfig ascent = cfg.ascent;
  ascent.threads = cfg.threads;
  const McleResult mcle = estimate_mcle(train, mle, ascent);

  std::string trace = "iteration\tconditional_log_likelihood\n";
  for (std::size_t i = 0; i < mcle.trace.size(); ++i) trace += std::to_string(i) + '\t' + format_exact(mcle.trace[i]) + '\n';
  write_file(out / "mle.grammar", grammar_text(mle));
  write_file(out / "mcle.grammar", grammar_text(mcle.grammar));
  write_file(out / "mcle_trace.tsv", trace);

  const auto sentences = yields(test);
  const auto pm = viterbi_corpus(mle, sentences, cfg.threads);
  const auto pc = viterbi_corpus(mcle.grammar, sentences, cfg.threads);
  write_file(out / "mle.predictions", format_predictions(pm));
  write_file(out / "mcle.predictions", format_predictions(pc));

  const CorpusLikelihood lm = corpus_likelihood(mle, train, cfg.threads);
  const CorpusLikelihood lc = corpus_likelihood(mcle.grammar, train, cfg.threads);
  const EvalReport em = score_corpus(test, pm), ec = score_corpus(test, pc);
  const auto boot = bootstrap_test(test, pc, pm, cfg.bootstrap_iterations, cfg.seed, cfg.threads);

  PipelineReport r;
  auto row = [&](const std::string& name, const std::string& a, const std::string& b) {
    r.table += name + '\t' + a + '\t' + b + '\n';
  };
  row("quantity", "mle", "mcle");
  row("-log P(y)", fixed(-lm.joint, 4), fixed(-lc.joint, 4));
  row("-log P(y|x)", fixed(-lm.conditional, 4), fixed(-lc.conditional, 4));
  row("-log P(x)", fixed(-lm.marginal, 4), fixed(-lc.marginal, 4));
  row("labelled precision", fixed(em.precision()), fixed(ec.precision()));
  row("labelled recall", fixed(em.recall()), fixed(ec.recall()));
  row("labelled F", fixed(em.f_score()), fixed(ec.f_score()));
  row("parse failures", std::to_string(em.failures), std::to_string(ec.failures));
  r.table += "\nbootstrap\tdelta F (mcle - mle)\tp-value\n";
  r.table += std::to_string(boot.iterations) + '\t' + fixed(boot.observed_delta_f) + '\t' + fixed(boot.p_value, 4) + '\n';

  auto lik = [](const CorpusLikelihood& l) {
    return Json{{"neg_log_joint", -l.joint}, {"neg_log_conditional", -l.conditional}, {"neg_log_marginal", -l.marginal}};
  };
  r.metrics["train_likelihood"] = {{"mle", lik(lm)}, {"mcle", lik(lc)}};
  r.metrics["mcle_ascent"] = {{"iterations", mcle.iterations}, {"converged", mcle.converged}};
  r.metrics["test"] = {{"mle", bracket_json(em)}, {"mcle", bracket_json(ec)}};
  r.metrics["bootstrap_mcle_vs_mle"] = bootstrap_json(boot);
  return r;
}

inline PipelineReport run_hmm(const ExperimentConfig& cfg) {
  const auto train = tagged_corpus(read_treebank(cfg.train));
  const auto heldout = tagged_corpus(read_treebank(cfg.heldout));
  const auto test = tagged_corpus(read_treebank(cfg.test));
  const auto& out = cfg.output_dir;

  const TaggerParameters params = train_tagger(train, heldout, cfg.tagger);
  std::ostringstream model;
  write_tagger(model, params);
  write_file(out / "tagger.model", model.str());

  PipelineReport r;
  r.table = "variant\taccuracy\n";
  Json acc = Json::object();
  std::size_t tokens = 0;
  for (const auto& s : test) tokens += s.words.size();
  for (const auto& [variant, name] : tagger_variant_names()) {
    const TaggerModel m(params, variant);
    const auto pred = tag_corpus(m, test, cfg.threads);
    std::ostringstream os;
    write_tagged(os, pred);
    write_file(out / (name + ".tags"), os.str());
    const double a = tagging_accuracy(pred, test);
    r.table += name + '\t' + fixed(a) + '\n';
    acc[name] = a;
  }
  r.metrics["test_tokens"] = tokens;
  r.metrics["accuracy"] = acc;
  auto trace = [](const EmTrace& t) {
    return Json{{"iterations", t.iterations},
                {"heldout_log_likelihood", t.log_likelihood.empty() ? 0.0 : t.log_likelihood.back()}};
  };
  r.metrics["interpolation"] = {{"pr0", trace(params.pr0_trace)}, {"pr1", trace(params.pr1_trace)}};
  return r;
}

inline HeadRules load_head_rules(const std::filesystem::path& p) {
  if (p.empty()) return {};
  return with_file_context(p, [&] {
    auto in = open_input(p);
    return HeadRules::read(in);
  });
}

inline PipelineReport run_sr(const ExperimentConfig& cfg) {
  const auto train = strip_lexical(read_treebank(cfg.train));
  const auto heldout = strip_lexical(read_treebank(cfg.heldout));
  const auto test = strip_lexical(read_treebank(cfg.test));
  const auto& out = cfg.output_dir;
  const HeadRules rules = load_head_rules(cfg.head_rules);
  const BinarizeOptions bin{cfg.binarize_marker};

  const Corpus btrain = binarize(train, rules, bin), bheld = binarize(heldout, rules, bin);
  const MoveModel joint = estimate_joint(btrain);
  const auto cond = estimate_conditional(btrain, bheld, cfg.sr_em, cfg.sr_bucket_cap);
  const Pcfg pcfg = estimate_mle(extract_counts(train));
  for (const auto& [name, m] : {std::pair{"joint", &joint}, std::pair{"cond", &cond.model}}) {
    std::ostringstream os;
    m->write(os);
    write_file(out / (std::string(name) + ".model"), os.str());
  }
  write_file(out / "pcfg.grammar", grammar_text(pcfg));

  const auto sentences = yields(test);
  PipelineReport r;
  r.table = "parser\tbeam\tprecision\trecall\tF\tfailures\n";
  Json rows = Json::array();
  auto add = [&](const std::string& parser, const std::string& beam, const Predictions& p) {
    const EvalReport e = score_corpus(test, p);
    r.table += parser + '\t' + beam + '\t' + fixed(e.precision()) + '\t' + fixed(e.recall()) + '\t' + fixed(e.f_score()) +
               '\t' + std::to_string(e.failures) + '\n';
    Json row = {{"parser", parser}, {"beam", beam}};
    row.update(bracket_json(e));
    rows.push_back(row);
    write_file(out / (parser + (beam == "-" ? "" : "_" + beam) + ".predictions"), format_predictions(p));
  };
  for (double threshold : cfg.beam_thresholds) {
    BeamConfig beam;
    beam.threshold = threshold;
    beam.require_observed_pairs = cfg.observed_pair_filter;
    beam.max_states = cfg.max_states;
    for (const auto& [name, m] : {std::pair{"joint", &joint}, std::pair{"cond", &cond.model}})
      add(name, short_number(threshold), parse_corpus(*m, sentences, beam, bin, cfg.threads).trees);
  }
  add("pcfg", "-", viterbi_corpus(pcfg, sentences, cfg.threads));
  r.metrics["results"] = rows;
  r.metrics["interpolation"] = {{"iterations", cond.trace.iterations},
                                {"heldout_log_likelihood",
                                 cond.trace.log_likelihood.empty() ? 0.0 : cond.trace.log_likelihood.back()}};
  return r;
}

}  // namespace detail

/// Runs the configured pipeline and writes models, predictions,
/// metrics.tsv and metrics.json under cfg.output_dir. The reports depend
/// only on the inputs and the seed.
inline PipelineReport run_pipeline(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  PipelineReport r;
  switch (cfg.pipeline) {
    case Pipeline::PcfgMleVsMcle:
      r = detail::run_pcfg(cfg);
      break;
    case Pipeline::HmmFourWay:
      r = detail::run_hmm(cfg);
      break;
    case Pipeline::SrJointVsCond:
      r = detail::run_sr(cfg);
      break;
  }
  Json head = {{"pipeline", to_string(cfg.pipeline)},
               {"seed", cfg.seed},
               {"train", cfg.train.filename().string()},
               {"heldout", cfg.heldout.filename().string()},
               {"test", cfg.test.filename().string()}};
  head.update(r.metrics);
  r.metrics = std::move(head);
  write_file(cfg.output_dir / "metrics.tsv", r.table);
  write_file(cfg.output_dir / "metrics.json", r.metrics.dump(2) + '\n');
  return r;
}

}  // namespace mcle
