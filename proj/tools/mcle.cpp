// Command-line driver. Exit status: 0 ok, 1 data error, 2 config or usage
// error.
#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "mcle/mcle.hpp"

namespace fs = std::filesystem;
using namespace mcle;

namespace {

struct Common {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string output_dir = ".";
  bool seed_set = false, threads_set = false, output_dir_set = false;
};

fs::path out_path(const Common& c, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(c.output_dir) / p;
}

Corpus gold_trees(const std::string& path, bool lexical) {
  auto c = read_treebank(path);
  return lexical ? c : strip_lexical(c);
}

void print_scores(const EvalReport& r, bool json) {
  if (json) {
    std::cout << bracket_json(r).dump(2) << '\n';
    return;
  }
  std::cout << "precision\t" << fixed(r.precision()) << "\nrecall\t" << fixed(r.recall()) << "\nF\t" << fixed(r.f_score())
            << "\nfailures\t" << r.failures << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint and conditional estimation for PCFGs, HMM taggers and shift-reduce parsers"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "random seed")->each([&](const std::string&) { common.seed_set = true; });
  app.add_option("--threads", common.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { common.threads_set = true; });
  app.add_option("--output-dir", common.output_dir, "directory for written files")
      ->each([&](const std::string&) { common.output_dir_set = true; });

  std::function<void()> action;

  // train-pcfg
  auto* tp = app.add_subcommand("train-pcfg", "estimate a PCFG from a treebank");
  std::string tp_train, tp_mode = "mle", tp_out = "grammar.txt", tp_trace;
  bool tp_lexical = false;
  AscentConfig ascent;
  tp->add_option("--train", tp_train, "bracketed training trees")->required();
  tp->add_option("--mode", tp_mode, "mle or mcle")->check(CLI::IsMember({"mle", "mcle"}));
  tp->add_option("--max-iters", ascent.max_iters, "MCLE iteration limit");
  tp->add_option("--tol", ascent.tol, "MCLE relative improvement stop");
  tp->add_option("--out", tp_out, "grammar file");
  tp->add_option("--trace", tp_trace, "write the MCLE objective trace here");
  tp->add_flag("--lexical", tp_lexical, "keep words (default: preterminals are the terminals)");
  tp->callback([&] {
    action = [&] {
      const Corpus train = gold_trees(tp_train, tp_lexical);
      Pcfg g = estimate_mle(extract_counts(train));
      if (tp_mode == "mcle") {
        ascent.threads = common.threads;
        auto r = estimate_mcle(train, g, ascent);
        g = r.grammar;
        std::cerr << "mcle: " << r.iterations << " iterations, CLL " << format_exact(r.trace.front()) << " -> "
                  << format_exact(r.trace.back()) << '\n';
        if (!tp_trace.empty()) {
          std::string t;
          for (double x : r.trace) t += format_exact(x) + '\n';
          write_file(out_path(common, tp_trace), t);
        }
      }
      std::ostringstream os;
      write_grammar(os, g);
      write_file(out_path(common, tp_out), os.str());
    };
  });

  // parse
  auto* ps = app.add_subcommand("parse", "Viterbi-parse sentences with a grammar");
  std::string ps_grammar, ps_input, ps_out = "parses.txt";
  ps->add_option("--grammar", ps_grammar, "grammar file")->required();
  ps->add_option("--input", ps_input, "one sentence per line")->required();
  ps->add_option("--out", ps_out, "predictions file");
  ps->callback([&] {
    action = [&] {
      const Pcfg g = with_file_context(ps_grammar, [&] {
        auto in = open_input(ps_grammar);
        return read_grammar(in);
      });
      write_file(out_path(common, ps_out), format_predictions(viterbi_corpus(g, read_sentences(ps_input), common.threads)));
    };
  });

  // train-tagger
  auto* tt = app.add_subcommand("train-tagger", "train the tagger tables and interpolation weights");
  std::string tt_train, tt_heldout, tt_out = "tagger.model";
  TaggerOptions topts;
  tt->add_option("--train", tt_train, "bracketed training trees")->required();
  tt->add_option("--heldout", tt_heldout, "bracketed heldout trees")->required();
  tt->add_option("--unk-threshold", topts.unk_threshold, "words seen fewer times become <unk>");
  tt->add_option("--bucket-cap", topts.bucket_cap, "largest weight bucket");
  tt->add_option("--out", tt_out, "model file");
  tt->callback([&] {
    action = [&] {
      const auto p =
          train_tagger(tagged_corpus(read_treebank(tt_train)), tagged_corpus(read_treebank(tt_heldout)), topts);
      std::ostringstream os;
      write_tagger(os, p);
      write_file(out_path(common, tt_out), os.str());
    };
  });

  // tag
  auto* tg = app.add_subcommand("tag", "posterior-decode sentences");
  std::string tg_model, tg_input, tg_variant = "joint", tg_out = "tags.txt";
  tg->add_option("--model", tg_model, "tagger model")->required();
  tg->add_option("--input", tg_input, "one sentence per line")->required();
  tg->add_option("--variant", tg_variant, "joint, conditional, joint-prev-word or joint-next-emission");
  tg->add_option("--out", tg_out, "word_tag output");
  tg->callback([&] {
    action = [&] {
      const auto variant = parse_tagger_variant(tg_variant);
      const auto params = with_file_context(tg_model, [&] {
        auto in = open_input(tg_model);
        return read_tagger(in);
      });
      TaggedCorpus c;
      for (auto& words : read_sentences(tg_input)) c.push_back({words, std::vector<std::string>(words.size())});
      const auto pred = tag_corpus(TaggerModel(params, variant), c, common.threads);
      std::ostringstream os;
      write_tagged(os, pred);
      write_file(out_path(common, tg_out), os.str());
    };
  });

  // train-sr
  auto* ts = app.add_subcommand("train-sr", "estimate a shift-reduce move model");
  std::string ts_train, ts_heldout, ts_flavor = "joint", ts_rules, ts_marker = "^", ts_out = "sr.model";
  int ts_cap = 16;
  bool ts_lexical = false;
  ts->add_option("--train", ts_train, "bracketed training trees")->required();
  ts->add_option("--heldout", ts_heldout, "heldout trees (conditional flavor)");
  ts->add_option("--flavor", ts_flavor, "joint or cond");
  ts->add_option("--head-rules", ts_rules, "head rule file for binarisation");
  ts->add_option("--marker", ts_marker, "binarisation label marker");
  ts->add_option("--bucket-cap", ts_cap, "largest weight bucket");
  ts->add_option("--out", ts_out, "model file");
  ts->add_flag("--lexical", ts_lexical, "keep words");
  ts->callback([&] {
    action = [&] {
      const Flavor flavor = parse_flavor(ts_flavor);
      const HeadRules rules = detail::load_head_rules(ts_rules);
      const BinarizeOptions bin{ts_marker};
      const Corpus train = binarize(gold_trees(ts_train, ts_lexical), rules, bin);
      MoveModel m;
      if (flavor == Flavor::Joint) {
        m = estimate_joint(train);
      } else {
        if (ts_heldout.empty()) throw ConfigError("the conditional flavor needs --heldout");
        m = estimate_conditional(train, binarize(gold_trees(ts_heldout, ts_lexical), rules, bin), {}, ts_cap).model;
      }
      std::ostringstream os;
      m.write(os);
      write_file(out_path(common, ts_out), os.str());
    };
  });

  // parse-sr
  auto* pr = app.add_subcommand("parse-sr", "beam-search parse with a move model");
  std::string pr_model, pr_input, pr_marker = "^", pr_out = "parses.txt";
  BeamConfig beam;
  bool no_filter = false;
  pr->add_option("--model", pr_model, "move model")->required();
  pr->add_option("--input", pr_input, "one sentence per line")->required();
  pr->add_option("--beam", beam.threshold, "prune below this ratio to the best same-prefix state");
  pr->add_option("--max-states", beam.max_states, "states expanded per prefix class");
  pr->add_flag("--no-observed-pair-filter", no_filter, "keep states whose top two labels were never seen");
  pr->add_option("--marker", pr_marker, "binarisation label marker");
  pr->add_option("--out", pr_out, "predictions file");
  pr->callback([&] {
    action = [&] {
      beam.require_observed_pairs = !no_filter;
      beam.validate();
      const MoveModel m = with_file_context(pr_model, [&] {
        auto in = open_input(pr_model);
        return MoveModel::read(in);
      });
      const auto r = parse_corpus(m, read_sentences(pr_input), beam, BinarizeOptions{pr_marker}, common.threads);
      write_file(out_path(common, pr_out), format_predictions(r.trees));
      std::cerr << r.failures << " of " << r.trees.size() << " sentences failed\n";
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "labelled bracket scores");
  std::string ev_gold, ev_pred;
  bool ev_lexical = false, ev_json = false;
  ev->add_option("--gold", ev_gold, "gold trees")->required();
  ev->add_option("--pred", ev_pred, "predictions (NOPARSE for failures)")->required();
  ev->add_flag("--lexical", ev_lexical, "keep words in the gold trees");
  ev->add_flag("--json", ev_json, "print JSON");
  ev->callback([&] {
    action = [&] { print_scores(score_corpus(gold_trees(ev_gold, ev_lexical), read_predictions(ev_pred)), ev_json); };
  });

  // bootstrap
  auto* bs = app.add_subcommand("bootstrap", "paired bootstrap test on the F-score difference");
  std::string bs_gold, bs_a, bs_b;
  std::size_t bs_iters = 10000;
  bool bs_lexical = false;
  bs->add_option("--gold", bs_gold, "gold trees")->required();
  bs->add_option("--pred-a", bs_a, "system A predictions")->required();
  bs->add_option("--pred-b", bs_b, "system B predictions")->required();
  bs->add_option("--iterations", bs_iters, "resamples")->check(CLI::PositiveNumber);
  bs->add_flag("--lexical", bs_lexical, "keep words in the gold trees");
  bs->callback([&] {
    action = [&] {
      const auto r = bootstrap_test(gold_trees(bs_gold, bs_lexical), read_predictions(bs_a), read_predictions(bs_b),
                                    bs_iters, common.seed, common.threads);
      std::cout << bootstrap_json(r).dump(2) << '\n';
    };
  });

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a configured pipeline");
  std::string ex_config;
  ex->add_option("config", ex_config, "config file")->required();
  ex->callback([&] {
    action = [&] {
      ExperimentConfig cfg = load_config(ex_config);
      if (common.seed_set) cfg.seed = common.seed;
      if (common.threads_set) cfg.threads = common.threads;
      if (common.output_dir_set) cfg.output_dir = common.output_dir;
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = run_pipeline(cfg);
      std::cout << r.table;
      std::cerr << to_string(cfg.pipeline) << " finished in "
                << fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 2) << " s; reports in "
                << cfg.output_dir.string() << '\n';
    };
  });

  // validate-config
  auto* vc = app.add_subcommand("validate-config", "list every problem in a config file");
  std::string vc_config;
  vc->add_option("config", vc_config, "config file")->required();
  vc->callback([&] {
    action = [&] {
      const auto errors = validate_config(vc_config);
      for (const auto& e : errors) std::cout << e << '\n';
      if (!errors.empty()) throw ConfigError(std::to_string(errors.size()) + " problem(s) in " + vc_config);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    action();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
