// Experiment configuration files: `[section]` headers and `key = value`
// lines, '#' comments. Relative paths resolve against the file's directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcle/common.hpp"
#include "mcle/hmm.hpp"
#include "mcle/pcfg_mcle.hpp"
#include "mcle/shiftreduce.hpp"

namespace mcle {

enum class Pipeline { PcfgMleVsMcle, HmmFourWay, SrJointVsCond };

inline const std::vector<std::pair<Pipeline, std::string>>& pipeline_names() {
  static const std::vector<std::pair<Pipeline, std::string>> names{{Pipeline::PcfgMleVsMcle, "pcfg-mle-vs-mcle"},
                                                                   {Pipeline::HmmFourWay, "hmm-four-way"},
                                                                   {Pipeline::SrJointVsCond, "sr-joint-vs-cond"}};
  return names;
}

inline std::string to_string(Pipeline p) {
  for (const auto& [v, n] : pipeline_names())
    if (v == p) return n;
  return "?";
}

inline Pipeline parse_pipeline(const std::string& s) {
  std::vector<std::string> choices;
  for (const auto& [v, n] : pipeline_names()) {
    if (n == s) return v;
    choices.push_back(n);
  }
  throw ConfigError("unknown pipeline '" + s + "' (choices: " + join(choices, ", ") + ")");
}

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::PcfgMleVsMcle;
  std::filesystem::path train, heldout, test, output_dir;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  AscentConfig ascent;
  std::size_t bootstrap_iterations = 10000;

  TaggerOptions tagger;

  std::filesystem::path head_rules;
  std::string binarize_marker = "^";
  std::vector<double> beam_thresholds{1e-6, 1e-9};
  bool observed_pair_filter = true;
  std::size_t max_states = 10000;
  int sr_bucket_cap = 16;
  EmOptions sr_em;
};

struct IniFile {
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, std::map<std::string, Entry>> sections;
};

/// Syntax problems are appended to `errors`; parsing continues past them.
inline IniFile parse_ini(const std::string& text, std::vector<std::string>& errors) {
  IniFile ini;
  std::istringstream in(text);
  std::string section;
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string_view line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        errors.push_back(where + "malformed section header");
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(where + "expected 'key = value'");
      continue;
    }
    if (section.empty()) {
      errors.push_back(where + "key outside any section");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    auto& sec = ini.sections[section];
    if (sec.count(key)) errors.push_back(where + "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = {std::string(trim(line.substr(eq + 1))), line_no};
  }
  return ini;
}

namespace detail {

// Reads typed values out of an IniFile, collecting every problem.
class ConfigReader {
 public:
  ConfigReader(const IniFile& ini, std::filesystem::path base, std::vector<std::string>& errors)
      : ini_(ini), base_(std::move(base)), errors_(errors) {}

  bool has_section(const std::string& s) const { return ini_.sections.count(s) > 0; }

  const IniFile::Entry* find(const std::string& s, const std::string& k) {
    used_[s].insert(k);
    auto sec = ini_.sections.find(s);
    if (sec == ini_.sections.end()) return nullptr;
    auto it = sec->second.find(k);
    return it == sec->second.end() ? nullptr : &it->second;
  }

  template <class T, class F>
  void read(const std::string& s, const std::string& k, T& out, F convert) {
    if (const auto* e = find(s, k)) {
      try {
        out = convert(e->value);
      } catch (const Error& ex) {
        fail(*e, s, k, ex.what());
      } catch (const std::exception&) {
        fail(*e, s, k, "invalid value '" + e->value + "'");
      }
    }
  }

  void number(const std::string& s, const std::string& k, double& out) {
    read(s, k, out, [&](const std::string& v) { return parse_double(v, k); });
  }

  template <class Int>
  void integer(const std::string& s, const std::string& k, Int& out) {
    read(s, k, out, [&](const std::string& v) {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size() || x < 0) throw ConfigError("expected a non-negative integer, got '" + v + "'");
      return static_cast<Int>(x);
    });
  }

  void boolean(const std::string& s, const std::string& k, bool& out) {
    read(s, k, out, [](const std::string& v) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      throw ConfigError("expected true or false, got '" + v + "'");
    });
  }

  /// Path that must name an existing file when `must_exist`.
  void path(const std::string& s, const std::string& k, std::filesystem::path& out, bool required, bool must_exist) {
    const auto* e = find(s, k);
    if (!e) {
      if (required) errors_.push_back("[" + s + "] " + k + ": required but missing");
      return;
    }
    std::filesystem::path p(e->value);
    if (p.is_relative()) p = base_ / p;
    out = p.lexically_normal();
    if (must_exist && !std::filesystem::is_regular_file(out))
      fail(*e, s, k, "file not found: " + out.string());
  }

  void fail(const IniFile::Entry& e, const std::string& s, const std::string& k, const std::string& what) {
    errors_.push_back("line " + std::to_string(e.line) + ": [" + s + "] " + k + ": " + what);
  }

  void report_unknown() {
    for (const auto& [s, keys] : ini_.sections) {
      if (!used_.count(s)) {
        errors_.push_back("unknown section [" + s + "]");
        continue;
      }
      for (const auto& [k, e] : keys)
        if (!used_[s].count(k)) fail(e, s, k, "unknown key");
    }
  }

  void touch_section(const std::string& s) { used_[s]; }

 private:
  const IniFile& ini_;
  std::filesystem::path base_;
  std::vector<std::string>& errors_;
  std::map<std::string, std::set<std::string>> used_;
};

}  // namespace detail

/// Interprets `text` as the contents of a config file living in `base_dir`.
/// Every problem found is listed in `errors`.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                                     std::vector<std::string>& errors) {
  ExperimentConfig cfg;
  const IniFile ini = parse_ini(text, errors);
  detail::ConfigReader r(ini, base_dir, errors);
  for (const auto* s : {"experiment", "pcfg", "eval", "hmm", "sr"}) r.touch_section(s);

  bool have_pipeline = false;
  if (const auto* e = r.find("experiment", "pipeline")) {
    try {
      cfg.pipeline = parse_pipeline(e->value);
      have_pipeline = true;
    } catch (const ConfigError& ex) {
      r.fail(*e, "experiment", "pipeline", ex.what());
    }
  } else {
    errors.push_back("[experiment] pipeline: required but missing");
  }
  const bool needs_heldout = cfg.pipeline != Pipeline::PcfgMleVsMcle;
  r.path("experiment", "train", cfg.train, true, true);
  r.path("experiment", "heldout", cfg.heldout, have_pipeline && needs_heldout, true);
  r.path("experiment", "test", cfg.test, true, true);
  cfg.output_dir = base_dir / "output";
  r.path("experiment", "output_dir", cfg.output_dir, false, false);
  r.integer("experiment", "seed", cfg.seed);
  r.integer("experiment", "threads", cfg.threads);

  r.integer("pcfg", "max_iters", cfg.ascent.max_iters);
  r.number("pcfg", "tol", cfg.ascent.tol);
  r.number("pcfg", "initial_step", cfg.ascent.initial_step);
  r.number("pcfg", "line_search_shrink", cfg.ascent.line_search_shrink);
  r.integer("pcfg", "max_shrinks", cfg.ascent.max_shrinks);
  r.integer("eval", "bootstrap_iterations", cfg.bootstrap_iterations);

  r.number("hmm", "unk_threshold", cfg.tagger.unk_threshold);
  r.integer("hmm", "bucket_cap", cfg.tagger.bucket_cap);
  r.integer("hmm", "em_max_iters", cfg.tagger.em.max_iters);
  r.number("hmm", "em_tol", cfg.tagger.em.tol);

  r.path("sr", "head_rules", cfg.head_rules, false, true);
  r.read("sr", "binarize_marker", cfg.binarize_marker, [](const std::string& v) {
    if (v.empty()) throw ConfigError("marker must not be empty");
    return v;
  });
  r.read("sr", "beam_thresholds", cfg.beam_thresholds, [](const std::string& v) {
    std::vector<double> out;
    for (const auto& f : split_ws(v)) out.push_back(parse_double(f, "beam threshold"));
    if (out.empty()) throw ConfigError("expected at least one threshold");
    return out;
  });
  r.boolean("sr", "observed_pair_filter", cfg.observed_pair_filter);
  r.integer("sr", "max_states", cfg.max_states);
  r.integer("sr", "bucket_cap", cfg.sr_bucket_cap);
  r.integer("sr", "em_max_iters", cfg.sr_em.max_iters);
  r.number("sr", "em_tol", cfg.sr_em.tol);
  r.report_unknown();

  if (have_pipeline) {
    static const std::map<Pipeline, std::string> section{
        {Pipeline::PcfgMleVsMcle, "pcfg"}, {Pipeline::HmmFourWay, "hmm"}, {Pipeline::SrJointVsCond, "sr"}};
    const auto& s = section.at(cfg.pipeline);
    if (!r.has_section(s)) errors.push_back("pipeline " + to_string(cfg.pipeline) + " needs a [" + s + "] section");
  }
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  };
  check([&] { cfg.ascent.validate(); });
  check([&] {
    for (double t : cfg.beam_thresholds) {
      BeamConfig b;
      b.threshold = t;
      b.max_states = cfg.max_states;
      b.validate();
    }
  });
  if (cfg.threads == 0) errors.push_back("[experiment] threads: must be at least 1");
  if (cfg.bootstrap_iterations == 0) errors.push_back("[eval] bootstrap_iterations: must be at least 1");
  if (cfg.tagger.bucket_cap < 0 || cfg.sr_bucket_cap < 0) errors.push_back("bucket_cap must be non-negative");
  return cfg;
}

inline std::string read_config_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// All problems with the config file at `path`; empty when it is valid.
/// Throws ConfigError if the file cannot be read.
inline std::vector<std::string> validate_config(const std::filesystem::path& path) {
  std::vector<std::string> errors;
  parse_config(read_config_text(path), path.parent_path(), errors);
  return errors;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::vector<std::string> errors;
  auto cfg = parse_config(read_config_text(path), path.parent_path(), errors);
  if (!errors.empty()) throw ConfigError(path.string() + ":\n  " + join(errors, "\n  "));
  return cfg;
}

}  // namespace mcle
