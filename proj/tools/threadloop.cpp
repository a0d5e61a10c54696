// threadloop: corpus analytics for threaded discussions.
//
// Stages write CSV/JSON artifacts plus a manifest (config echo, input and
// output content hashes). A stage whose manifest matches the current config
// and inputs is skipped unless --force is given, so reruns never rewrite
// bytes. Randomized analyses demand an explicit --seed.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "threadloop/analysis.hpp"
#include "threadloop/ingest.hpp"
#include "threadloop/pipeline.hpp"
#include "threadloop/report.hpp"
#include "threadloop/synth.hpp"
#include "vendor/CLI11.hpp"

namespace fs = std::filesystem;
using namespace threadloop;

namespace {

struct Global {
  bool force = false;
  unsigned workers = 0;
};

std::vector<std::string> expand_inputs(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    fs::path path(p);
    if (fs::is_directory(path)) {
      std::vector<fs::path> inside;
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file()) inside.push_back(entry.path());
      }
      std::sort(inside.begin(), inside.end());
      for (auto& f : inside) files.push_back(f.string());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

std::map<std::string, std::string> hash_inputs(const std::vector<std::string>& files) {
  std::map<std::string, std::string> hashes;
  for (const auto& f : files) {
    if (!fs::exists(f)) throw ConfigError("input does not exist: " + f);
    hashes[f] = hash_file(f);
  }
  return hashes;
}

std::map<std::string, std::string> hash_corpus_dirs(const std::vector<std::string>& dirs) {
  std::vector<std::string> files;
  for (const auto& d : dirs) {
    files.push_back((fs::path(d) / "corpus.jsonl").string());
    files.push_back((fs::path(d) / "manifest.json").string());
  }
  return hash_inputs(files);
}

// Stage boilerplate: returns false when the cache already covers this run.
bool stage_begin(const Global& g, const fs::path& out, const std::string& stage,
                 const nlohmann::json& config,
                 const std::map<std::string, std::string>& inputs) {
  if (!g.force && cache_valid(out, stage, config, inputs)) {
    std::cout << stage << ": cache hit, outputs unchanged: " << out.string() << "\n";
    return false;
  }
  return true;
}

std::string table_string(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream ss;
  writer(ss);
  return ss.str();
}

struct CorpusPair {
  Corpus agent, human;
  std::string agent_dir, human_dir;
};

// Two corpus directories, one per platform, order on the command line free.
CorpusPair load_pair(const std::vector<std::string>& inputs) {
  if (inputs.size() != 2) {
    throw ConfigError("paired analysis needs exactly two --input corpus directories");
  }
  Platform p0 = platform_of_dir(inputs[0]);
  Platform p1 = platform_of_dir(inputs[1]);
  if (p0 == p1) {
    throw ConfigError("paired analysis needs one agent_forum and one human_forum corpus");
  }
  CorpusPair pair;
  if (p0 == Platform::agent_forum) {
    pair.agent_dir = inputs[0];
    pair.human_dir = inputs[1];
  } else {
    pair.agent_dir = inputs[1];
    pair.human_dir = inputs[0];
  }
  pair.agent = load_corpus_dir(pair.agent_dir);
  pair.human = load_corpus_dir(pair.human_dir);
  return pair;
}

LexiconSet lexicons_for(const std::string& lexicon_file) {
  return lexicon_file.empty() ? builtin_lexicons() : load_lexicons(lexicon_file);
}

std::optional<std::pair<int, int>> parse_years(const std::string& years) {
  if (years.empty()) return std::nullopt;
  auto dash = years.find('-');
  try {
    if (dash == std::string::npos) {
      int y = std::stoi(years);
      return std::make_pair(y, y);
    }
    int y0 = std::stoi(years.substr(0, dash));
    int y1 = std::stoi(years.substr(dash + 1));
    if (y1 < y0) throw ConfigError("year range end precedes start: " + years);
    return std::make_pair(y0, y1);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse --years (want Y or Y0-Y1): " + years);
  }
}

RepairConfig repair_config_from(const std::string& mode, int k, double hours,
                                bool whole_corpus, LexiconVariant variant) {
  RepairConfig rc;
  if (mode == "direct") {
    rc.mode = RepairMode::direct;
  } else if (mode == "k") {
    rc.mode = RepairMode::k_window;
  } else if (mode == "time") {
    rc.mode = RepairMode::time_window;
  } else {
    throw ConfigError("unknown --repair-mode (want direct|k|time): " + mode);
  }
  rc.k = k;
  rc.hours = hours;
  rc.whole_corpus_window = whole_corpus;
  rc.lexicon_variant = variant;
  return rc;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string platform, out, years, format;
  std::uint64_t cap = 0;  // 0 = uncapped
};

int run_ingest(const Global& g, const IngestArgs& a) {
  Platform platform = parse_platform(a.platform);
  auto files = expand_inputs(a.inputs);
  nlohmann::json config{{"platform", platform_name(platform)},
                        {"cap", a.cap},
                        {"years", a.years},
                        {"format", a.format}};
  auto inputs = hash_inputs(files);
  if (!stage_begin(g, a.out, "ingest", config, inputs)) return 0;

  IngestOptions options;
  if (a.cap > 0) options.max_comments_cap = a.cap;
  options.year_range = parse_years(a.years);
  std::optional<IngestFormat> forced;
  if (a.format == "jsonl") forced = IngestFormat::jsonl;
  else if (a.format == "csv") forced = IngestFormat::csv;
  else if (!a.format.empty()) throw ConfigError("unknown --format: " + a.format);

  IngestReport report;
  Corpus corpus = ingest(files, platform, options, &report);

  StageWriter w(a.out, "ingest", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  std::ostringstream body;
  serialize_corpus(corpus, body);
  w.add("corpus.jsonl", body.str());
  w.add("ingest_report.json", report.to_json().dump(2) + "\n");
  w.finish();
  std::cout << "ingest: " << report.loaded << " comments, " << corpus.posts.size()
            << " posts, " << corpus.communities.size() << " communities -> "
            << a.out << "\n";
  return 0;
}

struct SelectArgs {
  std::string input, out;
  std::uint64_t min_nested = 750;
  double max_top5 = 0.5;
  std::vector<std::string> appendix;
};

int run_select(const Global& g, const SelectArgs& a) {
  nlohmann::json config{{"min_nested", a.min_nested},
                        {"max_top5", a.max_top5},
                        {"appendix", a.appendix}};
  auto inputs = hash_corpus_dirs({a.input});
  if (!stage_begin(g, a.out, "select", config, inputs)) return 0;

  Corpus corpus = load_corpus_dir(a.input);
  auto stats = select_communities(corpus, a.min_nested, a.max_top5,
                                  {a.appendix.begin(), a.appendix.end()});
  nlohmann::json selection{{"main", nlohmann::json::array()},
                           {"appendix", nlohmann::json::array()},
                           {"excluded", nlohmann::json::array()}};
  for (const auto& s : stats) selection[tier_name(s.tier)].push_back(s.community_id);

  StageWriter w(a.out, "select", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("communities.csv", table_string([&](std::ostream& os) {
          write_community_table(os, stats, corpus.platform);
        }));
  w.add("selection.json", selection.dump(2) + "\n");
  w.finish();
  std::cout << "select: " << selection["main"].size() << " main, "
            << selection["appendix"].size() << " appendix, "
            << selection["excluded"].size() << " excluded -> " << a.out << "\n";
  return 0;
}

struct HArgs {
  std::vector<std::string> inputs;
  std::string pairs_file, out, lexicon = "full", lexicon_file;
  std::string repair_mode = "direct";
  int k = 5;
  double hours = 24.0;
  bool whole_corpus = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t n_perm = 2000, n_boot = 2000;
  std::string baseline = "matched";
};

void require_seed(const HArgs& a) {
  if (!a.seed_set) throw ConfigError("randomized analysis requires an explicit --seed");
}

int run_h1(const Global& g, const HArgs& a) {
  nlohmann::json config{{"pairs", a.pairs_file}, {"n_perm", a.n_perm}};
  if (a.seed_set) config["seed"] = a.seed;
  auto inputs = hash_corpus_dirs(a.inputs);
  if (!a.pairs_file.empty()) inputs[a.pairs_file] = hash_file(a.pairs_file);
  if (!stage_begin(g, a.out, "h1", config, inputs)) return 0;

  StageWriter w(a.out, "h1", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  if (a.inputs.size() == 1) {
    Corpus corpus = load_corpus_dir(a.inputs[0]);
    std::ostringstream os;
    detail::emit_header(os, {"community", "comments", "nested", "nested_pct"});
    for (const auto& [name, info] : corpus.communities) {
      std::uint64_t nested = 0;
      for (CommentIdx c : info.comments) nested += corpus.parent[c] != kNoComment ||
                                                   corpus.at(c).has_parent;
      detail::emit(os,
                   {name, format_count(info.comments.size()), format_count(nested),
                    format_number(100.0 * nesting_rate(corpus, name))},
                   meta_none());
    }
    w.add("h1_rates.csv", os.str());
  } else {
    require_seed(a);
    if (a.pairs_file.empty()) throw ConfigError("paired h1 needs --pairs");
    CorpusPair pair = load_pair(a.inputs);
    auto pairs = load_pairs(a.pairs_file);
    H1Result result = h1_analysis(pair.agent, pair.human, pairs, a.seed, a.n_perm,
                                  g.workers);
    w.add("h1_rates.csv", table_string([&](std::ostream& os) {
            write_h1_table(os, result, a.seed);
          }));
    w.add("h1_inference.json", inference_to_json(result.inference).dump(2) + "\n");
  }
  w.finish();
  std::cout << "h1 -> " << a.out << "\n";
  return 0;
}

int run_h2(const Global& g, const HArgs& a) {
  LexiconVariant variant = parse_variant(a.lexicon);
  RepairConfig rc =
      repair_config_from(a.repair_mode, a.k, a.hours, a.whole_corpus, variant);
  nlohmann::json config{{"pairs", a.pairs_file},
                        {"lexicon", variant_name(variant)},
                        {"lexicon_file", a.lexicon_file},
                        {"repair_mode", a.repair_mode},
                        {"k", a.k},
                        {"hours", a.hours},
                        {"whole_corpus_window", a.whole_corpus},
                        {"n_perm", a.n_perm}};
  if (a.seed_set) config["seed"] = a.seed;
  auto inputs = hash_corpus_dirs(a.inputs);
  if (!a.pairs_file.empty()) inputs[a.pairs_file] = hash_file(a.pairs_file);
  if (!a.lexicon_file.empty()) inputs[a.lexicon_file] = hash_file(a.lexicon_file);
  if (!stage_begin(g, a.out, "h2", config, inputs)) return 0;

  LexiconSet lexicons = lexicons_for(a.lexicon_file);
  StageWriter w(a.out, "h2", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  if (a.inputs.size() == 1) {
    Corpus corpus = load_corpus_dir(a.inputs[0]);
    const CueScan scan = scan_corpus(corpus, lexicons, g.workers);
    const auto episodes =
        extract_challenges(corpus, scan.get(CueCategory::challenge, variant));
    const auto buckets = bucket_episodes(corpus, episodes);
    const auto& repair_flag = scan.get(CueCategory::repair, variant);
    AuthorIndex index;
    const AuthorIndex* index_ptr = nullptr;
    if (rc.whole_corpus_window) {
      index = build_author_index(corpus);
      index_ptr = &index;
    }
    std::ostringstream os;
    detail::emit_header(os, {"community", "episodes", "followup_pct", "any_reply_pct",
                             "repair_pct", "zero_repair_bound", "repair_mode"});
    std::string mode_label = repair_mode_name(rc.mode);
    for (const auto& [name, info] : corpus.communities) {
      static const std::vector<std::size_t> kEmpty;
      auto it = buckets.find(name);
      const auto& subset = it == buckets.end() ? kEmpty : it->second;
      auto flags = detail::episode_flags(corpus, episodes, subset, rc, repair_flag,
                                         index_ptr);
      H2Side side;
      detail::fill_side(side, flags);
      detail::emit(os,
                   {name, format_count(side.episodes), format_number(side.followup_pct),
                    format_number(side.any_reply_pct), format_number(side.repair_pct),
                    side.zero_repair_bound ? format_number(*side.zero_repair_bound)
                                           : std::string(),
                    mode_label},
                   meta_lexicon(variant));
    }
    w.add("h2_rates.csv", os.str());
  } else {
    require_seed(a);
    if (a.pairs_file.empty()) throw ConfigError("paired h2 needs --pairs");
    CorpusPair pair = load_pair(a.inputs);
    auto pairs = load_pairs(a.pairs_file);
    H2Result result = h2_analysis(pair.agent, pair.human, pairs, lexicons, variant, rc,
                                  a.seed, a.n_perm, g.workers);
    w.add("h2_rates.csv", table_string([&](std::ostream& os) {
            write_h2_table(os, result, a.seed);
          }));
    nlohmann::json inf{{"followup", inference_to_json(result.followup_inference)},
                       {"repair", inference_to_json(result.repair_inference)},
                       {"excluded_pairs", result.inference_excluded}};
    w.add("h2_inference.json", inf.dump(2) + "\n");
  }
  w.finish();
  std::cout << "h2 -> " << a.out << "\n";
  return 0;
}

int run_h3(const Global& g, const HArgs& a) {
  LexiconVariant variant = parse_variant(a.lexicon);
  bool matched;
  if (a.baseline == "matched") matched = true;
  else if (a.baseline == "sampled") matched = false;
  else throw ConfigError("unknown --baseline (want matched|sampled): " + a.baseline);
  require_seed(a);
  nlohmann::json config{{"pairs", a.pairs_file},
                        {"lexicon", variant_name(variant)},
                        {"lexicon_file", a.lexicon_file},
                        {"baseline", a.baseline},
                        {"n_boot", a.n_boot},
                        {"seed", a.seed}};
  auto inputs = hash_corpus_dirs(a.inputs);
  if (!a.pairs_file.empty()) inputs[a.pairs_file] = hash_file(a.pairs_file);
  if (!a.lexicon_file.empty()) inputs[a.lexicon_file] = hash_file(a.lexicon_file);
  if (!stage_begin(g, a.out, "h3", config, inputs)) return 0;

  LexiconSet lexicons = lexicons_for(a.lexicon_file);
  H3Options options;
  options.variant = variant;
  options.matched = matched;
  options.seed = a.seed;
  options.n_boot = a.n_boot;

  StageWriter w(a.out, "h3", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  if (a.inputs.size() == 1) {
    Corpus corpus = load_corpus_dir(a.inputs[0]);
    auto rows = h3_analysis(corpus, lexicons, options, {}, g.workers);
    w.add("h3_rates.csv", table_string([&](std::ostream& os) {
            write_h3_table(os, rows, a.seed, variant, matched);
          }));
  } else {
    if (a.pairs_file.empty()) throw ConfigError("paired h3 needs --pairs");
    CorpusPair pair = load_pair(a.inputs);
    auto pairs = load_pairs(a.pairs_file);
    validate_pairs(pairs, pair.agent, pair.human);
    std::vector<std::string> agent_communities, human_communities;
    for (const auto& p : pairs) {
      agent_communities.push_back(p.agent_community);
      human_communities.push_back(p.human_community);
    }
    auto agent_rows = h3_analysis(pair.agent, lexicons, options, agent_communities,
                                  g.workers);
    auto human_rows = h3_analysis(pair.human, lexicons, options, human_communities,
                                  g.workers);
    w.add("h3_agent.csv", table_string([&](std::ostream& os) {
            write_h3_table(os, agent_rows, a.seed, variant, matched);
          }));
    w.add("h3_human.csv", table_string([&](std::ostream& os) {
            write_h3_table(os, human_rows, a.seed, variant, matched);
          }));
  }
  w.finish();
  std::cout << "h3 -> " << a.out << "\n";
  return 0;
}

struct ShiftArgs {
  std::string input, out, lexicon = "full", lexicon_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t n_boot = 2000, n_perm = 2000;
  double placebo_q = 0.25;
  std::size_t min_pre = 4;
};

int run_authorshift(const Global& g, const ShiftArgs& a) {
  if (!a.seed_set) throw ConfigError("randomized analysis requires an explicit --seed");
  LexiconVariant variant = parse_variant(a.lexicon);
  nlohmann::json config{{"lexicon", variant_name(variant)},
                        {"lexicon_file", a.lexicon_file},
                        {"seed", a.seed},
                        {"n_boot", a.n_boot},
                        {"n_perm", a.n_perm},
                        {"placebo_q", a.placebo_q},
                        {"min_pre", a.min_pre}};
  auto inputs = hash_corpus_dirs({a.input});
  if (!a.lexicon_file.empty()) inputs[a.lexicon_file] = hash_file(a.lexicon_file);
  if (!stage_begin(g, a.out, "authorshift", config, inputs)) return 0;

  Corpus corpus = load_corpus_dir(a.input);
  AuthorShiftOptions options;
  options.seed = a.seed;
  options.n_boot = a.n_boot;
  options.n_perm = a.n_perm;
  options.placebo_quantile = a.placebo_q;
  options.min_pre = a.min_pre;
  options.variant = variant;
  auto result = authorshift_analysis(corpus, lexicons_for(a.lexicon_file), options,
                                     g.workers);

  StageWriter w(a.out, "authorshift", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("authorshift.csv", table_string([&](std::ostream& os) {
          write_shift_table(os, result.shifts, a.seed);
        }));
  w.add("authorshift_durability.csv", table_string([&](std::ostream& os) {
          write_durability_table(os, result.durability, a.seed);
        }));
  w.add("authorshift_placebo.csv", table_string([&](std::ostream& os) {
          write_shift_table(os, result.placebo, a.seed);
        }));
  w.add("authorshift_drift.csv", table_string([&](std::ostream& os) {
          write_drift_table(os, result.drift);
        }));
  nlohmann::json notes{{"skipped_communities", result.skipped}};
  w.add("authorshift.json", notes.dump(2) + "\n");
  w.finish();
  std::cout << "authorshift: " << result.shifts.size() << " estimates -> " << a.out
            << "\n";
  return 0;
}

struct RobustArgs {
  std::vector<std::string> inputs;
  std::string pairs_file, out, lexicon_file;
  std::string repair_mode = "direct";
  int k = 5;
  double hours = 24.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t n_perm = 2000;
  std::vector<std::uint64_t> caps;
};

int run_robust_cues(const Global& g, const RobustArgs& a) {
  if (!a.seed_set) throw ConfigError("randomized analysis requires an explicit --seed");
  nlohmann::json config{{"pairs", a.pairs_file},
                        {"lexicon_file", a.lexicon_file},
                        {"repair_mode", a.repair_mode},
                        {"k", a.k},
                        {"hours", a.hours},
                        {"seed", a.seed},
                        {"n_perm", a.n_perm}};
  auto inputs = hash_corpus_dirs(a.inputs);
  inputs[a.pairs_file] = hash_file(a.pairs_file);
  if (!a.lexicon_file.empty()) inputs[a.lexicon_file] = hash_file(a.lexicon_file);
  if (!stage_begin(g, a.out, "robustness-cues", config, inputs)) return 0;

  CorpusPair pair = load_pair(a.inputs);
  auto pairs = load_pairs(a.pairs_file);
  LexiconSet lexicons = lexicons_for(a.lexicon_file);
  StageWriter w(a.out, "robustness-cues", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  nlohmann::json inf;
  for (LexiconVariant variant : {LexiconVariant::full, LexiconVariant::strict}) {
    RepairConfig rc = repair_config_from(a.repair_mode, a.k, a.hours, false, variant);
    H2Result result = h2_analysis(pair.agent, pair.human, pairs, lexicons, variant, rc,
                                  a.seed, a.n_perm, g.workers);
    std::string name = std::string("h2_rates_") + variant_name(variant) + ".csv";
    w.add(name, table_string([&](std::ostream& os) {
            write_h2_table(os, result, a.seed);
          }));
    inf[variant_name(variant)] = {
        {"followup", inference_to_json(result.followup_inference)},
        {"repair", inference_to_json(result.repair_inference)},
        {"excluded_pairs", result.inference_excluded}};
  }
  w.add("cues_inference.json", inf.dump(2) + "\n");
  w.finish();
  std::cout << "robustness cues -> " << a.out << "\n";
  return 0;
}

int run_robust_cap(const Global& g, const RobustArgs& a) {
  if (a.caps.empty()) throw ConfigError("cap sweep needs at least one --cap");
  nlohmann::json config{{"pairs", a.pairs_file},
                        {"caps", a.caps},
                        {"repair_mode", a.repair_mode},
                        {"k", a.k},
                        {"hours", a.hours}};
  auto inputs = hash_corpus_dirs(a.inputs);
  inputs[a.pairs_file] = hash_file(a.pairs_file);
  if (!stage_begin(g, a.out, "robustness-cap", config, inputs)) return 0;

  CorpusPair pair = load_pair(a.inputs);
  auto pairs = load_pairs(a.pairs_file);
  LexiconSet lexicons = builtin_lexicons();
  std::ostringstream os;
  detail::emit_header(os, {"cap", "pair_id", "agent_nested_pct", "human_nested_pct",
                           "h1_gap_pp", "agent_episodes", "human_episodes",
                           "followup_gap_pp", "repair_gap_pp"});
  for (std::uint64_t cap : a.caps) {
    Corpus agent = cap_corpus(pair.agent, cap);
    Corpus human = cap_corpus(pair.human, cap);
    auto labels = pair_labels(pairs);
    RepairConfig rc = repair_config_from(a.repair_mode, a.k, a.hours, false,
                                         LexiconVariant::full);
    // Rates only; the sweep reports stability, not inference.
    const CueScan ascan = scan_corpus(agent, lexicons, g.workers);
    const CueScan hscan = scan_corpus(human, lexicons, g.workers);
    const auto aeps =
        extract_challenges(agent, ascan.get(CueCategory::challenge, LexiconVariant::full));
    const auto heps =
        extract_challenges(human, hscan.get(CueCategory::challenge, LexiconVariant::full));
    const auto abuckets = bucket_episodes(agent, aeps);
    const auto hbuckets = bucket_episodes(human, heps);
    static const std::vector<std::size_t> kEmpty;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      double apct = 100.0 * nesting_rate(agent, pairs[i].agent_community);
      double hpct = 100.0 * nesting_rate(human, pairs[i].human_community);
      auto ait = abuckets.find(pairs[i].agent_community);
      auto hit = hbuckets.find(pairs[i].human_community);
      auto aflags = detail::episode_flags(
          agent, aeps, ait == abuckets.end() ? kEmpty : ait->second, rc,
          ascan.get(CueCategory::repair, LexiconVariant::full), nullptr);
      auto hflags = detail::episode_flags(
          human, heps, hit == hbuckets.end() ? kEmpty : hit->second, rc,
          hscan.get(CueCategory::repair, LexiconVariant::full), nullptr);
      H2Side aside, hside;
      detail::fill_side(aside, aflags);
      detail::fill_side(hside, hflags);
      detail::emit(os,
                   {format_count(cap), labels[i], format_number(apct),
                    format_number(hpct), format_number(hpct - apct),
                    format_count(aside.episodes), format_count(hside.episodes),
                    format_number(hside.followup_pct - aside.followup_pct),
                    format_number(hside.repair_pct - aside.repair_pct)},
                   meta_none());
    }
  }
  StageWriter w(a.out, "robustness-cap", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("cap_sweep.csv", os.str());
  w.finish();
  std::cout << "robustness cap -> " << a.out << "\n";
  return 0;
}

int run_robust_loo(const Global& g, const std::string& input, const std::string& out) {
  nlohmann::json config{{"table", input}};
  auto inputs = hash_inputs({input});
  if (!stage_begin(g, out, "robustness-loo", config, inputs)) return 0;
  PairTable table = PairTable::load_csv(input);
  auto rows = leave_one_pair_out(table);
  StageWriter w(out, "robustness-loo", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("loo.csv", table_string([&](std::ostream& os) { write_loo_table(os, rows); }));
  w.finish();
  std::cout << "robustness loo -> " << out << "\n";
  return 0;
}

int run_robust_windows(const Global& g, const RobustArgs& a) {
  nlohmann::json config{{"pairs", a.pairs_file}, {"lexicon_file", a.lexicon_file}};
  auto inputs = hash_corpus_dirs(a.inputs);
  inputs[a.pairs_file] = hash_file(a.pairs_file);
  if (!a.lexicon_file.empty()) inputs[a.lexicon_file] = hash_file(a.lexicon_file);
  if (!stage_begin(g, a.out, "robustness-windows", config, inputs)) return 0;
  CorpusPair pair = load_pair(a.inputs);
  auto pairs = load_pairs(a.pairs_file);
  auto rows = windows_analysis(pair.agent, pair.human, pairs,
                               lexicons_for(a.lexicon_file), g.workers);
  StageWriter w(a.out, "robustness-windows", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("windows.csv",
        table_string([&](std::ostream& os) { write_windows_table(os, rows); }));
  w.finish();
  std::cout << "robustness windows -> " << a.out << "\n";
  return 0;
}

int run_robust_heterogeneity(const Global& g, const std::string& input,
                             const std::string& out) {
  nlohmann::json config{{"table", input}};
  auto inputs = hash_inputs({input});
  if (!stage_begin(g, out, "robustness-heterogeneity", config, inputs)) return 0;
  PairTable table = PairTable::load_csv(input);
  auto rows = heterogeneity(table);
  StageWriter w(out, "robustness-heterogeneity", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("heterogeneity.csv",
        table_string([&](std::ostream& os) { write_heterogeneity_table(os, rows); }));
  w.finish();
  std::cout << "robustness heterogeneity -> " << out << "\n";
  return 0;
}

int run_probe(const Global& g, const std::string& input, const std::string& out,
              const std::string& lexicon_file) {
  nlohmann::json config{{"input", input}, {"lexicon_file", lexicon_file}};
  auto inputs = hash_inputs({input});
  if (!lexicon_file.empty()) inputs[lexicon_file] = hash_file(lexicon_file);
  if (!stage_begin(g, out, "probe-analyze", config, inputs)) return 0;

  std::vector<ProbeEntry> entries;
  std::istringstream in(read_file(input));
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("episode_id") || !j.contains("condition") ||
        !j.contains("response") || !j["response"].is_string()) {
      throw DataError("bad probe row at line " + std::to_string(lineno));
    }
    ProbeEntry e;
    e.episode_id = j["episode_id"].get<std::string>();
    std::string cond = j["condition"].get<std::string>();
    if (cond == "visible") e.visible = true;
    else if (cond == "hidden") e.visible = false;
    else throw DataError("bad probe condition at line " + std::to_string(lineno));
    e.response = j["response"].get<std::string>();
    entries.push_back(std::move(e));
  }
  ProbeResult result = probe_analysis(entries, lexicons_for(lexicon_file));

  StageWriter w(out, "probe-analyze", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  w.add("probe.csv",
        table_string([&](std::ostream& os) { write_probe_table(os, result); }));
  nlohmann::json j{{"n_pairs", result.n_pairs},
                   {"visible_full_pct", result.visible_full_pct},
                   {"hidden_full_pct", result.hidden_full_pct},
                   {"gap_full_pp", result.gap_full_pp},
                   {"visible_strict_pct", result.visible_strict_pct},
                   {"hidden_strict_pct", result.hidden_strict_pct},
                   {"gap_strict_pp", result.gap_strict_pp},
                   {"discordant_full", {result.b_full, result.c_full}},
                   {"discordant_strict", {result.b_strict, result.c_strict}}};
  if (result.p_full) j["mcnemar_full_p"] = *result.p_full;
  if (result.p_strict) j["mcnemar_strict_p"] = *result.p_strict;
  w.add("probe.json", j.dump(2) + "\n");
  w.finish();
  std::cout << "probe-analyze: " << result.n_pairs << " pairs -> " << out << "\n";
  return 0;
}

struct SynthArgs {
  std::string out, platform = "agent_forum";
  std::uint64_t seed = 0;
  bool seed_set = false;
  SynthConfig config;
};

int run_synth(const Global& g, SynthArgs& a) {
  if (!a.seed_set) throw ConfigError("randomized analysis requires an explicit --seed");
  a.config.seed = a.seed;
  a.config.platform = parse_platform(a.platform);
  a.config.validate();
  nlohmann::json config{{"seed", a.config.seed},
                        {"n_posts", a.config.n_posts},
                        {"fixed_comments", a.config.fixed_comments},
                        {"comments_per_post", a.config.comments_per_post},
                        {"p_nest", a.config.p_nest},
                        {"p_challenge", a.config.p_challenge},
                        {"p_followup", a.config.p_followup},
                        {"p_repair", a.config.p_repair},
                        {"p_hedge", a.config.p_hedge},
                        {"n_authors", a.config.n_authors},
                        {"author_skew", a.config.author_skew},
                        {"time_span_days", a.config.time_span_days},
                        {"n_communities", a.config.n_communities},
                        {"platform", platform_name(a.config.platform)}};
  if (!stage_begin(g, a.out, "synth", config, {})) return 0;

  SynthResult result = generate(a.config);
  StageWriter w(a.out, "synth", config);
  std::ostringstream body;
  serialize_corpus(result.corpus, body);
  w.add("corpus.jsonl", body.str());
  w.add("truth.json", result.truth.to_json().dump(2) + "\n");
  w.finish();
  std::cout << "synth: " << result.corpus.size() << " comments, "
            << result.truth.episodes.size() << " challenge episodes -> " << a.out
            << "\n";
  return 0;
}

int run_verify(const Global&, const std::string& input, const std::string& out) {
  Corpus corpus = load_corpus_dir(input);
  GroundTruth truth = GroundTruth::from_json(
      nlohmann::json::parse(read_file(fs::path(input) / "truth.json")));
  VerifyResult result = verify_against_truth(corpus, builtin_lexicons(), truth);
  nlohmann::json j{{"pass", result.pass},
                   {"checks", result.checks},
                   {"first_divergence", result.first_divergence}};
  if (!out.empty()) {
    nlohmann::json config{{"input", input}};
    StageWriter w(out, "verify", config);
    w.add("verify.json", j.dump(2) + "\n");
    w.finish();
  }
  if (result.pass) {
    std::cout << "verify: PASS (" << result.checks << " checks)\n";
    return 0;
  }
  std::cout << "verify: FAIL after " << result.checks
            << " checks: " << result.first_divergence << "\n";
  throw InvariantError("analysis output diverges from generation ground truth");
}

struct ReportArgs {
  std::string input, out;
};

int run_report(const Global& g, const ReportArgs& a) {
  nlohmann::json config{{"input", a.input}};
  std::map<std::string, std::string> inputs;
  std::vector<std::pair<std::string, std::string>> found;  // output name, content
  fs::path in(a.input);
  auto consider = [&](const fs::path& src, const std::string& as) {
    if (!fs::exists(src)) return false;
    inputs[src.string()] = hash_file(src);
    found.push_back({as, read_file(src)});
    return true;
  };
  std::optional<std::string> pair_table_path;
  if (fs::is_directory(in)) {
    if (fs::exists(in / "pair_table.csv")) pair_table_path = (in / "pair_table.csv").string();
    consider(in / "windows.csv", "repair_windows.csv");
    consider(in / "h3_human.csv", "correction_rates.csv");
    consider(in / "h3_rates.csv", "correction_rates.csv");
    consider(in / "authorshift.csv", "author_shift.csv");
    consider(in / "authorshift_durability.csv", "author_shift_durability.csv");
    consider(in / "authorshift_placebo.csv", "author_shift_placebo.csv");
    consider(in / "authorshift_drift.csv", "author_shift_drift.csv");
  } else {
    pair_table_path = a.input;
  }
  if (pair_table_path) inputs[*pair_table_path] = hash_file(*pair_table_path);
  if (!pair_table_path && found.empty()) {
    throw ConfigError("report found nothing to assemble under " + a.input);
  }
  if (!stage_begin(g, a.out, "report", config, inputs)) return 0;

  StageWriter w(a.out, "report", config);
  for (const auto& [path, hash] : inputs) w.add_input(path);
  if (pair_table_path) {
    PairTable table = PairTable::load_csv(*pair_table_path);
    w.add("pair_metrics.csv",
          table_string([&](std::ostream& os) { write_pair_table(os, table); }));
    w.add("leave_one_out.csv", table_string([&](std::ostream& os) {
            write_loo_table(os, leave_one_pair_out(table));
          }));
    w.add("heterogeneity.csv", table_string([&](std::ostream& os) {
            write_heterogeneity_table(os, heterogeneity(table));
          }));
  }
  for (const auto& [name, content] : found) w.add(name, content);
  w.finish();
  std::cout << "report -> " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threadloop: threading, challenge/repair, and correction-loop analytics"};
  app.require_subcommand(1);
  Global g;
  app.add_flag("--force", g.force, "rerun even when cached outputs match")
      ->envname("THREADLOOP_FORCE");
  app.add_option("--workers", g.workers, "worker threads (0 = hardware)")
      ->envname("THREADLOOP_WORKERS");

  IngestArgs ingest_args;
  auto* cmd_ingest = app.add_subcommand("ingest", "load raw JSONL/CSV into a corpus");
  cmd_ingest->add_option("--input", ingest_args.inputs, "input files or directories")
      ->required()
      ->envname("THREADLOOP_INPUT");
  cmd_ingest->add_option("--platform", ingest_args.platform, "agent_forum|human_forum")
      ->required()
      ->envname("THREADLOOP_PLATFORM");
  cmd_ingest->add_option("--out", ingest_args.out, "output directory")
      ->required()
      ->envname("THREADLOOP_OUT");
  cmd_ingest->add_option("--cap", ingest_args.cap, "per-community comment cap")
      ->envname("THREADLOOP_CAP");
  cmd_ingest->add_option("--years", ingest_args.years, "UTC year filter: Y or Y0-Y1")
      ->envname("THREADLOOP_YEARS");
  cmd_ingest->add_option("--format", ingest_args.format, "force jsonl|csv");

  SelectArgs select_args;
  auto* cmd_select = app.add_subcommand("select", "community eligibility and tiers");
  cmd_select->add_option("--input", select_args.input, "corpus directory")->required();
  cmd_select->add_option("--out", select_args.out, "output directory")->required();
  cmd_select->add_option("--min-nested", select_args.min_nested,
                         "eligibility floor on nested comments");
  cmd_select->add_option("--max-top5", select_args.max_top5,
                         "eligibility ceiling on top-5 author share");
  cmd_select->add_option("--appendix", select_args.appendix,
                         "force communities into the appendix tier");

  auto add_h_common = [](CLI::App* cmd, HArgs& args, bool lexicon_flags) {
    cmd->add_option("--input", args.inputs, "corpus directory (once or twice)")
        ->required();
    cmd->add_option("--pairs", args.pairs_file, "matched pairs JSON");
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--seed", args.seed, "RNG seed (required when randomized)")
        ->envname("THREADLOOP_SEED")
        ->each([&args](const std::string&) { args.seed_set = true; });
    if (lexicon_flags) {
      cmd->add_option("--lexicon", args.lexicon, "full|strict");
      cmd->add_option("--lexicon-file", args.lexicon_file, "cue lexicon override JSON");
    }
  };

  HArgs h1_args;
  auto* cmd_h1 = app.add_subcommand("h1", "structural threading rates");
  add_h_common(cmd_h1, h1_args, false);
  cmd_h1->add_option("--n-perm", h1_args.n_perm, "permutation count");

  HArgs h2_args;
  auto* cmd_h2 = app.add_subcommand("h2", "challenge and repair rates");
  add_h_common(cmd_h2, h2_args, true);
  cmd_h2->add_option("--repair-mode", h2_args.repair_mode, "direct|k|time");
  cmd_h2->add_option("--k", h2_args.k, "k-window size");
  cmd_h2->add_option("--hours", h2_args.hours, "time-window horizon");
  cmd_h2->add_flag("--whole-corpus-window", h2_args.whole_corpus,
                   "time window beyond the challenged post");
  cmd_h2->add_option("--n-perm", h2_args.n_perm, "permutation count");

  HArgs h3_args;
  auto* cmd_h3 = app.add_subcommand("h3", "public correction loops vs baselines");
  add_h_common(cmd_h3, h3_args, true);
  cmd_h3->add_option("--baseline", h3_args.baseline, "matched|sampled");
  cmd_h3->add_option("--n-boot", h3_args.n_boot, "bootstrap resamples")
      ->envname("THREADLOOP_N_BOOT");

  ShiftArgs shift_args;
  auto* cmd_shift = app.add_subcommand("authorshift", "author pre/post shift estimates");
  cmd_shift->add_option("--input", shift_args.input, "corpus directory")->required();
  cmd_shift->add_option("--out", shift_args.out, "output directory")->required();
  cmd_shift->add_option("--seed", shift_args.seed, "RNG seed")
      ->envname("THREADLOOP_SEED")
      ->each([&shift_args](const std::string&) { shift_args.seed_set = true; });
  cmd_shift->add_option("--lexicon", shift_args.lexicon, "full|strict");
  cmd_shift->add_option("--lexicon-file", shift_args.lexicon_file, "lexicon override");
  cmd_shift->add_option("--n-boot", shift_args.n_boot, "bootstrap resamples");
  cmd_shift->add_option("--n-perm", shift_args.n_perm, "sign-flip resamples");
  cmd_shift->add_option("--placebo-q", shift_args.placebo_q, "placebo split quantile");
  cmd_shift->add_option("--min-pre", shift_args.min_pre, "minimum pre-event comments");

  auto* cmd_robust = app.add_subcommand("robustness", "sensitivity suites");
  cmd_robust->require_subcommand(1);
  RobustArgs cues_args;
  auto* cmd_cues = cmd_robust->add_subcommand("cues", "full vs strict lexicons");
  cmd_cues->add_option("--input", cues_args.inputs, "two corpus directories")->required();
  cmd_cues->add_option("--pairs", cues_args.pairs_file, "matched pairs JSON")->required();
  cmd_cues->add_option("--out", cues_args.out, "output directory")->required();
  cmd_cues->add_option("--seed", cues_args.seed, "RNG seed")
      ->envname("THREADLOOP_SEED")
      ->each([&cues_args](const std::string&) { cues_args.seed_set = true; });
  cmd_cues->add_option("--lexicon-file", cues_args.lexicon_file, "lexicon override");
  cmd_cues->add_option("--repair-mode", cues_args.repair_mode, "direct|k|time");
  cmd_cues->add_option("--k", cues_args.k, "k-window size");
  cmd_cues->add_option("--hours", cues_args.hours, "time-window horizon");
  cmd_cues->add_option("--n-perm", cues_args.n_perm, "permutation count");

  RobustArgs cap_args;
  auto* cmd_cap = cmd_robust->add_subcommand("cap", "per-community cap sweep");
  cmd_cap->add_option("--input", cap_args.inputs, "two corpus directories")->required();
  cmd_cap->add_option("--pairs", cap_args.pairs_file, "matched pairs JSON")->required();
  cmd_cap->add_option("--out", cap_args.out, "output directory")->required();
  cmd_cap->add_option("--cap", cap_args.caps, "cap values to sweep")->required();
  cmd_cap->add_option("--repair-mode", cap_args.repair_mode, "direct|k|time");
  cmd_cap->add_option("--k", cap_args.k, "k-window size");
  cmd_cap->add_option("--hours", cap_args.hours, "time-window horizon");

  std::string loo_input, loo_out;
  auto* cmd_loo = cmd_robust->add_subcommand("loo", "leave-one-pair-out gaps");
  cmd_loo->add_option("--input", loo_input, "pair-table CSV")->required();
  cmd_loo->add_option("--out", loo_out, "output directory")->required();

  RobustArgs windows_args;
  auto* cmd_windows = cmd_robust->add_subcommand("windows", "repair window sweep");
  cmd_windows->add_option("--input", windows_args.inputs, "two corpus directories")
      ->required();
  cmd_windows->add_option("--pairs", windows_args.pairs_file, "matched pairs JSON")
      ->required();
  cmd_windows->add_option("--out", windows_args.out, "output directory")->required();
  cmd_windows->add_option("--lexicon-file", windows_args.lexicon_file,
                          "lexicon override");

  std::string het_input, het_out;
  auto* cmd_het = cmd_robust->add_subcommand("heterogeneity", "per-pair extremes");
  cmd_het->add_option("--input", het_input, "pair-table CSV")->required();
  cmd_het->add_option("--out", het_out, "output directory")->required();

  std::string probe_input, probe_out, probe_lexicon_file;
  auto* cmd_probe = app.add_subcommand("probe-analyze",
                                       "visible vs hidden probe transcripts");
  cmd_probe->add_option("--input", probe_input, "probe transcripts JSONL")->required();
  cmd_probe->add_option("--out", probe_out, "output directory")->required();
  cmd_probe->add_option("--lexicon-file", probe_lexicon_file, "lexicon override");

  SynthArgs synth_args;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic corpus + truth");
  cmd_synth->add_option("--out", synth_args.out, "output directory")->required();
  cmd_synth->add_option("--seed", synth_args.seed, "RNG seed")
      ->envname("THREADLOOP_SEED")
      ->each([&synth_args](const std::string&) { synth_args.seed_set = true; });
  cmd_synth->add_option("--n-posts", synth_args.config.n_posts, "posts to generate");
  cmd_synth->add_flag("--fixed-comments", synth_args.config.fixed_comments,
                      "fixed comments per post instead of geometric");
  cmd_synth->add_option("--comments-mean", synth_args.config.comments_per_post,
                        "mean comments per post");
  cmd_synth->add_option("--p-nest", synth_args.config.p_nest, "nested reply probability");
  cmd_synth->add_option("--p-challenge", synth_args.config.p_challenge,
                        "challenge cue probability on nested comments");
  cmd_synth->add_option("--p-followup", synth_args.config.p_followup,
                        "challenged-author direct reply probability");
  cmd_synth->add_option("--p-repair", synth_args.config.p_repair,
                        "repair cue probability on followups");
  cmd_synth->add_option("--p-hedge", synth_args.config.p_hedge,
                        "hedging cue probability on any body");
  cmd_synth->add_option("--n-authors", synth_args.config.n_authors, "author pool size");
  cmd_synth->add_option("--author-skew", synth_args.config.author_skew,
                        "author volume skew exponent");
  cmd_synth->add_option("--span-days", synth_args.config.time_span_days,
                        "post timestamp span in days");
  cmd_synth->add_option("--n-communities", synth_args.config.n_communities,
                        "communities to spread posts over");
  cmd_synth->add_option("--platform", synth_args.platform, "platform tag");

  std::string verify_input, verify_out;
  auto* cmd_verify = app.add_subcommand("verify", "replay analyses against stored truth");
  cmd_verify->add_option("--input", verify_input, "synth output directory")->required();
  cmd_verify->add_option("--out", verify_out, "optional output directory");

  ReportArgs report_args;
  auto* cmd_report = app.add_subcommand("report", "assemble table-shaped CSVs");
  cmd_report->add_option("--input", report_args.input,
                         "stage output directory or pair-table CSV")
      ->required();
  cmd_report->add_option("--out", report_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (*cmd_ingest) return run_ingest(g, ingest_args);
    if (*cmd_select) return run_select(g, select_args);
    if (*cmd_h1) return run_h1(g, h1_args);
    if (*cmd_h2) return run_h2(g, h2_args);
    if (*cmd_h3) return run_h3(g, h3_args);
    if (*cmd_shift) return run_authorshift(g, shift_args);
    if (*cmd_cues) return run_robust_cues(g, cues_args);
    if (*cmd_cap) return run_robust_cap(g, cap_args);
    if (*cmd_loo) return run_robust_loo(g, loo_input, loo_out);
    if (*cmd_windows) return run_robust_windows(g, windows_args);
    if (*cmd_het) return run_robust_heterogeneity(g, het_input, het_out);
    if (*cmd_probe) return run_probe(g, probe_input, probe_out, probe_lexicon_file);
    if (*cmd_synth) return run_synth(g, synth_args);
    if (*cmd_verify) return run_verify(g, verify_input, verify_out);
    if (*cmd_report) return run_report(g, report_args);
    throw ConfigError("no subcommand selected");
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  }
}
