#pragma once

// Analysis drivers shared by the command-line tool and the test binaries.
// Everything here is deterministic given the corpus content and the seed.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "threadloop/authorshift.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/correction.hpp"
#include "threadloop/episodes.hpp"
#include "threadloop/lexicon.hpp"
#include "threadloop/stats.hpp"
#include "threadloop/structure.hpp"

namespace threadloop {

// Tables are keyed by the human-side community; duplicates get a positional
// suffix so pair ids stay unique.
inline std::vector<std::string> pair_labels(const std::vector<MatchedPair>& pairs) {
  std::map<std::string, int> seen;
  std::vector<std::string> labels;
  for (const auto& p : pairs) {
    int n = seen[p.human_community]++;
    labels.push_back(n == 0 ? p.human_community
                            : p.human_community + "#" + std::to_string(n + 1));
  }
  return labels;
}

inline std::map<std::string, std::vector<std::size_t>> bucket_episodes(
    const Corpus& corpus, const std::vector<ChallengeEpisode>& episodes) {
  std::map<std::string, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    buckets[corpus.at(episodes[i].challenge).community].push_back(i);
  }
  return buckets;
}

// ---------------------------------------------------------------------------
// Structural threading comparison.

struct H1PairRow {
  std::string pair_id;
  std::string agent_community, human_community;
  std::uint64_t agent_comments = 0, agent_nested = 0;
  std::uint64_t human_comments = 0, human_nested = 0;
  double agent_pct = 0.0, human_pct = 0.0;
  double gap_pp = 0.0;  // human - agent
};

struct H1Result {
  std::vector<H1PairRow> rows;
  InferenceResult inference;  // pooled nested-rate difference
};

inline H1Result h1_analysis(const Corpus& agent, const Corpus& human,
                            const std::vector<MatchedPair>& pairs, std::uint64_t seed,
                            std::uint64_t n_perm, unsigned workers = 0) {
  validate_pairs(pairs, agent, human);
  auto labels = pair_labels(pairs);
  H1Result result;
  std::vector<PairOutcomes> outcomes;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    H1PairRow row;
    row.pair_id = labels[i];
    row.agent_community = pairs[i].agent_community;
    row.human_community = pairs[i].human_community;
    PairOutcomes po;
    po.pair_id = labels[i];
    for (CommentIdx c : agent.community(row.agent_community).comments) {
      bool nested = agent.parent[c] != kNoComment || agent.at(c).has_parent;
      po.agent.push_back(nested ? 1 : 0);
      ++row.agent_comments;
      row.agent_nested += nested ? 1 : 0;
    }
    for (CommentIdx c : human.community(row.human_community).comments) {
      bool nested = human.parent[c] != kNoComment || human.at(c).has_parent;
      po.human.push_back(nested ? 1 : 0);
      ++row.human_comments;
      row.human_nested += nested ? 1 : 0;
    }
    row.agent_pct = row.agent_comments == 0
                        ? 0.0
                        : 100.0 * static_cast<double>(row.agent_nested) /
                              static_cast<double>(row.agent_comments);
    row.human_pct = row.human_comments == 0
                        ? 0.0
                        : 100.0 * static_cast<double>(row.human_nested) /
                              static_cast<double>(row.human_comments);
    row.gap_pp = row.human_pct - row.agent_pct;
    result.rows.push_back(std::move(row));
    outcomes.push_back(std::move(po));
  }
  result.inference = permutation_test_stratified(outcomes, n_perm, seed, workers);
  return result;
}

// ---------------------------------------------------------------------------
// Challenge and repair rates.

struct H2Side {
  std::uint64_t episodes = 0, followups = 0, any_replies = 0, repairs = 0;
  double followup_pct = 0.0, any_reply_pct = 0.0, repair_pct = 0.0;
  std::optional<double> zero_repair_bound;  // rule-of-three when repairs == 0
};

struct H2PairRow {
  std::string pair_id;
  H2Side agent, human;
  double followup_gap_pp = 0.0, repair_gap_pp = 0.0;
};

struct H2Result {
  std::vector<H2PairRow> rows;
  InferenceResult followup_inference, repair_inference;
  std::vector<std::string> inference_excluded;  // pairs with an empty stratum
  LexiconVariant variant = LexiconVariant::full;
  RepairConfig repair_config;
};

namespace detail {

struct EpisodeFlags {
  std::vector<char> followup, any_reply, repair;
};

inline EpisodeFlags episode_flags(const Corpus& corpus,
                                  const std::vector<ChallengeEpisode>& episodes,
                                  const std::vector<std::size_t>& subset,
                                  const RepairConfig& config,
                                  const std::vector<char>& repair_flag,
                                  const AuthorIndex* author_index) {
  EpisodeFlags out;
  for (std::size_t idx : subset) {
    const ChallengeEpisode& ep = episodes[idx];
    out.followup.push_back(followup(corpus, ep) ? 1 : 0);
    out.any_reply.push_back(any_reply(corpus, ep) ? 1 : 0);
    out.repair.push_back(repair(corpus, ep, config, repair_flag, author_index) ? 1 : 0);
  }
  return out;
}

inline void fill_side(H2Side& side, const EpisodeFlags& flags) {
  side.episodes = flags.followup.size();
  for (char f : flags.followup) side.followups += f ? 1 : 0;
  for (char f : flags.any_reply) side.any_replies += f ? 1 : 0;
  for (char f : flags.repair) side.repairs += f ? 1 : 0;
  if (side.episodes > 0) {
    double n = static_cast<double>(side.episodes);
    side.followup_pct = 100.0 * static_cast<double>(side.followups) / n;
    side.any_reply_pct = 100.0 * static_cast<double>(side.any_replies) / n;
    side.repair_pct = 100.0 * static_cast<double>(side.repairs) / n;
    if (side.repairs == 0) side.zero_repair_bound = rule_of_three(side.episodes);
  }
}

}  // namespace detail

inline H2Result h2_analysis(const Corpus& agent, const Corpus& human,
                            const std::vector<MatchedPair>& pairs,
                            const LexiconSet& lexicons, LexiconVariant variant,
                            const RepairConfig& repair_config, std::uint64_t seed,
                            std::uint64_t n_perm, unsigned workers = 0) {
  validate_pairs(pairs, agent, human);
  auto labels = pair_labels(pairs);
  const CueScan agent_scan = scan_corpus(agent, lexicons, workers);
  const CueScan human_scan = scan_corpus(human, lexicons, workers);
  const auto agent_eps =
      extract_challenges(agent, agent_scan.get(CueCategory::challenge, variant));
  const auto human_eps =
      extract_challenges(human, human_scan.get(CueCategory::challenge, variant));
  const auto agent_buckets = bucket_episodes(agent, agent_eps);
  const auto human_buckets = bucket_episodes(human, human_eps);
  const auto& agent_repair = agent_scan.get(CueCategory::repair, variant);
  const auto& human_repair = human_scan.get(CueCategory::repair, variant);

  AuthorIndex agent_index, human_index;
  const AuthorIndex* agent_index_ptr = nullptr;
  const AuthorIndex* human_index_ptr = nullptr;
  if (repair_config.whole_corpus_window) {
    agent_index = build_author_index(agent);
    human_index = build_author_index(human);
    agent_index_ptr = &agent_index;
    human_index_ptr = &human_index;
  }

  static const std::vector<std::size_t> kEmpty;
  H2Result result;
  result.variant = variant;
  result.repair_config = repair_config;
  std::vector<PairOutcomes> followup_outcomes, repair_outcomes;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto ait = agent_buckets.find(pairs[i].agent_community);
    auto hit = human_buckets.find(pairs[i].human_community);
    const auto& asubset = ait == agent_buckets.end() ? kEmpty : ait->second;
    const auto& hsubset = hit == human_buckets.end() ? kEmpty : hit->second;
    auto aflags = detail::episode_flags(agent, agent_eps, asubset, repair_config,
                                        agent_repair, agent_index_ptr);
    auto hflags = detail::episode_flags(human, human_eps, hsubset, repair_config,
                                        human_repair, human_index_ptr);
    H2PairRow row;
    row.pair_id = labels[i];
    detail::fill_side(row.agent, aflags);
    detail::fill_side(row.human, hflags);
    row.followup_gap_pp = row.human.followup_pct - row.agent.followup_pct;
    row.repair_gap_pp = row.human.repair_pct - row.agent.repair_pct;
    result.rows.push_back(row);
    if (aflags.followup.empty() || hflags.followup.empty()) {
      result.inference_excluded.push_back(labels[i]);
    } else {
      PairOutcomes fo{labels[i], hflags.followup, aflags.followup};
      PairOutcomes ro{labels[i], hflags.repair, aflags.repair};
      followup_outcomes.push_back(std::move(fo));
      repair_outcomes.push_back(std::move(ro));
    }
  }
  if (!followup_outcomes.empty()) {
    result.followup_inference = permutation_test_stratified(
        followup_outcomes, n_perm, mix_seed(seed, fnv1a("h2-followup")), workers);
    result.repair_inference = permutation_test_stratified(
        repair_outcomes, n_perm, mix_seed(seed, fnv1a("h2-repair")), workers);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Public correction loops against baselines.

struct H3CommunityRow {
  std::string community;
  std::uint64_t n_episodes = 0;
  double return_pct = 0.0, multi_pct = 0.0, cue_pct = 0.0;  // all episodes
  std::uint64_t n_compared = 0;  // baseline comparison size
  double c_return_pct = 0.0, c_multi_pct = 0.0, c_cue_pct = 0.0;  // compared subset
  double b_return_pct = 0.0, b_multi_pct = 0.0, b_cue_pct = 0.0;  // baseline
  double return_gap_pp = 0.0, multi_gap_pp = 0.0, cue_gap_pp = 0.0;
  double return_ci_low = 0.0, return_ci_high = 0.0;
  double multi_ci_low = 0.0, multi_ci_high = 0.0;
  double cue_ci_low = 0.0, cue_ci_high = 0.0;
  bool exhausted = false;  // sampled pool ran short
};

struct H3Options {
  LexiconVariant variant = LexiconVariant::full;
  bool matched = true;  // locally matched pairs; false = sampled anchors
  std::uint64_t seed = 0;
  std::uint64_t n_boot = 2000;
};

inline std::vector<H3CommunityRow> h3_analysis(const Corpus& corpus,
                                               const LexiconSet& lexicons,
                                               const H3Options& options,
                                               const std::vector<std::string>& communities = {},
                                               unsigned workers = 0) {
  const CueScan scan = scan_corpus(corpus, lexicons, workers);
  const auto episodes =
      extract_challenges(corpus, scan.get(CueCategory::challenge, options.variant));
  const auto& repair_flag = scan.get(CueCategory::repair, options.variant);
  const auto buckets = bucket_episodes(corpus, episodes);
  const auto mark = mark_challenges(corpus, episodes);

  std::vector<std::string> selected = communities;
  if (selected.empty()) {
    for (const auto& [name, info] : corpus.communities) selected.push_back(name);
  }

  std::vector<H3CommunityRow> rows;
  for (const auto& name : selected) {
    H3CommunityRow row;
    row.community = name;
    auto bit = buckets.find(name);
    const std::vector<std::size_t>* subset = bit == buckets.end() ? nullptr : &bit->second;
    if (subset == nullptr || subset->empty()) {
      rows.push_back(row);
      continue;
    }
    row.n_episodes = subset->size();
    std::vector<SubtreeMetrics> all_metrics;
    for (std::size_t idx : *subset) {
      all_metrics.push_back(subtree_metrics(corpus, episodes[idx].challenge, repair_flag));
    }
    std::uint64_t rets = 0, multis = 0, cues = 0;
    for (const auto& m : all_metrics) {
      rets += m.orig_return ? 1 : 0;
      multis += m.multi_turn ? 1 : 0;
      cues += m.repair_cue_present ? 1 : 0;
    }
    double n = static_cast<double>(all_metrics.size());
    row.return_pct = 100.0 * static_cast<double>(rets) / n;
    row.multi_pct = 100.0 * static_cast<double>(multis) / n;
    row.cue_pct = 100.0 * static_cast<double>(cues) / n;

    std::vector<SubtreeMetrics> challenge_side, baseline_side;
    if (options.matched) {
      for (std::size_t k = 0; k < subset->size(); ++k) {
        std::size_t idx = (*subset)[k];
        auto anchor =
            matched_nonchallenge_anchor(corpus, episodes[idx], idx, options.seed, mark);
        if (!anchor) continue;
        challenge_side.push_back(all_metrics[k]);
        baseline_side.push_back(subtree_metrics(corpus, anchor->anchor, repair_flag));
      }
    } else {
      bool exhausted = false;
      auto anchors = sample_nonchallenge_anchors(corpus, name, subset->size(),
                                                 options.seed, mark, &exhausted);
      row.exhausted = exhausted;
      challenge_side = all_metrics;
      for (const auto& a : anchors) {
        baseline_side.push_back(subtree_metrics(corpus, a.anchor, repair_flag));
      }
    }
    if (!challenge_side.empty() && !baseline_side.empty()) {
      H3Comparison cmp =
          h3_compare(challenge_side, baseline_side, /*paired=*/options.matched);
      row.n_compared = options.matched ? cmp.n_challenge : cmp.n_baseline;
      row.c_return_pct = 100.0 * cmp.challenge_return;
      row.c_multi_pct = 100.0 * cmp.challenge_multi;
      row.c_cue_pct = 100.0 * cmp.challenge_repaircue;
      row.b_return_pct = 100.0 * cmp.baseline_return;
      row.b_multi_pct = 100.0 * cmp.baseline_multi;
      row.b_cue_pct = 100.0 * cmp.baseline_repaircue;
      row.return_gap_pp = cmp.return_gap;
      row.multi_gap_pp = cmp.multiturn_gap;
      row.cue_gap_pp = cmp.repaircue_gap;
      if (options.matched && cmp.return_diffs.size() >= 2) {
        auto ci_of = [&](const std::vector<double>& diffs, const char* tag) {
          std::vector<double> pp(diffs.size());
          for (std::size_t i = 0; i < diffs.size(); ++i) pp[i] = 100.0 * diffs[i];
          return bootstrap_ci(pp, options.n_boot, 0.95,
                              mix_seed(options.seed, fnv1a(std::string("h3-ci:") + name +
                                                           ":" + tag)),
                              workers);
        };
        auto rci = ci_of(cmp.return_diffs, "return");
        row.return_ci_low = rci.first;
        row.return_ci_high = rci.second;
        auto mci = ci_of(cmp.multi_diffs, "multi");
        row.multi_ci_low = mci.first;
        row.multi_ci_high = mci.second;
        auto cci = ci_of(cmp.repaircue_diffs, "cue");
        row.cue_ci_low = cci.first;
        row.cue_ci_high = cci.second;
      } else {
        row.return_ci_low = row.return_ci_high = row.return_gap_pp;
        row.multi_ci_low = row.multi_ci_high = row.multi_gap_pp;
        row.cue_ci_low = row.cue_ci_high = row.cue_gap_pp;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Repair-window sweep, both lexicon variants.

struct WindowRow {
  std::string window;  // direct, k3, k5, k10, t1, t6, t24
  LexiconVariant variant = LexiconVariant::full;
  std::string pair_id;  // "(mean)" rows average the per-pair percentages
  std::uint64_t n_agent = 0, n_human = 0;
  double agent_pct = 0.0, human_pct = 0.0;
};

inline std::vector<std::pair<std::string, RepairConfig>> window_sweep_configs() {
  std::vector<std::pair<std::string, RepairConfig>> ws;
  RepairConfig c;
  c.mode = RepairMode::direct;
  ws.push_back({"direct", c});
  c.mode = RepairMode::k_window;
  for (int k : {3, 5, 10}) {
    c.k = k;
    ws.push_back({"k" + std::to_string(k), c});
  }
  c.mode = RepairMode::time_window;
  for (int h : {1, 6, 24}) {
    c.hours = static_cast<double>(h);
    ws.push_back({"t" + std::to_string(h), c});
  }
  return ws;
}

inline std::vector<WindowRow> windows_analysis(const Corpus& agent, const Corpus& human,
                                               const std::vector<MatchedPair>& pairs,
                                               const LexiconSet& lexicons,
                                               unsigned workers = 0) {
  validate_pairs(pairs, agent, human);
  auto labels = pair_labels(pairs);
  const CueScan agent_scan = scan_corpus(agent, lexicons, workers);
  const CueScan human_scan = scan_corpus(human, lexicons, workers);
  std::vector<WindowRow> rows;
  for (LexiconVariant variant : {LexiconVariant::full, LexiconVariant::strict}) {
    const auto agent_eps =
        extract_challenges(agent, agent_scan.get(CueCategory::challenge, variant));
    const auto human_eps =
        extract_challenges(human, human_scan.get(CueCategory::challenge, variant));
    const auto agent_buckets = bucket_episodes(agent, agent_eps);
    const auto human_buckets = bucket_episodes(human, human_eps);
    const auto& agent_repair = agent_scan.get(CueCategory::repair, variant);
    const auto& human_repair = human_scan.get(CueCategory::repair, variant);
    for (const auto& [label, config] : window_sweep_configs()) {
      double agent_sum = 0.0, human_sum = 0.0;
      std::size_t counted = 0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        WindowRow row;
        row.window = label;
        row.variant = variant;
        row.pair_id = labels[i];
        auto count_side = [&](const Corpus& corpus,
                              const std::vector<ChallengeEpisode>& eps,
                              const std::map<std::string, std::vector<std::size_t>>& buckets,
                              const std::string& community,
                              const std::vector<char>& repair_flag, std::uint64_t& n_out,
                              double& pct_out) {
          auto it = buckets.find(community);
          if (it == buckets.end() || it->second.empty()) return;
          std::uint64_t hits = 0;
          for (std::size_t idx : it->second) {
            hits += repair(corpus, eps[idx], config, repair_flag) ? 1 : 0;
          }
          n_out = it->second.size();
          pct_out = 100.0 * static_cast<double>(hits) / static_cast<double>(n_out);
        };
        count_side(agent, agent_eps, agent_buckets, pairs[i].agent_community,
                   agent_repair, row.n_agent, row.agent_pct);
        count_side(human, human_eps, human_buckets, pairs[i].human_community,
                   human_repair, row.n_human, row.human_pct);
        if (row.n_agent > 0 || row.n_human > 0) {
          agent_sum += row.agent_pct;
          human_sum += row.human_pct;
          ++counted;
        }
        rows.push_back(std::move(row));
      }
      WindowRow mean;
      mean.window = label;
      mean.variant = variant;
      mean.pair_id = "(mean)";
      if (counted > 0) {
        mean.agent_pct = agent_sum / static_cast<double>(counted);
        mean.human_pct = human_sum / static_cast<double>(counted);
      }
      rows.push_back(std::move(mean));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Author-level pre/post shifts.

struct ShiftRow {
  std::string community;
  ShiftEstimate estimate;
};

struct DurabilityRow {
  std::string community;
  std::size_t drop = 0;
  ShiftEstimate estimate;
};

struct DriftRow {
  std::string community;
  DriftResult drift;
};

struct AuthorShiftResult {
  std::vector<ShiftRow> shifts;           // main controlled estimates
  std::vector<DurabilityRow> durability;  // first post-event comments dropped
  std::vector<ShiftRow> placebo;          // sham split inside the pre period
  std::vector<DriftRow> drift;            // pre-period first/second half drift
  std::vector<std::string> skipped;       // communities without usable pairs
};

struct AuthorShiftOptions {
  std::uint64_t seed = 0;
  std::uint64_t n_boot = 2000;
  std::uint64_t n_perm = 2000;
  std::vector<std::size_t> durability_drops = {1, 2, 3};
  double placebo_quantile = 0.25;
  std::size_t min_pre = 4;
  LexiconVariant variant = LexiconVariant::full;
};

inline AuthorShiftResult authorshift_analysis(const Corpus& corpus,
                                              const LexiconSet& lexicons,
                                              const AuthorShiftOptions& options,
                                              unsigned workers = 0) {
  const CueScan scan = scan_corpus(corpus, lexicons, workers);
  const auto episodes =
      extract_challenges(corpus, scan.get(CueCategory::challenge, options.variant));
  const std::vector<int> words = word_counts(corpus, workers);
  AuthorShiftResult result;
  for (const auto& [community, info] : corpus.communities) {
    auto events = first_challenge_events(corpus, episodes, community);
    if (events.empty()) continue;
    auto timelines = build_timelines(corpus, community);
    ShiftAssignment assignment;
    try {
      assignment = nn_match(corpus, timelines, events, scan, words,
                            mix_seed(options.seed, fnv1a("match:" + community)),
                            options.min_pre);
    } catch (const ConfigError&) {
      result.skipped.push_back(community);  // no candidate control pool
      continue;
    }
    if (assignment.pairs.empty()) {
      result.skipped.push_back(community);
      continue;
    }
    for (ShiftMetric metric :
         {ShiftMetric::hedging, ShiftMetric::challenge_cue, ShiftMetric::length}) {
      std::uint64_t base =
          mix_seed(options.seed, fnv1a(community + ":" + shift_metric_name(metric)));
      result.shifts.push_back(
          {community, controlled_shift(timelines, assignment, scan, words, metric,
                                       options.n_boot, options.n_perm, base)});
      for (std::size_t drop : options.durability_drops) {
        result.durability.push_back(
            {community, drop,
             durability(timelines, assignment, scan, words, metric, options.n_boot,
                        options.n_perm, mix_seed(base, drop), drop)});
      }
      result.placebo.push_back(
          {community, placebo_shift(timelines, assignment, scan, words, metric,
                                    options.n_boot, options.n_perm,
                                    mix_seed(base, fnv1a("placebo")),
                                    options.placebo_quantile)});
      result.drift.push_back(
          {community, pre_period_drift(corpus, timelines, events, scan, words, metric)});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Visible/hidden probe transcripts.

struct ProbeEntry {
  std::string episode_id;
  bool visible = false;  // condition: visible vs hidden
  std::string response;
};

struct ProbeResult {
  std::uint64_t n_pairs = 0;
  std::uint64_t visible_full = 0, hidden_full = 0;
  std::uint64_t visible_strict = 0, hidden_strict = 0;
  double visible_full_pct = 0.0, hidden_full_pct = 0.0, gap_full_pp = 0.0;
  double visible_strict_pct = 0.0, hidden_strict_pct = 0.0, gap_strict_pp = 0.0;
  std::uint64_t b_full = 0, c_full = 0;  // discordant counts, visible-only / hidden-only
  std::uint64_t b_strict = 0, c_strict = 0;
  std::optional<double> p_full, p_strict;  // exact McNemar
};

inline ProbeResult probe_analysis(const std::vector<ProbeEntry>& entries,
                                  const LexiconSet& lexicons) {
  struct Pair {
    std::optional<bool> vis_full, hid_full, vis_strict, hid_strict;
  };
  std::map<std::string, Pair> by_episode;
  for (const auto& e : entries) {
    std::string lowered = normalize_for_match(e.response);
    bool full = detect_lowered(lexicons.repair_full, lowered);
    bool strict = detect_lowered(lexicons.repair_strict, lowered);
    Pair& p = by_episode[e.episode_id];
    auto& slot_full = e.visible ? p.vis_full : p.hid_full;
    auto& slot_strict = e.visible ? p.vis_strict : p.hid_strict;
    if (slot_full.has_value()) {
      throw DataError("duplicate probe condition for episode " + e.episode_id);
    }
    slot_full = full;
    slot_strict = strict;
  }
  ProbeResult r;
  for (const auto& [id, p] : by_episode) {
    if (!p.vis_full.has_value() || !p.hid_full.has_value()) {
      throw DataError("probe episode missing a condition: " + id);
    }
    ++r.n_pairs;
    r.visible_full += *p.vis_full ? 1 : 0;
    r.hidden_full += *p.hid_full ? 1 : 0;
    r.visible_strict += *p.vis_strict ? 1 : 0;
    r.hidden_strict += *p.hid_strict ? 1 : 0;
    if (*p.vis_full && !*p.hid_full) ++r.b_full;
    if (!*p.vis_full && *p.hid_full) ++r.c_full;
    if (*p.vis_strict && !*p.hid_strict) ++r.b_strict;
    if (!*p.vis_strict && *p.hid_strict) ++r.c_strict;
  }
  if (r.n_pairs > 0) {
    double n = static_cast<double>(r.n_pairs);
    r.visible_full_pct = 100.0 * static_cast<double>(r.visible_full) / n;
    r.hidden_full_pct = 100.0 * static_cast<double>(r.hidden_full) / n;
    r.gap_full_pp = r.visible_full_pct - r.hidden_full_pct;
    r.visible_strict_pct = 100.0 * static_cast<double>(r.visible_strict) / n;
    r.hidden_strict_pct = 100.0 * static_cast<double>(r.hidden_strict) / n;
    r.gap_strict_pp = r.visible_strict_pct - r.hidden_strict_pct;
  }
  r.p_full = mcnemar_exact(r.b_full, r.c_full);
  r.p_strict = mcnemar_exact(r.b_strict, r.c_strict);
  return r;
}

// ---------------------------------------------------------------------------
// Chronological per-community cap, for cap-sensitivity sweeps.

inline Corpus cap_corpus(const Corpus& corpus, std::uint64_t cap) {
  if (cap < 1) throw ConfigError("cap must be >= 1");
  Corpus out;
  out.platform = corpus.platform;
  for (const auto& [name, info] : corpus.communities) {
    std::vector<CommentIdx> order(info.comments.begin(), info.comments.end());
    std::sort(order.begin(), order.end(), [&](CommentIdx a, CommentIdx b) {
      const Comment& ca = corpus.at(a);
      const Comment& cb = corpus.at(b);
      if (ca.timestamp != cb.timestamp) return ca.timestamp < cb.timestamp;
      return ca.comment_id < cb.comment_id;
    });
    if (order.size() > cap) order.resize(cap);
    std::sort(order.begin(), order.end());
    for (CommentIdx i : order) out.comments.push_back(corpus.at(i));
  }
  out.finalize();
  return out;
}

}  // namespace threadloop
