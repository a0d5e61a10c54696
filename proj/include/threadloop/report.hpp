#pragma once

// CSV table writers. Output is deterministic: fixed column orders, %.10g
// number formatting, no timestamps. Every table ends in seed/lexicon columns
// so rows carry their generating seed and lexicon variant; the cells stay
// empty for tables that use neither.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "threadloop/analysis.hpp"
#include "threadloop/csv.hpp"
#include "threadloop/stats.hpp"
#include "threadloop/structure.hpp"
#include "vendor/json.hpp"

namespace threadloop {

inline std::string format_number(double v) {
  if (v == 0.0) return "0";  // fold negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_count(std::uint64_t v) { return std::to_string(v); }

struct TableMeta {
  std::string seed;     // empty when the table involved no randomness
  std::string lexicon;  // empty when no lexicon was involved
};

inline TableMeta meta_none() { return {}; }
inline TableMeta meta_seeded(std::uint64_t seed) { return {std::to_string(seed), ""}; }
inline TableMeta meta_full(std::uint64_t seed, LexiconVariant v) {
  return {std::to_string(seed), variant_name(v)};
}
inline TableMeta meta_lexicon(LexiconVariant v) { return {"", variant_name(v)}; }

namespace detail {

inline void emit(std::ostream& os, std::vector<std::string> cells, const TableMeta& meta) {
  cells.push_back(meta.seed);
  cells.push_back(meta.lexicon);
  csv_write_row(os, cells);
}

inline void emit_header(std::ostream& os, std::vector<std::string> names) {
  names.push_back("seed");
  names.push_back("lexicon");
  csv_write_row(os, names);
}

}  // namespace detail

inline void write_community_table(std::ostream& os, const std::vector<CommunityStats>& rows,
                                  Platform platform) {
  detail::emit_header(os, {"community", "platform", "posts", "comments", "nested",
                           "nesting_pct", "top5_share", "share_undefined", "eligible",
                           "tier"});
  for (const auto& r : rows) {
    detail::emit(os,
                 {r.community_id, platform_name(platform), format_count(r.posts),
                  format_count(r.comments), format_count(r.nested),
                  format_number(100.0 * r.nesting_rate), format_number(r.top5_author_share),
                  r.concentration_undefined ? "1" : "0", r.eligible ? "1" : "0",
                  tier_name(r.tier)},
                 meta_none());
  }
}

inline void write_h1_table(std::ostream& os, const H1Result& result, std::uint64_t seed) {
  auto meta = meta_seeded(seed);
  detail::emit_header(os, {"pair_id", "agent_community", "human_community",
                           "agent_comments", "agent_nested", "agent_pct", "human_comments",
                           "human_nested", "human_pct", "gap_pp"});
  for (const auto& r : result.rows) {
    detail::emit(os,
                 {r.pair_id, r.agent_community, r.human_community,
                  format_count(r.agent_comments), format_count(r.agent_nested),
                  format_number(r.agent_pct), format_count(r.human_comments),
                  format_count(r.human_nested), format_number(r.human_pct),
                  format_number(r.gap_pp)},
                 meta);
  }
}

inline void write_h2_table(std::ostream& os, const H2Result& result, std::uint64_t seed) {
  auto meta = meta_full(seed, result.variant);
  detail::emit_header(os, {"pair_id", "agent_episodes", "agent_followup_pct",
                           "agent_any_reply_pct", "agent_repair_pct",
                           "agent_zero_repair_bound", "human_episodes", "human_followup_pct",
                           "human_any_reply_pct", "human_repair_pct",
                           "human_zero_repair_bound", "followup_gap_pp", "repair_gap_pp",
                           "repair_mode"});
  std::string mode = repair_mode_name(result.repair_config.mode);
  if (result.repair_config.mode == RepairMode::k_window) {
    mode += ":" + std::to_string(result.repair_config.k);
  } else if (result.repair_config.mode == RepairMode::time_window) {
    mode += ":" + format_number(result.repair_config.hours);
  }
  for (const auto& r : result.rows) {
    auto bound = [](const H2Side& s) {
      return s.zero_repair_bound ? format_number(*s.zero_repair_bound) : std::string();
    };
    detail::emit(os,
                 {r.pair_id, format_count(r.agent.episodes),
                  format_number(r.agent.followup_pct), format_number(r.agent.any_reply_pct),
                  format_number(r.agent.repair_pct), bound(r.agent),
                  format_count(r.human.episodes), format_number(r.human.followup_pct),
                  format_number(r.human.any_reply_pct), format_number(r.human.repair_pct),
                  bound(r.human), format_number(r.followup_gap_pp),
                  format_number(r.repair_gap_pp), mode},
                 meta);
  }
}

inline void write_h3_table(std::ostream& os, const std::vector<H3CommunityRow>& rows,
                           std::uint64_t seed, LexiconVariant variant, bool matched) {
  auto meta = meta_full(seed, variant);
  detail::emit_header(os, {"community", "baseline", "n_episodes", "return_pct",
                           "multi_turn_pct", "repair_cue_pct", "n_compared", "c_return_pct",
                           "c_multi_turn_pct", "c_repair_cue_pct", "b_return_pct",
                           "b_multi_turn_pct", "b_repair_cue_pct", "return_gap_pp",
                           "return_ci_low", "return_ci_high", "multi_turn_gap_pp",
                           "multi_ci_low", "multi_ci_high", "repair_cue_gap_pp",
                           "cue_ci_low", "cue_ci_high", "exhausted"});
  const char* baseline = matched ? "matched" : "sampled";
  for (const auto& r : rows) {
    detail::emit(os,
                 {r.community, baseline, format_count(r.n_episodes),
                  format_number(r.return_pct), format_number(r.multi_pct),
                  format_number(r.cue_pct), format_count(r.n_compared),
                  format_number(r.c_return_pct), format_number(r.c_multi_pct),
                  format_number(r.c_cue_pct), format_number(r.b_return_pct),
                  format_number(r.b_multi_pct), format_number(r.b_cue_pct),
                  format_number(r.return_gap_pp), format_number(r.return_ci_low),
                  format_number(r.return_ci_high), format_number(r.multi_gap_pp),
                  format_number(r.multi_ci_low), format_number(r.multi_ci_high),
                  format_number(r.cue_gap_pp), format_number(r.cue_ci_low),
                  format_number(r.cue_ci_high), r.exhausted ? "1" : "0"},
                 meta);
  }
}

inline void write_windows_table(std::ostream& os, const std::vector<WindowRow>& rows) {
  detail::emit_header(os, {"window", "lexicon_variant", "pair_id", "n_agent", "agent_pct",
                           "n_human", "human_pct"});
  for (const auto& r : rows) {
    detail::emit(os,
                 {r.window, variant_name(r.variant), r.pair_id, format_count(r.n_agent),
                  format_number(r.agent_pct), format_count(r.n_human),
                  format_number(r.human_pct)},
                 meta_none());
  }
}

inline void write_pair_table(std::ostream& os, const PairTable& table) {
  detail::emit_header(os, {"pair_id", "metric", "reddit_value", "moltbook_value", "gap_pp"});
  for (const auto& r : table.rows) {
    detail::emit(os,
                 {r.pair_id, r.metric, format_number(r.human_value),
                  format_number(r.agent_value), format_number(r.human_value - r.agent_value)},
                 meta_none());
  }
}

inline void write_loo_table(std::ostream& os, const std::vector<LeaveOneOutRow>& rows) {
  detail::emit_header(os, {"metric", "dropped_pair", "mean_gap_pp", "n_pairs"});
  for (const auto& r : rows) {
    detail::emit(os,
                 {r.metric, r.dropped_pair, format_number(r.mean_gap),
                  format_count(r.n_pairs)},
                 meta_none());
  }
}

inline void write_heterogeneity_table(std::ostream& os,
                                      const std::vector<HeterogeneityRow>& rows) {
  detail::emit_header(os, {"metric", "human_min", "human_max", "agent_min", "agent_max",
                           "worst_gap_pp"});
  for (const auto& r : rows) {
    detail::emit(os,
                 {r.metric, format_number(r.human_min), format_number(r.human_max),
                  format_number(r.agent_min), format_number(r.agent_max),
                  format_number(r.worst_gap)},
                 meta_none());
  }
}

namespace detail {

inline std::vector<std::string> shift_cells(const std::string& community,
                                            const ShiftEstimate& e) {
  return {community,
          shift_metric_name(e.metric),
          format_count(e.n_challenged),
          format_count(e.n_control),
          format_count(e.excluded_pairs),
          format_number(e.controlled_shift),
          format_number(e.ci_low),
          format_number(e.ci_high),
          format_number(e.p_value),
          format_number(e.effect_size)};
}

}  // namespace detail

inline void write_shift_table(std::ostream& os, const std::vector<ShiftRow>& rows,
                              std::uint64_t seed) {
  auto meta = meta_seeded(seed);
  detail::emit_header(os, {"community", "metric", "n_challenged", "n_control",
                           "excluded_pairs", "controlled_shift", "ci_low", "ci_high",
                           "p_value", "effect_size"});
  for (const auto& r : rows) detail::emit(os, detail::shift_cells(r.community, r.estimate), meta);
}

inline void write_durability_table(std::ostream& os, const std::vector<DurabilityRow>& rows,
                                   std::uint64_t seed) {
  auto meta = meta_seeded(seed);
  detail::emit_header(os, {"community", "metric", "drop_first_post", "n_challenged",
                           "n_control", "excluded_pairs", "controlled_shift", "ci_low",
                           "ci_high", "p_value", "effect_size"});
  for (const auto& r : rows) {
    auto cells = detail::shift_cells(r.community, r.estimate);
    cells.insert(cells.begin() + 2, std::to_string(r.drop));
    detail::emit(os, cells, meta);
  }
}

inline void write_drift_table(std::ostream& os, const std::vector<DriftRow>& rows) {
  detail::emit_header(os, {"community", "metric", "n_authors", "mean_drift"});
  for (const auto& r : rows) {
    detail::emit(os,
                 {r.community, shift_metric_name(r.drift.metric),
                  format_count(r.drift.n_authors), format_number(r.drift.mean_drift)},
                 meta_none());
  }
}

inline void write_probe_table(std::ostream& os, const ProbeResult& r) {
  detail::emit_header(os, {"lexicon_variant", "n_pairs", "visible_pct", "hidden_pct",
                           "gap_pp", "discordant_visible_only", "discordant_hidden_only",
                           "mcnemar_p"});
  auto p_str = [](const std::optional<double>& p) {
    return p ? format_number(*p) : std::string();
  };
  detail::emit(os,
               {"full", format_count(r.n_pairs), format_number(r.visible_full_pct),
                format_number(r.hidden_full_pct), format_number(r.gap_full_pp),
                format_count(r.b_full), format_count(r.c_full), p_str(r.p_full)},
               meta_lexicon(LexiconVariant::full));
  detail::emit(os,
               {"strict", format_count(r.n_pairs), format_number(r.visible_strict_pct),
                format_number(r.hidden_strict_pct), format_number(r.gap_strict_pp),
                format_count(r.b_strict), format_count(r.c_strict), p_str(r.p_strict)},
               meta_lexicon(LexiconVariant::strict));
}

inline nlohmann::json inference_to_json(const InferenceResult& r) {
  nlohmann::json j;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["n_resamples"] = r.n_resamples;
  j["seed"] = r.seed;
  j["exact"] = r.exact;
  return j;
}

}  // namespace threadloop
