#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/time_util.hpp"
#include "vendor/json.hpp"

namespace threadloop {

enum class Tier { main, appendix, excluded };

inline const char* tier_name(Tier t) {
  switch (t) {
    case Tier::main: return "main";
    case Tier::appendix: return "appendix";
    case Tier::excluded: return "excluded";
  }
  return "?";
}

struct CommunityStats {
  std::string community_id;
  std::uint64_t posts = 0;
  std::uint64_t comments = 0;
  std::uint64_t nested = 0;  // parent_id present, resolvable or not
  double nesting_rate = 0.0;
  double top5_author_share = 0.0;
  bool concentration_undefined = false;  // no nested comments to rank
  bool eligible = false;
  Tier tier = Tier::excluded;
};

// Fraction of comments carrying a parent identifier. Field presence is the
// signal; a dangling parent still counts.
inline double nesting_rate(const Corpus& corpus, const std::string& community_id) {
  const CommunityInfo& info = corpus.community(community_id);
  if (info.comments.empty()) return 0.0;
  std::uint64_t nested = 0;
  for (CommentIdx i : info.comments) {
    if (corpus.at(i).has_parent) ++nested;
  }
  return static_cast<double>(nested) / static_cast<double>(info.comments.size());
}

// Share of nested comments written by the k most prolific nested-comment
// authors. Count ties break toward the lexicographically smaller author_id.
inline double author_concentration(const Corpus& corpus, const std::string& community_id,
                                   int k, bool* undefined_flag = nullptr) {
  if (k < 1) throw ConfigError("author_concentration requires k >= 1");
  const CommunityInfo& info = corpus.community(community_id);
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t nested = 0;
  for (CommentIdx i : info.comments) {
    if (!corpus.at(i).has_parent) continue;
    ++nested;
    ++counts[corpus.at(i).author_id];
  }
  if (undefined_flag) *undefined_flag = (nested == 0);
  if (nested == 0) return 0.0;
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::uint64_t top = 0;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(k); ++i) {
    top += ranked[i].second;
  }
  return static_cast<double>(top) / static_cast<double>(nested);
}

// Screening: a community enters the analysis only with enough nested volume
// and without a handful of authors dominating the reply graph. Thresholds are
// configurable; defaults are the pre-specified ones. The appendix tier cannot
// be derived from thresholds, so it arrives as an explicit override list.
inline std::vector<CommunityStats> select_communities(
    const Corpus& corpus, std::uint64_t min_nested = 750, double max_top5 = 0.5,
    const std::set<std::string>& appendix_override = {}) {
  if (min_nested == 0 || !(max_top5 > 0.0)) {
    throw ConfigError("eligibility thresholds must be positive");
  }
  std::vector<CommunityStats> out;
  for (const auto& [name, info] : corpus.communities) {
    CommunityStats stats;
    stats.community_id = name;
    stats.posts = info.posts.size();
    stats.comments = info.comments.size();
    for (CommentIdx i : info.comments) {
      if (corpus.at(i).has_parent) ++stats.nested;
    }
    stats.nesting_rate = stats.comments == 0
                             ? 0.0
                             : static_cast<double>(stats.nested) /
                                   static_cast<double>(stats.comments);
    stats.top5_author_share =
        author_concentration(corpus, name, 5, &stats.concentration_undefined);
    stats.eligible = stats.nested >= min_nested && stats.top5_author_share < max_top5;
    if (appendix_override.count(name)) stats.tier = Tier::appendix;
    else stats.tier = stats.eligible ? Tier::main : Tier::excluded;
    out.push_back(std::move(stats));
  }
  return out;
}

// Per-day comment counts, UTC day boundaries, keyed "YYYY-MM-DD".
inline std::map<std::string, std::uint64_t> activity_timeline(
    const Corpus& corpus, const std::string* community_id = nullptr) {
  std::map<std::string, std::uint64_t> out;
  auto add = [&](CommentIdx i) {
    std::int64_t secs = corpus.at(i).timestamp;
    std::int64_t days = secs / 86400;
    if (secs % 86400 < 0) --days;
    CivilDate d = civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    ++out[buf];
  };
  if (community_id) {
    for (CommentIdx i : corpus.community(*community_id).comments) add(i);
  } else {
    for (std::size_t i = 0; i < corpus.size(); ++i) add(static_cast<CommentIdx>(i));
  }
  return out;
}

enum class MatchType { exact_name, concept_match, topic };

inline const char* match_type_name(MatchType m) {
  switch (m) {
    case MatchType::exact_name: return "exact_name";
    case MatchType::concept_match: return "concept";
    case MatchType::topic: return "topic";
  }
  return "?";
}

inline MatchType parse_match_type(const std::string& s) {
  if (s == "exact_name") return MatchType::exact_name;
  if (s == "concept") return MatchType::concept_match;
  if (s == "topic") return MatchType::topic;
  throw ConfigError("unknown match_type: " + s);
}

// Pairing is pure configuration; nothing is ever inferred from names.
struct MatchedPair {
  std::string agent_community;
  std::string human_community;
  MatchType match_type = MatchType::topic;
};

inline std::vector<MatchedPair> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pairs file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad pairs JSON in " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw ConfigError("pairs file must hold a JSON list");
  std::vector<MatchedPair> out;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("agent") || !item.contains("human") ||
        !item.contains("match_type")) {
      throw ConfigError("each pair needs agent, human, match_type");
    }
    MatchedPair p;
    p.agent_community = item["agent"].get<std::string>();
    p.human_community = item["human"].get<std::string>();
    p.match_type = parse_match_type(item["match_type"].get<std::string>());
    out.push_back(std::move(p));
  }
  if (out.empty()) throw ConfigError("pairs file is empty");
  return out;
}

inline void validate_pairs(const std::vector<MatchedPair>& pairs,
                           const Corpus& agent_corpus, const Corpus& human_corpus) {
  for (const auto& p : pairs) {
    if (!agent_corpus.communities.count(p.agent_community)) {
      throw ConfigError("pair references unknown agent community: " + p.agent_community);
    }
    if (!human_corpus.communities.count(p.human_community)) {
      throw ConfigError("pair references unknown human community: " + p.human_community);
    }
  }
}

}  // namespace threadloop
