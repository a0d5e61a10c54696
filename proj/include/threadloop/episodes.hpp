#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/lexicon.hpp"
#include "threadloop/parallel.hpp"
#include "threadloop/stats.hpp"
#include "threadloop/text.hpp"

namespace threadloop {

// Per-comment detector outcomes for every category/variant combination,
// computed in one normalization pass so large corpora scan once.
struct CueScan {
  std::vector<char> challenge_full, challenge_strict;
  std::vector<char> repair_full, repair_strict;
  std::vector<char> hedging_full, hedging_strict;

  const std::vector<char>& get(CueCategory cat, LexiconVariant var) const {
    switch (cat) {
      case CueCategory::challenge:
        return var == LexiconVariant::full ? challenge_full : challenge_strict;
      case CueCategory::repair:
        return var == LexiconVariant::full ? repair_full : repair_strict;
      case CueCategory::hedging:
        return var == LexiconVariant::full ? hedging_full : hedging_strict;
    }
    throw InvariantError("bad category");
  }
};

inline CueScan scan_corpus(const Corpus& corpus, const LexiconSet& lexicons,
                           unsigned workers = 0) {
  const std::size_t n = corpus.size();
  CueScan scan;
  scan.challenge_full.resize(n);
  scan.challenge_strict.resize(n);
  scan.repair_full.resize(n);
  scan.repair_strict.resize(n);
  scan.hedging_full.resize(n);
  scan.hedging_strict.resize(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        std::string lowered = normalize_for_match(corpus.at(static_cast<CommentIdx>(i)).body);
        scan.challenge_full[i] = detect_lowered(lexicons.challenge_full, lowered) ? 1 : 0;
        scan.challenge_strict[i] =
            scan.challenge_full[i] && detect_lowered(lexicons.challenge_strict, lowered) ? 1 : 0;
        scan.repair_full[i] = detect_lowered(lexicons.repair_full, lowered) ? 1 : 0;
        scan.repair_strict[i] =
            scan.repair_full[i] && detect_lowered(lexicons.repair_strict, lowered) ? 1 : 0;
        scan.hedging_full[i] = detect_lowered(lexicons.hedging_full, lowered) ? 1 : 0;
        scan.hedging_strict[i] =
            scan.hedging_full[i] && detect_lowered(lexicons.hedging_strict, lowered) ? 1 : 0;
      },
      workers);
  return scan;
}

inline std::vector<char> scan_flags(const Corpus& corpus, const CueLexicon& lexicon,
                                    unsigned workers = 0) {
  std::vector<char> flags(corpus.size());
  parallel_for(
      corpus.size(),
      [&](std::size_t i) {
        flags[i] = detect(lexicon, corpus.at(static_cast<CommentIdx>(i)).body) ? 1 : 0;
      },
      workers);
  return flags;
}

// A nested comment contesting its parent. The challenged party is the parent
// comment's author, who must differ from the challenger.
struct ChallengeEpisode {
  CommentIdx challenge = kNoComment;
  CommentIdx challenged = kNoComment;
};

// Episodes in (post_id, timestamp, comment_id) order. Eligibility: the cue
// fires, the parent resolves to a comment, and the reply is not a
// self-reply.
inline std::vector<ChallengeEpisode> extract_challenges(
    const Corpus& corpus, const std::vector<char>& challenge_flag) {
  if (challenge_flag.size() != corpus.size()) {
    throw InvariantError("challenge flag vector does not match corpus size");
  }
  std::vector<PostIdx> post_order(corpus.posts.size());
  for (std::size_t p = 0; p < corpus.posts.size(); ++p) post_order[p] = static_cast<PostIdx>(p);
  std::sort(post_order.begin(), post_order.end(), [&](PostIdx a, PostIdx b) {
    return corpus.posts[a].post_id < corpus.posts[b].post_id;
  });
  std::vector<ChallengeEpisode> out;
  for (PostIdx p : post_order) {
    for (CommentIdx i : corpus.post_comments[p]) {
      if (!challenge_flag[i]) continue;
      CommentIdx parent = corpus.parent[i];
      if (parent == kNoComment) continue;
      if (corpus.at(i).author_id == corpus.at(parent).author_id) continue;
      out.push_back({i, parent});
    }
  }
  return out;
}

inline std::vector<ChallengeEpisode> extract_challenges(const Corpus& corpus,
                                                        const CueLexicon& lexicon,
                                                        unsigned workers = 0) {
  return extract_challenges(corpus, scan_flags(corpus, lexicon, workers));
}

// True iff the challenged author answered the challenge with a direct child.
inline bool followup(const Corpus& corpus, const ChallengeEpisode& ep) {
  const std::string& target = corpus.at(ep.challenged).author_id;
  for (CommentIdx kid : corpus.children[ep.challenge]) {
    if (corpus.at(kid).author_id == target) return true;
  }
  return false;
}

// Diagnostic companion: anyone replied at all.
inline bool any_reply(const Corpus& corpus, const ChallengeEpisode& ep) {
  return !corpus.children[ep.challenge].empty();
}

enum class RepairMode { direct, k_window, time_window };

inline const char* repair_mode_name(RepairMode m) {
  switch (m) {
    case RepairMode::direct: return "direct";
    case RepairMode::k_window: return "k";
    case RepairMode::time_window: return "time";
  }
  return "?";
}

struct RepairConfig {
  RepairMode mode = RepairMode::direct;
  int k = 5;            // k_window size
  double hours = 24.0;  // time_window horizon
  LexiconVariant lexicon_variant = LexiconVariant::full;
  bool whole_corpus_window = false;  // time_window beyond the challenge's post
};

// All comments per author in (timestamp, comment_id) order; required only for
// the whole-corpus time window.
struct AuthorIndex {
  std::unordered_map<std::string, std::vector<CommentIdx>> by_author;
};

inline AuthorIndex build_author_index(const Corpus& corpus) {
  AuthorIndex idx;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    idx.by_author[corpus.at(i).author_id].push_back(static_cast<CommentIdx>(i));
  }
  for (auto& [author, list] : idx.by_author) {
    std::sort(list.begin(), list.end(), [&](CommentIdx a, CommentIdx b) {
      return detail::comment_order_less(corpus, a, b);
    });
  }
  return idx;
}

namespace detail {

// Position of the challenge inside its post's chronological comment list.
inline std::size_t thread_position(const Corpus& corpus, CommentIdx comment) {
  const auto& members = corpus.post_comments[corpus.post_of[comment]];
  auto it = std::lower_bound(members.begin(), members.end(), comment,
                             [&](CommentIdx a, CommentIdx b) {
                               return comment_order_less(corpus, a, b);
                             });
  while (it != members.end() && *it != comment) ++it;
  if (it == members.end()) throw InvariantError("comment missing from its post");
  return static_cast<std::size_t>(it - members.begin());
}

}  // namespace detail

// Repair detection relative to one episode. Window semantics:
//   direct:      a direct child of the challenge by the challenged author
//   k_window:    the next k comments in the whole post thread, any target
//   time_window: challenged author's comments within `hours` (inclusive)
//                after the challenge, same post unless whole_corpus_window
inline bool repair(const Corpus& corpus, const ChallengeEpisode& ep,
                   const RepairConfig& config, const std::vector<char>& repair_flag,
                   const AuthorIndex* author_index = nullptr) {
  if (config.k < 1) throw ConfigError("repair k must be >= 1");
  if (!(config.hours > 0.0)) throw ConfigError("repair hours must be > 0");
  if (repair_flag.size() != corpus.size()) {
    throw InvariantError("repair flag vector does not match corpus size");
  }
  const std::string& target = corpus.at(ep.challenged).author_id;

  if (config.mode == RepairMode::direct) {
    for (CommentIdx kid : corpus.children[ep.challenge]) {
      if (repair_flag[kid] && corpus.at(kid).author_id == target) return true;
    }
    return false;
  }

  const std::int64_t challenge_ts = corpus.at(ep.challenge).timestamp;
  if (config.mode == RepairMode::k_window) {
    const auto& members = corpus.post_comments[corpus.post_of[ep.challenge]];
    std::size_t pos = detail::thread_position(corpus, ep.challenge);
    std::size_t end = std::min(members.size(), pos + 1 + static_cast<std::size_t>(config.k));
    for (std::size_t j = pos + 1; j < end; ++j) {
      CommentIdx c = members[j];
      if (repair_flag[c] && corpus.at(c).author_id == target) return true;
    }
    return false;
  }

  const double horizon = config.hours * 3600.0;
  if (!config.whole_corpus_window) {
    const auto& members = corpus.post_comments[corpus.post_of[ep.challenge]];
    std::size_t pos = detail::thread_position(corpus, ep.challenge);
    for (std::size_t j = pos + 1; j < members.size(); ++j) {
      CommentIdx c = members[j];
      if (static_cast<double>(corpus.at(c).timestamp - challenge_ts) > horizon) break;
      if (repair_flag[c] && corpus.at(c).author_id == target) return true;
    }
    return false;
  }

  if (!author_index) {
    throw ConfigError("whole-corpus time window requires an author index");
  }
  auto it = author_index->by_author.find(target);
  if (it == author_index->by_author.end()) return false;
  const auto& timeline = it->second;
  auto start = std::upper_bound(timeline.begin(), timeline.end(), ep.challenge,
                                [&](CommentIdx a, CommentIdx b) {
                                  return detail::comment_order_less(corpus, a, b);
                                });
  for (auto jt = start; jt != timeline.end(); ++jt) {
    if (static_cast<double>(corpus.at(*jt).timestamp - challenge_ts) > horizon) break;
    if (repair_flag[*jt]) return true;
  }
  return false;
}

struct H2Rates {
  std::size_t n = 0;
  std::uint64_t followups = 0;
  std::uint64_t any_replies = 0;
  std::uint64_t repairs = 0;
  std::optional<double> followup_rate;
  std::optional<double> any_reply_rate;
  std::optional<double> repair_rate;
  std::optional<double> zero_event_upper_bound;  // rule of three when repairs = 0
};

inline H2Rates h2_rates(const Corpus& corpus, const std::vector<ChallengeEpisode>& episodes,
                        const RepairConfig& config, const std::vector<char>& repair_flag,
                        const AuthorIndex* author_index = nullptr) {
  H2Rates rates;
  rates.n = episodes.size();
  for (const auto& ep : episodes) {
    if (followup(corpus, ep)) ++rates.followups;
    if (any_reply(corpus, ep)) ++rates.any_replies;
    if (repair(corpus, ep, config, repair_flag, author_index)) ++rates.repairs;
  }
  if (rates.n > 0) {
    double n = static_cast<double>(rates.n);
    rates.followup_rate = static_cast<double>(rates.followups) / n;
    rates.any_reply_rate = static_cast<double>(rates.any_replies) / n;
    rates.repair_rate = static_cast<double>(rates.repairs) / n;
    if (rates.repairs == 0) rates.zero_event_upper_bound = rule_of_three(rates.n);
  }
  return rates;
}

}  // namespace threadloop
