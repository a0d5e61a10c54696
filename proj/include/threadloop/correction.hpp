#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/episodes.hpp"
#include "threadloop/rng.hpp"

namespace threadloop {

// Public-correction-loop indicators over the descendant subtree of an anchor.
// depth is the maximum descendant depth relative to the anchor (anchor = 0).
struct SubtreeMetrics {
  CommentIdx anchor = kNoComment;
  bool orig_return = false;
  bool multi_turn = false;
  bool repair_cue_present = false;
  std::uint64_t size = 0;
  int depth = 0;
};

// All transitive children of the anchor, in (timestamp, comment_id) order.
inline std::vector<CommentIdx> challenge_subtree(const Corpus& corpus, CommentIdx anchor) {
  std::vector<CommentIdx> out;
  std::vector<CommentIdx> stack(corpus.children[anchor].begin(),
                                corpus.children[anchor].end());
  while (!stack.empty()) {
    CommentIdx cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (CommentIdx kid : corpus.children[cur]) stack.push_back(kid);
  }
  std::sort(out.begin(), out.end(), [&](CommentIdx a, CommentIdx b) {
    return detail::comment_order_less(corpus, a, b);
  });
  return out;
}

// The "original author" is the anchor's parent-comment author, for episodes
// the challenged party; baseline anchors get the symmetric definition.
inline SubtreeMetrics subtree_metrics(const Corpus& corpus, CommentIdx anchor,
                                      const std::vector<char>& repair_flag) {
  if (corpus.parent[anchor] == kNoComment) {
    throw InvariantError("subtree metrics demand a nested anchor");
  }
  if (repair_flag.size() != corpus.size()) {
    throw InvariantError("repair flag vector does not match corpus size");
  }
  const std::string& orig_author = corpus.at(corpus.parent[anchor]).author_id;
  SubtreeMetrics m;
  m.anchor = anchor;
  struct Item {
    CommentIdx node;
    int rel_depth;
  };
  std::vector<Item> stack;
  for (CommentIdx kid : corpus.children[anchor]) stack.push_back({kid, 1});
  while (!stack.empty()) {
    Item cur = stack.back();
    stack.pop_back();
    ++m.size;
    m.depth = std::max(m.depth, cur.rel_depth);
    if (corpus.at(cur.node).author_id == orig_author) m.orig_return = true;
    if (repair_flag[cur.node]) m.repair_cue_present = true;
    for (CommentIdx kid : corpus.children[cur.node]) {
      stack.push_back({kid, cur.rel_depth + 1});
    }
  }
  m.multi_turn = m.depth >= 2;
  if ((m.depth == 0) != (m.size == 0)) {
    throw InvariantError("subtree depth/size disagree");
  }
  return m;
}

struct BaselineAnchor {
  enum class Kind { sampled, locally_matched };
  CommentIdx anchor = kNoComment;
  Kind kind = Kind::sampled;
  std::size_t matched_episode = static_cast<std::size_t>(-1);
  int depth_delta = 0;  // anchor depth minus challenge depth, matched only
};

// Marks every comment that anchors a challenge episode, for baseline
// exclusion.
inline std::vector<char> mark_challenges(const Corpus& corpus,
                                         const std::vector<ChallengeEpisode>& episodes) {
  std::vector<char> mark(corpus.size(), 0);
  for (const auto& ep : episodes) mark[ep.challenge] = 1;
  return mark;
}

// Uniform sample without replacement over nested non-challenge comments of
// one community. Anchors must have a resolvable parent so the symmetric
// orig-return definition applies.
inline std::vector<BaselineAnchor> sample_nonchallenge_anchors(
    const Corpus& corpus, const std::string& community, std::size_t n,
    std::uint64_t seed, const std::vector<char>& challenge_mark,
    bool* exhausted = nullptr) {
  std::vector<CommentIdx> pool;
  for (CommentIdx i : corpus.community(community).comments) {
    if (corpus.parent[i] == kNoComment) continue;
    if (challenge_mark[i]) continue;
    pool.push_back(i);
  }
  if (exhausted) *exhausted = pool.size() < n;
  Rng rng = derive_rng(seed, "h3-sample:" + community);
  std::size_t want = std::min(n, pool.size());
  std::vector<BaselineAnchor> out;
  out.reserve(want);
  for (std::size_t i = 0; i < want; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    BaselineAnchor b;
    b.anchor = pool[i];
    b.kind = BaselineAnchor::Kind::sampled;
    out.push_back(b);
  }
  return out;
}

// Paired control: a nested non-challenge comment in the same post within one
// depth level of the challenge, excluding the challenge and its descendants
// so control subtrees stay uncontaminated. Uniform among candidates, RNG
// stream derived per episode so evaluation order never matters.
inline std::optional<BaselineAnchor> matched_nonchallenge_anchor(
    const Corpus& corpus, const ChallengeEpisode& ep, std::size_t episode_index,
    std::uint64_t seed, const std::vector<char>& challenge_mark) {
  const int target_depth = corpus.depth[ep.challenge];
  std::vector<CommentIdx> descendants = challenge_subtree(corpus, ep.challenge);
  std::vector<CommentIdx> candidates;
  for (CommentIdx i : corpus.post_comments[corpus.post_of[ep.challenge]]) {
    if (i == ep.challenge) continue;
    if (corpus.parent[i] == kNoComment) continue;
    if (challenge_mark[i]) continue;
    if (std::abs(corpus.depth[i] - target_depth) > 1) continue;
    if (std::binary_search(descendants.begin(), descendants.end(), i,
                           [&](CommentIdx a, CommentIdx b) {
                             return detail::comment_order_less(corpus, a, b);
                           })) {
      continue;
    }
    candidates.push_back(i);
  }
  if (candidates.empty()) return std::nullopt;
  Rng rng = derive_rng(seed, "h3-match:" + corpus.at(ep.challenge).comment_id);
  BaselineAnchor b;
  b.anchor = candidates[rng.below(candidates.size())];
  b.kind = BaselineAnchor::Kind::locally_matched;
  b.matched_episode = episode_index;
  b.depth_delta = corpus.depth[b.anchor] - target_depth;
  return b;
}

// Challenge-versus-baseline contrast. Paired mode aligns metric i with
// baseline i and emits per-pair difference vectors for the inference layer.
struct H3Comparison {
  std::size_t n_challenge = 0;
  std::size_t n_baseline = 0;
  double challenge_return = 0.0, challenge_multi = 0.0, challenge_repaircue = 0.0;
  double baseline_return = 0.0, baseline_multi = 0.0, baseline_repaircue = 0.0;
  double return_gap = 0.0, multiturn_gap = 0.0, repaircue_gap = 0.0;  // pp
  std::vector<double> return_diffs, multi_diffs, repaircue_diffs;    // paired only
};

inline H3Comparison h3_compare(const std::vector<SubtreeMetrics>& challenge,
                               const std::vector<SubtreeMetrics>& baseline,
                               bool paired) {
  if (challenge.empty() || baseline.empty()) {
    throw ConfigError("h3 comparison needs non-empty metric sets");
  }
  if (paired && challenge.size() != baseline.size()) {
    throw ConfigError("paired h3 comparison needs aligned metric sets");
  }
  auto rate = [](const std::vector<SubtreeMetrics>& v, auto field) {
    std::uint64_t hits = 0;
    for (const auto& m : v) hits += field(m) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(v.size());
  };
  H3Comparison cmp;
  cmp.n_challenge = challenge.size();
  cmp.n_baseline = baseline.size();
  cmp.challenge_return = rate(challenge, [](const SubtreeMetrics& m) { return m.orig_return; });
  cmp.challenge_multi = rate(challenge, [](const SubtreeMetrics& m) { return m.multi_turn; });
  cmp.challenge_repaircue =
      rate(challenge, [](const SubtreeMetrics& m) { return m.repair_cue_present; });
  cmp.baseline_return = rate(baseline, [](const SubtreeMetrics& m) { return m.orig_return; });
  cmp.baseline_multi = rate(baseline, [](const SubtreeMetrics& m) { return m.multi_turn; });
  cmp.baseline_repaircue =
      rate(baseline, [](const SubtreeMetrics& m) { return m.repair_cue_present; });
  cmp.return_gap = 100.0 * (cmp.challenge_return - cmp.baseline_return);
  cmp.multiturn_gap = 100.0 * (cmp.challenge_multi - cmp.baseline_multi);
  cmp.repaircue_gap = 100.0 * (cmp.challenge_repaircue - cmp.baseline_repaircue);
  if (paired) {
    for (std::size_t i = 0; i < challenge.size(); ++i) {
      cmp.return_diffs.push_back(static_cast<double>(challenge[i].orig_return) -
                                 static_cast<double>(baseline[i].orig_return));
      cmp.multi_diffs.push_back(static_cast<double>(challenge[i].multi_turn) -
                                static_cast<double>(baseline[i].multi_turn));
      cmp.repaircue_diffs.push_back(static_cast<double>(challenge[i].repair_cue_present) -
                                    static_cast<double>(baseline[i].repair_cue_present));
    }
  }
  return cmp;
}

}  // namespace threadloop
