#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/episodes.hpp"
#include "threadloop/stats.hpp"
#include "threadloop/text.hpp"

namespace threadloop {

enum class ShiftMetric { hedging, challenge_cue, length };

inline const char* shift_metric_name(ShiftMetric m) {
  switch (m) {
    case ShiftMetric::hedging: return "hedging";
    case ShiftMetric::challenge_cue: return "challenge_cue";
    case ShiftMetric::length: return "length";
  }
  return "?";
}

// Whitespace word counts per comment; the length metric's unit is words.
inline std::vector<int> word_counts(const Corpus& corpus, unsigned workers = 0) {
  std::vector<int> out(corpus.size());
  parallel_for(
      corpus.size(),
      [&](std::size_t i) { out[i] = word_count(corpus.at(static_cast<CommentIdx>(i)).body); },
      workers);
  return out;
}

inline double metric_value(const CueScan& scan, const std::vector<int>& words,
                           ShiftMetric metric, CommentIdx i) {
  switch (metric) {
    case ShiftMetric::hedging: return scan.hedging_full[i] ? 1.0 : 0.0;
    case ShiftMetric::challenge_cue: return scan.challenge_full[i] ? 1.0 : 0.0;
    case ShiftMetric::length: return static_cast<double>(words[i]);
  }
  throw InvariantError("bad shift metric");
}

// One author's chronological comment history within a single community.
struct AuthorTimeline {
  std::string author_id;
  std::vector<CommentIdx> comments;  // (timestamp, comment_id) order
};

inline std::vector<AuthorTimeline> build_timelines(const Corpus& corpus,
                                                   const std::string& community) {
  std::map<std::string, std::vector<CommentIdx>> grouped;
  for (CommentIdx i : corpus.community(community).comments) {
    grouped[corpus.at(i).author_id].push_back(i);
  }
  std::vector<AuthorTimeline> out;
  out.reserve(grouped.size());
  for (auto& [author, list] : grouped) out.push_back({author, std::move(list)});
  return out;
}

// The first challenge each author receives, ordered by (timestamp,
// comment_id) of the challenge comment.
struct AuthorEvent {
  std::int64_t ts = 0;
  std::string challenge_id;
};

inline std::map<std::string, AuthorEvent> first_challenge_events(
    const Corpus& corpus, const std::vector<ChallengeEpisode>& episodes,
    const std::string& community) {
  std::map<std::string, AuthorEvent> out;
  for (const auto& ep : episodes) {
    const Comment& chal = corpus.at(ep.challenge);
    if (chal.community != community) continue;
    const std::string& author = corpus.at(ep.challenged).author_id;
    AuthorEvent ev{chal.timestamp, chal.comment_id};
    auto it = out.find(author);
    if (it == out.end()) {
      out.emplace(author, ev);
    } else if (ev.ts < it->second.ts ||
               (ev.ts == it->second.ts && ev.challenge_id < it->second.challenge_id)) {
      it->second = ev;
    }
  }
  return out;
}

// An author's history split at an event: the first `pre` comments precede it.
struct AuthorSegment {
  std::size_t timeline_index = 0;
  std::size_t pre = 0;
};

struct ShiftAssignment {
  std::vector<std::pair<AuthorSegment, AuthorSegment>> pairs;  // challenged, control
  std::uint64_t n_challenged_eligible = 0;
  std::uint64_t unmatched = 0;
};

namespace detail {

// Comments strictly before the event under the (timestamp, comment_id) total
// order. The event is a challenge comment, so its id never collides with the
// author's own comments.
inline std::size_t pre_count(const Corpus& corpus, const AuthorTimeline& tl,
                             const AuthorEvent& ev) {
  std::size_t n = 0;
  for (CommentIdx i : tl.comments) {
    const Comment& c = corpus.at(i);
    if (c.timestamp < ev.ts ||
        (c.timestamp == ev.ts && c.comment_id < ev.challenge_id)) {
      ++n;
    } else {
      break;
    }
  }
  return n;
}

struct Features {
  double volume, hedge_rate, mean_length;
};

inline Features segment_features(const CueScan& scan,
                                 const std::vector<int>& words,
                                 const AuthorTimeline& tl, std::size_t count) {
  Features f{static_cast<double>(count), 0.0, 0.0};
  for (std::size_t i = 0; i < count; ++i) {
    CommentIdx c = tl.comments[i];
    f.hedge_rate += scan.hedging_full[c] ? 1.0 : 0.0;
    f.mean_length += static_cast<double>(words[c]);
  }
  if (count > 0) {
    f.hedge_rate /= static_cast<double>(count);
    f.mean_length /= static_cast<double>(count);
  }
  return f;
}

}  // namespace detail

// Greedy 1:1 nearest-neighbor matching without replacement. Challenged
// authors are processed in descending pre-volume order; distance is Euclidean
// over z-scored (volume, hedging rate, mean length); candidates are
// never-challenged authors with enough history, their features taken over the
// full history. All ties break toward the smaller author_id, so the pass is
// deterministic and the seed is recorded but never consumed.
inline ShiftAssignment nn_match(const Corpus& corpus,
                                const std::vector<AuthorTimeline>& timelines,
                                const std::map<std::string, AuthorEvent>& events,
                                const CueScan& scan, const std::vector<int>& words,
                                std::uint64_t /*seed*/, std::size_t min_pre = 4) {
  struct Entry {
    std::size_t timeline_index;
    std::size_t pre;
    detail::Features features;
  };
  std::vector<Entry> challenged;
  std::vector<Entry> candidates;
  for (std::size_t t = 0; t < timelines.size(); ++t) {
    const AuthorTimeline& tl = timelines[t];
    auto ev = events.find(tl.author_id);
    if (ev != events.end()) {
      std::size_t pre = detail::pre_count(corpus, tl, ev->second);
      if (pre < min_pre || pre >= tl.comments.size()) continue;  // needs >=1 post
      challenged.push_back({t, pre, detail::segment_features(scan, words, tl, pre)});
    } else {
      if (tl.comments.size() < min_pre) continue;
      candidates.push_back({t, tl.comments.size(),
                            detail::segment_features(scan, words, tl,
                                                     tl.comments.size())});
    }
  }
  ShiftAssignment assignment;
  assignment.n_challenged_eligible = challenged.size();
  if (challenged.empty()) return assignment;
  if (candidates.empty()) throw ConfigError("empty candidate pool for author matching");

  // z-score parameters over everything being matched
  double mean[3] = {0, 0, 0}, sd[3] = {0, 0, 0};
  auto feat = [](const Entry& e, int d) {
    return d == 0 ? e.features.volume : d == 1 ? e.features.hedge_rate : e.features.mean_length;
  };
  std::size_t total = challenged.size() + candidates.size();
  for (int d = 0; d < 3; ++d) {
    for (const auto& e : challenged) mean[d] += feat(e, d);
    for (const auto& e : candidates) mean[d] += feat(e, d);
    mean[d] /= static_cast<double>(total);
    for (const auto& e : challenged) sd[d] += (feat(e, d) - mean[d]) * (feat(e, d) - mean[d]);
    for (const auto& e : candidates) sd[d] += (feat(e, d) - mean[d]) * (feat(e, d) - mean[d]);
    sd[d] = total > 1 ? std::sqrt(sd[d] / static_cast<double>(total - 1)) : 0.0;
  }
  auto zdist = [&](const Entry& a, const Entry& b) {
    double acc = 0.0;
    for (int d = 0; d < 3; ++d) {
      if (sd[d] <= 0.0) continue;  // constant feature carries no signal
      double delta = (feat(a, d) - feat(b, d)) / sd[d];
      acc += delta * delta;
    }
    return acc;
  };

  std::vector<std::size_t> order(challenged.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (challenged[a].pre != challenged[b].pre) return challenged[a].pre > challenged[b].pre;
    return timelines[challenged[a].timeline_index].author_id <
           timelines[challenged[b].timeline_index].author_id;
  });
  std::vector<char> taken(candidates.size(), 0);
  for (std::size_t oi : order) {
    const Entry& chal = challenged[oi];
    std::size_t best = candidates.size();
    double best_dist = 0.0;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      if (taken[ci]) continue;
      double dist = zdist(chal, candidates[ci]);
      if (best == candidates.size() || dist < best_dist ||
          (dist == best_dist &&
           timelines[candidates[ci].timeline_index].author_id <
               timelines[candidates[best].timeline_index].author_id)) {
        best = ci;
        best_dist = dist;
      }
    }
    if (best == candidates.size()) {
      ++assignment.unmatched;
      continue;
    }
    taken[best] = 1;
    const Entry& ctrl = candidates[best];
    // Control pseudo-event at the challenged author's event quantile of the
    // control's own history, clamped so both segments stay non-empty.
    double q = static_cast<double>(chal.pre) /
               static_cast<double>(timelines[chal.timeline_index].comments.size());
    long long m = static_cast<long long>(timelines[ctrl.timeline_index].comments.size());
    long long split = std::llround(q * static_cast<double>(m));
    split = std::clamp(split, 1ll, m - 1);
    assignment.pairs.push_back({AuthorSegment{chal.timeline_index, chal.pre},
                                AuthorSegment{ctrl.timeline_index,
                                              static_cast<std::size_t>(split)}});
  }
  return assignment;
}

struct ShiftEstimate {
  ShiftMetric metric = ShiftMetric::hedging;
  double controlled_shift = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  double p_value = 1.0;
  double effect_size = 0.0;
  std::uint64_t n_challenged = 0;  // eligible challenged authors
  std::uint64_t n_control = 0;     // matched pairs entering the estimate
  std::uint64_t excluded_pairs = 0;
};

namespace detail {

// Pre/post mean difference over a window selection; nullopt drops the member.
struct Window {
  std::size_t pre_begin, pre_end;    // [pre_begin, pre_end)
  std::size_t post_begin, post_end;  // [post_begin, post_end)
};

inline std::optional<double> window_delta(const CueScan& scan,
                                          const std::vector<int>& words,
                                          const AuthorTimeline& tl, ShiftMetric metric,
                                          const Window& w) {
  if (w.pre_end <= w.pre_begin || w.post_end <= w.post_begin) return std::nullopt;
  double pre_sum = 0.0, post_sum = 0.0;
  for (std::size_t i = w.pre_begin; i < w.pre_end; ++i) {
    pre_sum += metric_value(scan, words, metric, tl.comments[i]);
  }
  for (std::size_t i = w.post_begin; i < w.post_end; ++i) {
    post_sum += metric_value(scan, words, metric, tl.comments[i]);
  }
  double pre_mean = pre_sum / static_cast<double>(w.pre_end - w.pre_begin);
  double post_mean = post_sum / static_cast<double>(w.post_end - w.post_begin);
  return post_mean - pre_mean;
}

template <typename WindowFn>
inline ShiftEstimate estimate_shift(const std::vector<AuthorTimeline>& timelines,
                                    const ShiftAssignment& assignment,
                                    const CueScan& scan, const std::vector<int>& words,
                                    ShiftMetric metric, std::uint64_t n_boot,
                                    std::uint64_t n_perm, std::uint64_t seed,
                                    WindowFn&& window_for) {
  ShiftEstimate est;
  est.metric = metric;
  est.n_challenged = assignment.n_challenged_eligible;
  std::vector<double> diffs;
  for (const auto& [chal, ctrl] : assignment.pairs) {
    auto wc = window_for(timelines[chal.timeline_index], chal);
    auto wt = window_for(timelines[ctrl.timeline_index], ctrl);
    if (!wc || !wt) {
      ++est.excluded_pairs;
      continue;
    }
    auto dc = window_delta(scan, words, timelines[chal.timeline_index], metric, *wc);
    auto dt = window_delta(scan, words, timelines[ctrl.timeline_index], metric, *wt);
    if (!dc || !dt) {
      ++est.excluded_pairs;
      continue;
    }
    diffs.push_back(*dc - *dt);
  }
  est.n_control = diffs.size();
  if (diffs.empty()) return est;
  double total = 0.0;
  for (double d : diffs) total += d;
  est.controlled_shift = total / static_cast<double>(diffs.size());
  if (diffs.size() >= 2) {
    auto [lo, hi] = bootstrap_ci(diffs, n_boot, 0.95,
                                 mix_seed(seed, fnv1a("authorshift-boot")));
    est.ci_low = lo;
    est.ci_high = hi;
  } else {
    est.ci_low = est.ci_high = est.controlled_shift;
  }
  InferenceResult flip =
      sign_flip_paired(diffs, n_perm, mix_seed(seed, fnv1a("authorshift-perm")));
  est.p_value = flip.p_value;
  double sd = sample_sd(diffs);
  est.effect_size = sd > 0.0 ? est.controlled_shift / sd : 0.0;
  return est;
}

}  // namespace detail

// Real-event controlled shift; `drop` removes the first post-event comments
// from both pair members (the durability re-estimate; drop=0 is the headline
// number).
inline ShiftEstimate controlled_shift(const std::vector<AuthorTimeline>& timelines,
                                      const ShiftAssignment& assignment,
                                      const CueScan& scan, const std::vector<int>& words,
                                      ShiftMetric metric, std::uint64_t n_boot,
                                      std::uint64_t n_perm, std::uint64_t seed,
                                      std::size_t drop = 0) {
  return detail::estimate_shift(
      timelines, assignment, scan, words, metric, n_boot, n_perm, seed,
      [drop](const AuthorTimeline& tl, const AuthorSegment& seg)
          -> std::optional<detail::Window> {
        std::size_t post_begin = seg.pre + drop;
        if (post_begin >= tl.comments.size()) return std::nullopt;
        return detail::Window{0, seg.pre, post_begin, tl.comments.size()};
      });
}

inline ShiftEstimate durability(const std::vector<AuthorTimeline>& timelines,
                                const ShiftAssignment& assignment, const CueScan& scan,
                                const std::vector<int>& words, ShiftMetric metric,
                                std::uint64_t n_boot, std::uint64_t n_perm,
                                std::uint64_t seed, std::size_t drop) {
  return controlled_shift(timelines, assignment, scan, words, metric, n_boot,
                          n_perm, seed, drop);
}

// Sham event inside the pre-challenge history: the pre segment splits at the
// given quantile and the post-sham window ends at the real event, so genuine
// post-challenge behavior never leaks into the placebo.
inline ShiftEstimate placebo_shift(const std::vector<AuthorTimeline>& timelines,
                                   const ShiftAssignment& assignment, const CueScan& scan,
                                   const std::vector<int>& words, ShiftMetric metric,
                                   std::uint64_t n_boot, std::uint64_t n_perm,
                                   std::uint64_t seed, double quantile = 0.25) {
  if (!(quantile > 0.0) || !(quantile < 1.0)) {
    throw ConfigError("placebo quantile must be in (0,1)");
  }
  return detail::estimate_shift(
      timelines, assignment, scan, words, metric, n_boot, n_perm, seed,
      [quantile](const AuthorTimeline&, const AuthorSegment& seg)
          -> std::optional<detail::Window> {
        if (seg.pre < 2) return std::nullopt;
        long long n = static_cast<long long>(seg.pre);
        long long split = std::llround(quantile * static_cast<double>(n));
        split = std::clamp(split, 1ll, n - 1);
        return detail::Window{0, static_cast<std::size_t>(split),
                              static_cast<std::size_t>(split), seg.pre};
      });
}

// Pre-period trend of challenged authors: second-half mean minus first-half
// mean of the pre segment, odd counts giving the first half the extra
// comment; averaged across authors.
struct DriftResult {
  ShiftMetric metric = ShiftMetric::hedging;
  double mean_drift = 0.0;
  std::uint64_t n_authors = 0;
};

inline DriftResult pre_period_drift(const Corpus& corpus,
                                    const std::vector<AuthorTimeline>& timelines,
                                    const std::map<std::string, AuthorEvent>& events,
                                    const CueScan& scan, const std::vector<int>& words,
                                    ShiftMetric metric) {
  DriftResult res;
  res.metric = metric;
  double total = 0.0;
  for (const auto& tl : timelines) {
    auto ev = events.find(tl.author_id);
    if (ev == events.end()) continue;
    std::size_t pre = detail::pre_count(corpus, tl, ev->second);
    if (pre < 2) continue;
    std::size_t first = (pre + 1) / 2;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < first; ++i) {
      s1 += metric_value(scan, words, metric, tl.comments[i]);
    }
    for (std::size_t i = first; i < pre; ++i) {
      s2 += metric_value(scan, words, metric, tl.comments[i]);
    }
    total += s2 / static_cast<double>(pre - first) - s1 / static_cast<double>(first);
    ++res.n_authors;
  }
  if (res.n_authors > 0) res.mean_drift = total / static_cast<double>(res.n_authors);
  return res;
}

}  // namespace threadloop
