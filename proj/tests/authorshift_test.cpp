#include <gtest/gtest.h>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "threadloop/authorshift.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/episodes.hpp"
#include "threadloop/lexicon.hpp"

using namespace threadloop;

namespace {

void add(Corpus& c, const std::string& community, const std::string& id,
         const std::string& post, const std::string& parent,
         const std::string& author, std::int64_t ts, const std::string& body) {
  Comment cm;
  cm.comment_id = id;
  cm.post_id = post;
  cm.author_id = author;
  cm.timestamp = ts;
  cm.body = body;
  cm.community = community;
  if (!parent.empty()) {
    cm.parent_id = parent;
    cm.has_parent = true;
  }
  c.comments.push_back(std::move(cm));
}

// Community "s": author tgt gets challenged at ts 450 (x01) with four
// comments before and two after. Word counts per tgt comment: 3,4,4,7 pre
// and 7,6 post; hedging pattern 0,0,0,0 pre and 1,1 post. Control candidate
// ctl has six comments, hedging only in the last one, lengths 4,4,5,5,5,6.
// Candidate far is kept distant on every matching feature.
// Community "g": two challenged authors but a single candidate, so the
// second greedy pick goes unmatched.
Corpus shift_corpus() {
  Corpus c;
  add(c, "s", "h01", "p1", "", "host", 10, "opening words for the thread");
  add(c, "s", "a01", "p1", "h01", "tgt", 100, "plain words here");
  add(c, "s", "a02", "p1", "h01", "tgt", 200, "gentle reply follows now");
  add(c, "s", "a03", "p1", "h01", "tgt", 300, "the meeting went ahead");
  add(c, "s", "a04", "p1", "h01", "tgt", 400, "the budget numbers look strange to me");
  add(c, "s", "x01", "p1", "a04", "chl", 450, "that's wrong according to the ledger");
  add(c, "s", "a05", "p1", "h01", "tgt", 500, "perhaps the tally needs a second pass");
  add(c, "s", "a06", "p1", "h01", "tgt", 600, "maybe we should audit the ledger");
  add(c, "s", "x02", "p1", "a06", "chl", 650, "citation needed for that figure");
  add(c, "s", "b01", "p1", "h01", "ctl", 110, "steady notes all around");
  add(c, "s", "b02", "p1", "h01", "ctl", 210, "the draft reads cleanly");
  add(c, "s", "b03", "p1", "h01", "ctl", 310, "fresh coffee helps the team");
  add(c, "s", "b04", "p1", "h01", "ctl", 410, "the final copy ships tonight");
  add(c, "s", "b05", "p1", "h01", "ctl", 510, "quiet afternoon in the office");
  add(c, "s", "b06", "p1", "h01", "ctl", 610, "it seems the printer jammed again");
  for (int i = 1; i <= 12; ++i) {
    std::string id = "c" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    add(c, "s", id, "p1", "h01", "far", 1000 + 10 * i,
        "it seems the long report keeps growing longer every single day somehow truly");
  }

  add(c, "g", "g01", "p3", "", "ghost", 10, "opening remark for this thread");
  for (int i = 1; i <= 5; ++i) {
    add(c, "g", "ga" + std::to_string(i), "p3", "g01", "gaa", 100 * i,
        "steady update item");
    add(c, "g", "gb" + std::to_string(i), "p3", "g01", "gab", 100 * i + 5,
        "steady update item");
  }
  add(c, "g", "gx1", "p3", "ga5", "gch", 550, "source?");
  add(c, "g", "gx2", "p3", "gb5", "gch", 555, "source?");
  add(c, "g", "ga6", "p3", "g01", "gaa", 600, "steady update item");
  add(c, "g", "gb6", "p3", "g01", "gab", 605, "steady update item");
  for (int i = 1; i <= 6; ++i) {
    add(c, "g", "gc" + std::to_string(i), "p3", "g01", "gcc", 100 * i + 10,
        "steady update item");
  }
  c.finalize();
  return c;
}

struct Prepared {
  Corpus corpus;
  LexiconSet lexicons;
  CueScan scan;
  std::vector<int> words;
  std::vector<ChallengeEpisode> episodes;

  Prepared() : corpus(shift_corpus()), lexicons(builtin_lexicons()) {
    scan = scan_corpus(corpus, lexicons);
    words = word_counts(corpus);
    episodes = extract_challenges(corpus, scan.challenge_full);
  }
};

const Prepared& prepared() {
  static Prepared p;
  return p;
}

std::size_t timeline_of(const std::vector<AuthorTimeline>& tls,
                        const std::string& author) {
  for (std::size_t i = 0; i < tls.size(); ++i) {
    if (tls[i].author_id == author) return i;
  }
  throw std::runtime_error("author missing: " + author);
}

std::vector<std::string> ids_of(const Corpus& c, const std::vector<CommentIdx>& v) {
  std::vector<std::string> out;
  for (CommentIdx i : v) out.push_back(c.at(i).comment_id);
  return out;
}

}  // namespace

TEST(Timelines, GroupsPerAuthorInTimestampOrder) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  ASSERT_EQ(tls.size(), 5u);  // chl, ctl, far, host, tgt
  const auto& tgt = tls[timeline_of(tls, "tgt")];
  EXPECT_EQ(ids_of(p.corpus, tgt.comments),
            (std::vector<std::string>{"a01", "a02", "a03", "a04", "a05", "a06"}));
  const auto& chl = tls[timeline_of(tls, "chl")];
  EXPECT_EQ(ids_of(p.corpus, chl.comments),
            (std::vector<std::string>{"x01", "x02"}));
}

TEST(FirstChallenge, KeepsEarliestEventPerAuthor) {
  const auto& p = prepared();
  auto events = first_challenge_events(p.corpus, p.episodes, "s");
  ASSERT_EQ(events.size(), 1u);  // tgt challenged twice, one event survives
  ASSERT_TRUE(events.count("tgt"));
  EXPECT_EQ(events.at("tgt").ts, 450);
  EXPECT_EQ(events.at("tgt").challenge_id, "x01");

  auto g_events = first_challenge_events(p.corpus, p.episodes, "g");
  ASSERT_EQ(g_events.size(), 2u);
  EXPECT_EQ(g_events.at("gaa").challenge_id, "gx1");
  EXPECT_EQ(g_events.at("gab").challenge_id, "gx2");
}

TEST(PreCount, StrictTimestampThenIdOrder) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  const auto& tgt = tls[timeline_of(tls, "tgt")];
  EXPECT_EQ(detail::pre_count(p.corpus, tgt, {450, "x01"}), 4u);
  // a timeline comment at the event timestamp splits on comment_id
  EXPECT_EQ(detail::pre_count(p.corpus, tgt, {500, "a00"}), 4u);  // "a05" > "a00"
  EXPECT_EQ(detail::pre_count(p.corpus, tgt, {500, "a99"}), 5u);  // "a05" < "a99"
  EXPECT_EQ(detail::pre_count(p.corpus, tgt, {0, "zzz"}), 0u);
  EXPECT_EQ(detail::pre_count(p.corpus, tgt, {99999, "zzz"}), 6u);
}

TEST(MetricValue, AllThreeMetrics) {
  const auto& p = prepared();
  CommentIdx a05 = kNoComment, x01 = kNoComment;
  for (CommentIdx i = 0; i < p.corpus.size(); ++i) {
    if (p.corpus.at(i).comment_id == "a05") a05 = i;
    if (p.corpus.at(i).comment_id == "x01") x01 = i;
  }
  ASSERT_NE(a05, kNoComment);
  EXPECT_DOUBLE_EQ(metric_value(p.scan, p.words, ShiftMetric::hedging, a05), 1.0);
  EXPECT_DOUBLE_EQ(metric_value(p.scan, p.words, ShiftMetric::challenge_cue, a05), 0.0);
  EXPECT_DOUBLE_EQ(metric_value(p.scan, p.words, ShiftMetric::length, a05), 7.0);
  EXPECT_DOUBLE_EQ(metric_value(p.scan, p.words, ShiftMetric::challenge_cue, x01), 1.0);
  EXPECT_DOUBLE_EQ(metric_value(p.scan, p.words, ShiftMetric::length, x01), 6.0);
  EXPECT_STREQ(shift_metric_name(ShiftMetric::length), "length");
}

TEST(NnMatch, PicksTheNearestCandidateByZScoredFeatures) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  auto events = first_challenge_events(p.corpus, p.episodes, "s");
  ShiftAssignment a = nn_match(p.corpus, tls, events, p.scan, p.words, 42, 4);
  EXPECT_EQ(a.n_challenged_eligible, 1u);
  EXPECT_EQ(a.unmatched, 0u);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(tls[a.pairs[0].first.timeline_index].author_id, "tgt");
  EXPECT_EQ(tls[a.pairs[0].second.timeline_index].author_id, "ctl");
  EXPECT_EQ(a.pairs[0].first.pre, 4u);
  EXPECT_EQ(a.pairs[0].second.pre, 4u);  // llround(4/6 * 6) = 4

  // the recorded seed is never consumed, so it cannot move the assignment
  ShiftAssignment b = nn_match(p.corpus, tls, events, p.scan, p.words, 999, 4);
  EXPECT_EQ(a.pairs[0].second.timeline_index, b.pairs[0].second.timeline_index);
}

TEST(NnMatch, EligibilityRules) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  auto events = first_challenge_events(p.corpus, p.episodes, "s");

  // min_pre above target history => no eligible challenged authors
  ShiftAssignment none = nn_match(p.corpus, tls, events, p.scan, p.words, 1, 5);
  EXPECT_EQ(none.n_challenged_eligible, 0u);
  EXPECT_TRUE(none.pairs.empty());

  // an event after the author's whole history leaves no post segment
  std::map<std::string, AuthorEvent> late;
  late["ctl"] = {100000, "zzz"};
  ShiftAssignment no_post = nn_match(p.corpus, tls, late, p.scan, p.words, 1, 4);
  EXPECT_EQ(no_post.n_challenged_eligible, 0u);
  EXPECT_TRUE(no_post.pairs.empty());
}

TEST(NnMatch, UnmatchedWhenCandidatesRunOut) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "g");
  auto events = first_challenge_events(p.corpus, p.episodes, "g");
  ShiftAssignment a = nn_match(p.corpus, tls, events, p.scan, p.words, 7, 4);
  EXPECT_EQ(a.n_challenged_eligible, 2u);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.unmatched, 1u);
  // equal pre-volume ties resolve toward the smaller author id, so gaa
  // claims the only candidate
  EXPECT_EQ(tls[a.pairs[0].first.timeline_index].author_id, "gaa");
  EXPECT_EQ(tls[a.pairs[0].second.timeline_index].author_id, "gcc");
  EXPECT_EQ(a.pairs[0].second.pre, 5u);  // llround(5/6 * 6) = 5
}

TEST(NnMatch, EmptyCandidatePoolThrows) {
  Corpus c;
  add(c, "u", "u01", "p9", "", "uh", 10, "opening line for this post");
  for (int i = 2; i <= 5; ++i) {
    add(c, "u", "u0" + std::to_string(i), "p9", "u01", "upre", 100 * i,
        "regular remark without surprises");
  }
  add(c, "u", "u06", "p9", "u05", "uchal", 900, "source?");
  add(c, "u", "u07", "p9", "u01", "upre", 1000, "closing thought");
  c.finalize();
  LexiconSet lex = builtin_lexicons();
  CueScan scan = scan_corpus(c, lex);
  auto words = word_counts(c);
  auto episodes = extract_challenges(c, scan.challenge_full);
  auto tls = build_timelines(c, "u");
  auto events = first_challenge_events(c, episodes, "u");
  ASSERT_EQ(events.count("upre"), 1u);
  EXPECT_THROW(nn_match(c, tls, events, scan, words, 1, 4), ConfigError);
}

TEST(ControlledShift, HandComputedPair) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  auto events = first_challenge_events(p.corpus, p.episodes, "s");
  ShiftAssignment a = nn_match(p.corpus, tls, events, p.scan, p.words, 42, 4);

  // hedging: target jumps 0 -> 1, control 0 -> 0.5
  ShiftEstimate hedge = controlled_shift(tls, a, p.scan, p.words,
                                         ShiftMetric::hedging, 200, 100, 5);
  EXPECT_DOUBLE_EQ(hedge.controlled_shift, 0.5);
  EXPECT_EQ(hedge.n_challenged, 1u);
  EXPECT_EQ(hedge.n_control, 1u);
  EXPECT_EQ(hedge.excluded_pairs, 0u);
  EXPECT_DOUBLE_EQ(hedge.ci_low, 0.5);  // single diff: degenerate interval
  EXPECT_DOUBLE_EQ(hedge.ci_high, 0.5);
  EXPECT_DOUBLE_EQ(hedge.p_value, 1.0);  // sign flip on one difference
  EXPECT_DOUBLE_EQ(hedge.effect_size, 0.0);

  // words per comment: target 4.5 -> 6.5, control 4.5 -> 5.5
  ShiftEstimate len = controlled_shift(tls, a, p.scan, p.words,
                                       ShiftMetric::length, 200, 100, 5);
  EXPECT_DOUBLE_EQ(len.controlled_shift, 1.0);

  // no challenge cues anywhere in either member's history
  ShiftEstimate cue = controlled_shift(tls, a, p.scan, p.words,
                                       ShiftMetric::challenge_cue, 200, 100, 5);
  EXPECT_DOUBLE_EQ(cue.controlled_shift, 0.0);
}

TEST(Durability, DropsEarlyPostCommentsFromBothSides) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  auto events = first_challenge_events(p.corpus, p.episodes, "s");
  ShiftAssignment a = nn_match(p.corpus, tls, events, p.scan, p.words, 42, 4);

  ShiftEstimate base = durability(tls, a, p.scan, p.words, ShiftMetric::hedging,
                                  200, 100, 5, 0);
  EXPECT_DOUBLE_EQ(base.controlled_shift, 0.5);  // drop=0 is the headline run

  // after dropping one comment both survivors are the hedged finale: tied
  ShiftEstimate d1 = durability(tls, a, p.scan, p.words, ShiftMetric::hedging,
                                200, 100, 5, 1);
  EXPECT_DOUBLE_EQ(d1.controlled_shift, 0.0);
  EXPECT_EQ(d1.n_control, 1u);

  // dropping past the end of the post window excludes the pair
  ShiftEstimate d2 = durability(tls, a, p.scan, p.words, ShiftMetric::hedging,
                                200, 100, 5, 2);
  EXPECT_EQ(d2.n_control, 0u);
  EXPECT_EQ(d2.excluded_pairs, 1u);
  EXPECT_DOUBLE_EQ(d2.controlled_shift, 0.0);
}

TEST(Placebo, ShamSplitInsidePreHistory) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  auto events = first_challenge_events(p.corpus, p.episodes, "s");
  ShiftAssignment a = nn_match(p.corpus, tls, events, p.scan, p.words, 42, 4);

  ShiftEstimate sham = placebo_shift(tls, a, p.scan, p.words,
                                     ShiftMetric::hedging, 200, 100, 5, 0.5);
  EXPECT_DOUBLE_EQ(sham.controlled_shift, 0.0);  // pre period has no hedging
  EXPECT_EQ(sham.n_control, 1u);

  // pre segments shorter than two comments cannot host a sham event
  ShiftAssignment tiny;
  tiny.n_challenged_eligible = 1;
  tiny.pairs.push_back({AuthorSegment{timeline_of(tls, "tgt"), 1},
                        AuthorSegment{timeline_of(tls, "ctl"), 1}});
  ShiftEstimate skip = placebo_shift(tls, tiny, p.scan, p.words,
                                     ShiftMetric::hedging, 200, 100, 5, 0.5);
  EXPECT_EQ(skip.n_control, 0u);
  EXPECT_EQ(skip.excluded_pairs, 1u);

  EXPECT_THROW(placebo_shift(tls, a, p.scan, p.words, ShiftMetric::hedging,
                             200, 100, 5, 0.0),
               ConfigError);
  EXPECT_THROW(placebo_shift(tls, a, p.scan, p.words, ShiftMetric::hedging,
                             200, 100, 5, 1.0),
               ConfigError);
}

TEST(EstimateShift, MultiplePairsFeedInference) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  std::size_t tgt = timeline_of(tls, "tgt");
  std::size_t ctl = timeline_of(tls, "ctl");
  std::size_t far = timeline_of(tls, "far");
  ShiftAssignment two;
  two.n_challenged_eligible = 2;
  two.pairs.push_back({AuthorSegment{tgt, 4}, AuthorSegment{ctl, 4}});
  two.pairs.push_back({AuthorSegment{far, 6}, AuthorSegment{far, 6}});

  // diffs are {0.5, 0.0}: far hedges everywhere, so its delta cancels
  ShiftEstimate est = controlled_shift(tls, two, p.scan, p.words,
                                       ShiftMetric::hedging, 500, 100, 5);
  EXPECT_DOUBLE_EQ(est.controlled_shift, 0.25);
  EXPECT_EQ(est.n_control, 2u);
  EXPECT_NEAR(est.effect_size, 0.7071067811865476, 1e-12);  // 0.25 / sd{0.5,0}
  EXPECT_DOUBLE_EQ(est.p_value, 1.0);  // every sign pattern reaches |0.5|
  EXPECT_LE(est.ci_low, est.ci_high);
  EXPECT_GE(est.ci_low, 0.0);
  EXPECT_LE(est.ci_high, 0.5);

  ShiftEstimate again = controlled_shift(tls, two, p.scan, p.words,
                                         ShiftMetric::hedging, 500, 100, 5);
  EXPECT_DOUBLE_EQ(est.ci_low, again.ci_low);
  EXPECT_DOUBLE_EQ(est.ci_high, again.ci_high);
}

TEST(PrePeriodDrift, SecondHalfMinusFirstHalf) {
  const auto& p = prepared();
  auto tls = build_timelines(p.corpus, "s");
  auto events = first_challenge_events(p.corpus, p.episodes, "s");

  // pre lengths 3,4,4,7: halves {3,4} vs {4,7} under the odd-goes-first rule
  DriftResult len = pre_period_drift(p.corpus, tls, events, p.scan, p.words,
                                     ShiftMetric::length);
  EXPECT_EQ(len.n_authors, 1u);
  EXPECT_DOUBLE_EQ(len.mean_drift, 2.0);

  DriftResult hedge = pre_period_drift(p.corpus, tls, events, p.scan, p.words,
                                       ShiftMetric::hedging);
  EXPECT_DOUBLE_EQ(hedge.mean_drift, 0.0);
  EXPECT_EQ(hedge.n_authors, 1u);

  // a pre segment of one comment is too short to split
  std::map<std::string, AuthorEvent> early;
  early["ctl"] = {115, "zzz"};
  DriftResult none = pre_period_drift(p.corpus, tls, early, p.scan, p.words,
                                      ShiftMetric::length);
  EXPECT_EQ(none.n_authors, 0u);
  EXPECT_DOUBLE_EQ(none.mean_drift, 0.0);
}

TEST(PrePeriodDrift, OddPreGivesFirstHalfTheExtraComment) {
  Corpus c;
  add(c, "d", "d01", "p5", "", "root", 5, "opening line");
  add(c, "d", "d02", "p5", "d01", "tal", 100, "one two");
  add(c, "d", "d03", "p5", "d01", "tal", 200, "one two three four");
  add(c, "d", "d04", "p5", "d01", "tal", 300, "one two three four five six");
  add(c, "d", "d05", "p5", "d03", "que", 400, "source?");
  add(c, "d", "d06", "p5", "d01", "tal", 500, "closing words");
  c.finalize();
  LexiconSet lex = builtin_lexicons();
  CueScan scan = scan_corpus(c, lex);
  auto words = word_counts(c);
  auto episodes = extract_challenges(c, scan.challenge_full);
  auto tls = build_timelines(c, "d");
  auto events = first_challenge_events(c, episodes, "d");
  // pre = 3, first half holds two comments: mean(2,4)=3 then mean(6)=6
  DriftResult drift = pre_period_drift(c, tls, events, scan, words,
                                       ShiftMetric::length);
  EXPECT_EQ(drift.n_authors, 1u);
  EXPECT_DOUBLE_EQ(drift.mean_drift, 3.0);
}
