#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "threadloop/authorshift.hpp"
#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/correction.hpp"
#include "threadloop/episodes.hpp"
#include "threadloop/lexicon.hpp"
#include "threadloop/rng.hpp"
#include "threadloop/structure.hpp"
#include "threadloop/text.hpp"
#include "vendor/json.hpp"

namespace threadloop {

struct SynthConfig {
  std::uint64_t n_posts = 100;
  bool fixed_comments = false;      // geometric around the mean otherwise
  double comments_per_post = 12.0;  // fixed count or geometric mean, >= 1
  double p_nest = 0.5;       // nested reply instead of top-level
  double p_challenge = 0.1;  // nested comment carries a challenge cue
  double p_followup = 0.4;   // challenged author replies directly
  double p_repair = 0.5;     // that reply carries a repair cue
  double p_hedge = 0.2;      // any body carries a hedging cue
  std::uint64_t n_authors = 40;
  double author_skew = 1.0;  // Zipf exponent; 0 = uniform
  double time_span_days = 14.0;
  std::uint64_t n_communities = 1;
  std::uint64_t seed = 0;
  Platform platform = Platform::agent_forum;
  bool verify_bodies = true;  // assert detector outcomes on every body
  std::int64_t start_epoch = 1609459200;  // 2021-01-01T00:00:00Z

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError(std::string("synth probability out of range: ") + name);
      }
    };
    prob(p_nest, "p_nest");
    prob(p_challenge, "p_challenge");
    prob(p_followup, "p_followup");
    prob(p_repair, "p_repair");
    prob(p_hedge, "p_hedge");
    if (n_posts < 1) throw ConfigError("synth needs n_posts >= 1");
    if (n_authors < 1) throw ConfigError("synth needs n_authors >= 1");
    if (p_challenge > 0.0 && n_authors < 2) {
      throw ConfigError("challenges need at least 2 authors");
    }
    if (comments_per_post < 1.0) throw ConfigError("comments_per_post must be >= 1");
    if (!(time_span_days > 0.0)) throw ConfigError("time_span_days must be > 0");
    if (n_communities < 1) throw ConfigError("n_communities must be >= 1");
    if (n_communities > n_posts) throw ConfigError("more communities than posts");
  }
};

// Everything the generator knows to be true about its output, recorded with
// independent brute-force scans over its own bookkeeping rather than through
// the analysis code paths.
struct EpisodeTruth {
  std::string challenge_id, challenged_id, challenged_author, post_id, community;
  std::int64_t ts = 0;
  bool strict_challenge = false;
  bool followup = false;
  bool any_reply = false;
  bool repair_direct_full = false, repair_direct_strict = false;
  bool repair_k3_full = false, repair_k3_strict = false;
  bool repair_k5_full = false, repair_k5_strict = false;
  bool repair_k10_full = false, repair_k10_strict = false;
  bool repair_t1_full = false, repair_t1_strict = false;
  bool repair_t6_full = false, repair_t6_strict = false;
  bool repair_t24_full = false, repair_t24_strict = false;
  bool orig_return = false;
  bool multi_turn = false;
  bool subtree_cue_full = false, subtree_cue_strict = false;
  std::uint64_t subtree_size = 0;
  int subtree_depth = 0;
};

struct AuthorShiftTruth {
  std::string community, author, event_challenge_id;
  std::int64_t event_ts = 0;
  std::uint64_t pre_n = 0, post_n = 0;
  std::uint64_t pre_hedge = 0, post_hedge = 0;
  std::uint64_t pre_cue = 0, post_cue = 0;
  std::uint64_t pre_words = 0, post_words = 0;
};

struct GroundTruth {
  std::uint64_t total_comments = 0;
  std::uint64_t nested_comments = 0;
  std::uint64_t hedge_comments = 0;
  std::map<std::string, std::uint64_t> community_comments;
  std::map<std::string, std::uint64_t> community_nested;
  std::map<std::string, std::uint64_t> community_posts;
  std::map<std::string, std::map<std::string, std::uint64_t>> community_author_nested;
  std::map<std::string, int> depth_by_id;
  std::vector<EpisodeTruth> episodes;
  std::vector<AuthorShiftTruth> author_shifts;

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
};

namespace synth_detail {

// Nonsense filler vocabulary; each token and every token junction is checked
// cue-free at generation setup.
inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "zerv", "broll", "quent",  "smath", "drib", "plono", "vusk", "crade",
      "welt", "farn",  "tredge", "skell", "vant", "modge", "hurv", "glomp"};
  return words;
}

struct InjectableCue {
  std::string text;
  bool in_strict = false;
};

inline bool hits_category(const LexiconSet& lex, CueCategory cat, const std::string& s) {
  return detect(lex.get(cat, LexiconVariant::full), s);
}

// A cue is injectable for its category only when it triggers no other
// category's detector; otherwise a single injection would flip two flags and
// the recorded truth could not stay exact.
inline std::vector<InjectableCue> injectable_cues(const LexiconSet& lex, CueCategory cat) {
  std::vector<InjectableCue> out;
  const CueLexicon& full = lex.get(cat, LexiconVariant::full);
  const CueLexicon& strict = lex.get(cat, LexiconVariant::strict);
  for (const auto& cue : full.cues) {
    bool clean = true;
    for (CueCategory other :
         {CueCategory::challenge, CueCategory::repair, CueCategory::hedging}) {
      if (other == cat) continue;
      if (hits_category(lex, other, cue)) {
        clean = false;
        break;
      }
    }
    if (!clean) continue;
    bool in_strict =
        std::find(strict.cues.begin(), strict.cues.end(), cue) != strict.cues.end();
    out.push_back({cue, in_strict});
  }
  if (out.empty()) throw InvariantError("no injectable cues for category");
  return out;
}

// Pairwise junction audit: no token adjacency may light a category that
// neither token belongs to.
inline void audit_vocabulary(const LexiconSet& lex,
                             const std::vector<InjectableCue>& challenge,
                             const std::vector<InjectableCue>& repair,
                             const std::vector<InjectableCue>& hedging) {
  struct Token {
    std::string text;
    int cat;  // -1 filler
  };
  std::vector<Token> tokens;
  for (const auto& w : filler_words()) tokens.push_back({w, -1});
  for (const auto& c : challenge) tokens.push_back({c.text, 0});
  for (const auto& c : repair) tokens.push_back({c.text, 1});
  for (const auto& c : hedging) tokens.push_back({c.text, 2});
  const CueCategory cats[3] = {CueCategory::challenge, CueCategory::repair,
                               CueCategory::hedging};
  for (const auto& t : tokens) {
    if (t.cat >= 0) continue;
    for (int c = 0; c < 3; ++c) {
      if (hits_category(lex, cats[c], t.text)) {
        throw InvariantError("filler word triggers a cue detector: " + t.text);
      }
    }
  }
  for (const auto& a : tokens) {
    for (const auto& b : tokens) {
      std::string joined = a.text + " " + b.text;
      for (int c = 0; c < 3; ++c) {
        if (c == a.cat || c == b.cat) continue;
        if (hits_category(lex, cats[c], joined)) {
          throw InvariantError("token junction triggers a foreign detector: '" +
                               joined + "'");
        }
      }
    }
  }
}

struct GenComment {
  int parent = -1;  // index within post, -1 = top-level
  std::uint64_t author = 0;
  std::int64_t ts = 0;
  int challenge_cue = -1;  // index into injectable list, -1 = none
  int repair_cue = -1;
  int hedge_cue = -1;
  std::string id;
  std::string body;
};

struct GenPost {
  std::string post_id;
  std::string community;
  std::vector<GenComment> comments;
};

inline std::string pad_id(const char* prefix, std::uint64_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*llu", prefix, width,
                static_cast<unsigned long long>(v));
  return buf;
}

// Zipf-like author draw: weight 1/(rank+1)^skew over ranks 0..n-1.
struct AuthorSampler {
  std::vector<double> cumulative;
  AuthorSampler(std::uint64_t n, double skew) {
    cumulative.reserve(n);
    double acc = 0.0;
    for (std::uint64_t r = 0; r < n; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r + 1), skew);
      cumulative.push_back(acc);
    }
  }
  std::uint64_t draw(Rng& rng) const {
    double u = rng.uniform01() * cumulative.back();
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<std::uint64_t>(it - cumulative.begin());
  }
};

inline int depth_of(const std::vector<GenComment>& post, int idx) {
  int d = 0;
  for (int cur = post[idx].parent; cur != -1; cur = post[cur].parent) ++d;
  return d;
}

// Steps from anchor down to idx when idx sits in the anchor's subtree, else -1.
inline int rel_depth_from(const std::vector<GenComment>& post, int anchor, int idx) {
  int steps = 0;
  for (int cur = idx; cur != -1; cur = post[cur].parent) {
    if (cur == anchor) return steps;
    ++steps;
  }
  return -1;
}

}  // namespace synth_detail

struct SynthResult {
  Corpus corpus;
  GroundTruth truth;
};

inline SynthResult generate(const SynthConfig& config) {
  config.validate();
  const LexiconSet lexicons = builtin_lexicons();
  const auto inj_challenge = synth_detail::injectable_cues(lexicons, CueCategory::challenge);
  const auto inj_repair = synth_detail::injectable_cues(lexicons, CueCategory::repair);
  const auto inj_hedge = synth_detail::injectable_cues(lexicons, CueCategory::hedging);
  synth_detail::audit_vocabulary(lexicons, inj_challenge, inj_repair, inj_hedge);

  Rng rng(config.seed);
  synth_detail::AuthorSampler authors(config.n_authors, config.author_skew);
  const auto& fillers = synth_detail::filler_words();
  const std::int64_t span_secs =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(config.time_span_days * 86400.0));

  std::vector<synth_detail::GenPost> posts;
  std::uint64_t comment_counter = 0;

  auto build_body = [&](int challenge_cue, int repair_cue, int hedge_cue) {
    std::vector<std::string> tokens;
    std::size_t n_fill = 3 + static_cast<std::size_t>(rng.below(6));
    for (std::size_t i = 0; i < n_fill; ++i) {
      tokens.push_back(fillers[rng.below(fillers.size())]);
    }
    auto insert_cue = [&](const std::string& text) {
      std::size_t pos = static_cast<std::size_t>(rng.below(tokens.size() + 1));
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos), text);
    };
    if (challenge_cue >= 0) insert_cue(inj_challenge[challenge_cue].text);
    if (repair_cue >= 0) insert_cue(inj_repair[repair_cue].text);
    if (hedge_cue >= 0) insert_cue(inj_hedge[hedge_cue].text);
    std::string body;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) body.push_back(' ');
      body += tokens[i];
    }
    return body;
  };

  for (std::uint64_t p = 0; p < config.n_posts; ++p) {
    synth_detail::GenPost post;
    post.post_id = synth_detail::pad_id("p", p, 6);
    post.community = synth_detail::pad_id("syn", p % config.n_communities, 2);

    std::uint64_t organic;
    if (config.fixed_comments) {
      organic = static_cast<std::uint64_t>(std::llround(config.comments_per_post));
    } else {
      double q = 1.0 / config.comments_per_post;
      double u = rng.uniform01();
      if (q >= 1.0) {
        organic = 1;
      } else {
        organic = 1 + static_cast<std::uint64_t>(std::log1p(-u) / std::log1p(-q));
      }
    }
    organic = std::max<std::uint64_t>(1, std::min<std::uint64_t>(organic, 5000));

    std::int64_t base_ts =
        config.start_epoch + static_cast<std::int64_t>(rng.below(
                                 static_cast<std::uint64_t>(span_secs)));
    auto next_ts = [&]() {
      return base_ts + static_cast<std::int64_t>(post.comments.size()) * 60;
    };

    for (std::uint64_t c = 0; c < organic; ++c) {
      synth_detail::GenComment gc;
      gc.ts = next_ts();
      gc.author = authors.draw(rng);
      bool nested = !post.comments.empty() && rng.bernoulli(config.p_nest);
      if (nested) {
        gc.parent = static_cast<int>(rng.below(post.comments.size()));
        if (rng.bernoulli(config.p_challenge)) {
          if (gc.author == post.comments[gc.parent].author) {
            gc.author = (gc.author + 1) % config.n_authors;
          }
          gc.challenge_cue = static_cast<int>(rng.below(inj_challenge.size()));
        }
      }
      if (rng.bernoulli(config.p_hedge)) {
        gc.hedge_cue = static_cast<int>(rng.below(inj_hedge.size()));
      }
      gc.id = synth_detail::pad_id("c", comment_counter++, 8);
      gc.body = build_body(gc.challenge_cue, gc.repair_cue, gc.hedge_cue);
      post.comments.push_back(std::move(gc));

      // Scheduled followup lands immediately after its challenge.
      const synth_detail::GenComment& placed = post.comments.back();
      if (placed.challenge_cue >= 0 && rng.bernoulli(config.p_followup)) {
        synth_detail::GenComment fu;
        fu.ts = next_ts();
        fu.parent = static_cast<int>(post.comments.size()) - 1;
        fu.author = post.comments[placed.parent].author;
        if (rng.bernoulli(config.p_repair)) {
          fu.repair_cue = static_cast<int>(rng.below(inj_repair.size()));
        }
        if (rng.bernoulli(config.p_hedge)) {
          fu.hedge_cue = static_cast<int>(rng.below(inj_hedge.size()));
        }
        fu.id = synth_detail::pad_id("c", comment_counter++, 8);
        fu.body = build_body(fu.challenge_cue, fu.repair_cue, fu.hedge_cue);
        post.comments.push_back(std::move(fu));
      }
    }
    posts.push_back(std::move(post));
  }

  // Optional end-to-end detector audit of every generated body.
  if (config.verify_bodies) {
    for (const auto& post : posts) {
      for (const auto& gc : post.comments) {
        std::string lowered = normalize_for_match(gc.body);
        bool want_challenge = gc.challenge_cue >= 0;
        bool want_repair = gc.repair_cue >= 0;
        bool want_hedge = gc.hedge_cue >= 0;
        if (detect_lowered(lexicons.challenge_full, lowered) != want_challenge ||
            detect_lowered(lexicons.repair_full, lowered) != want_repair ||
            detect_lowered(lexicons.hedging_full, lowered) != want_hedge) {
          throw InvariantError("generated body disagrees with detectors: " + gc.id);
        }
        bool strict_challenge = want_challenge && inj_challenge[gc.challenge_cue].in_strict;
        bool strict_repair = want_repair && inj_repair[gc.repair_cue].in_strict;
        if (detect_lowered(lexicons.challenge_strict, lowered) != strict_challenge ||
            detect_lowered(lexicons.repair_strict, lowered) != strict_repair) {
          throw InvariantError("generated body disagrees with strict detectors: " + gc.id);
        }
      }
    }
  }

  // Ground truth via brute force over the generator's own records.
  GroundTruth truth;
  struct AuthorComment {
    std::int64_t ts;
    std::string id;
    bool hedge, challenge_cue;
    std::uint64_t words;
  };
  std::map<std::string, std::map<std::string, std::vector<AuthorComment>>> author_history;
  std::map<std::string, std::map<std::string, std::pair<std::int64_t, std::string>>>
      first_event;  // community -> author -> (ts, challenge id)

  for (const auto& post : posts) {
    truth.community_posts[post.community] += 1;
    const auto& cs = post.comments;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      ++truth.total_comments;
      ++truth.community_comments[post.community];
      if (cs[i].parent != -1) {
        ++truth.nested_comments;
        ++truth.community_nested[post.community];
        ++truth.community_author_nested[post.community]
                                       [synth_detail::pad_id("a", cs[i].author, 5)];
      }
      if (cs[i].hedge_cue >= 0) ++truth.hedge_comments;
      truth.depth_by_id[cs[i].id] = synth_detail::depth_of(cs, static_cast<int>(i));
      author_history[post.community][synth_detail::pad_id("a", cs[i].author, 5)]
          .push_back({cs[i].ts, cs[i].id, cs[i].hedge_cue >= 0, cs[i].challenge_cue >= 0,
                      static_cast<std::uint64_t>(word_count(cs[i].body))});
    }

    auto repair_flag = [&](std::size_t j, bool strict) {
      if (cs[j].repair_cue < 0) return false;
      return strict ? inj_repair[cs[j].repair_cue].in_strict : true;
    };

    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs[i].parent == -1 || cs[i].challenge_cue < 0) continue;
      if (cs[i].author == cs[cs[i].parent].author) continue;
      EpisodeTruth ep;
      ep.challenge_id = cs[i].id;
      ep.challenged_id = cs[cs[i].parent].id;
      ep.challenged_author = synth_detail::pad_id("a", cs[cs[i].parent].author, 5);
      ep.post_id = post.post_id;
      ep.community = post.community;
      ep.ts = cs[i].ts;
      ep.strict_challenge = inj_challenge[cs[i].challenge_cue].in_strict;
      const std::uint64_t target = cs[cs[i].parent].author;

      for (std::size_t j = 0; j < cs.size(); ++j) {
        if (cs[j].parent == static_cast<int>(i)) {
          ep.any_reply = true;
          if (cs[j].author == target) {
            ep.followup = true;
            if (repair_flag(j, false)) ep.repair_direct_full = true;
            if (repair_flag(j, true)) ep.repair_direct_strict = true;
          }
        }
      }
      for (int strict = 0; strict < 2; ++strict) {
        bool k3 = false, k5 = false, k10 = false, t1 = false, t6 = false, t24 = false;
        std::size_t seen = 0;
        for (std::size_t j = i + 1; j < cs.size(); ++j) {
          ++seen;
          bool by_target = cs[j].author == target;
          bool flagged = by_target && repair_flag(j, strict != 0);
          if (flagged && seen <= 3) k3 = true;
          if (flagged && seen <= 5) k5 = true;
          if (flagged && seen <= 10) k10 = true;
          std::int64_t dt = cs[j].ts - cs[i].ts;
          if (flagged && dt <= 3600) t1 = true;
          if (flagged && dt <= 6 * 3600) t6 = true;
          if (flagged && dt <= 24 * 3600) t24 = true;
        }
        if (strict == 0) {
          ep.repair_k3_full = k3;
          ep.repair_k5_full = k5;
          ep.repair_k10_full = k10;
          ep.repair_t1_full = t1;
          ep.repair_t6_full = t6;
          ep.repair_t24_full = t24;
        } else {
          ep.repair_k3_strict = k3;
          ep.repair_k5_strict = k5;
          ep.repair_k10_strict = k10;
          ep.repair_t1_strict = t1;
          ep.repair_t6_strict = t6;
          ep.repair_t24_strict = t24;
        }
      }
      for (std::size_t j = 0; j < cs.size(); ++j) {
        int rel = synth_detail::rel_depth_from(cs, static_cast<int>(i), static_cast<int>(j));
        if (rel <= 0) continue;
        ++ep.subtree_size;
        ep.subtree_depth = std::max(ep.subtree_depth, rel);
        if (cs[j].author == target) ep.orig_return = true;
        if (repair_flag(j, false)) ep.subtree_cue_full = true;
        if (repair_flag(j, true)) ep.subtree_cue_strict = true;
      }
      ep.multi_turn = ep.subtree_depth >= 2;

      auto& ev = first_event[post.community];
      auto it = ev.find(ep.challenged_author);
      if (it == ev.end() || ep.ts < it->second.first ||
          (ep.ts == it->second.first && ep.challenge_id < it->second.second)) {
        ev[ep.challenged_author] = {ep.ts, ep.challenge_id};
      }
      truth.episodes.push_back(std::move(ep));
    }
  }

  // Episodes in analyzer order: (post_id, timestamp, comment_id). Post ids
  // ascend with generation order but timestamps within a post already do.
  std::sort(truth.episodes.begin(), truth.episodes.end(),
            [](const EpisodeTruth& a, const EpisodeTruth& b) {
              if (a.post_id != b.post_id) return a.post_id < b.post_id;
              if (a.ts != b.ts) return a.ts < b.ts;
              return a.challenge_id < b.challenge_id;
            });

  for (auto& [community, per_author] : author_history) {
    for (auto& [author, list] : per_author) {
      std::sort(list.begin(), list.end(), [](const AuthorComment& a, const AuthorComment& b) {
        if (a.ts != b.ts) return a.ts < b.ts;
        return a.id < b.id;
      });
      auto ev_map = first_event.find(community);
      if (ev_map == first_event.end()) continue;
      auto ev = ev_map->second.find(author);
      if (ev == ev_map->second.end()) continue;
      AuthorShiftTruth shift;
      shift.community = community;
      shift.author = author;
      shift.event_ts = ev->second.first;
      shift.event_challenge_id = ev->second.second;
      for (const auto& ac : list) {
        bool pre = ac.ts < shift.event_ts ||
                   (ac.ts == shift.event_ts && ac.id < shift.event_challenge_id);
        if (pre) {
          ++shift.pre_n;
          shift.pre_hedge += ac.hedge ? 1 : 0;
          shift.pre_cue += ac.challenge_cue ? 1 : 0;
          shift.pre_words += ac.words;
        } else {
          ++shift.post_n;
          shift.post_hedge += ac.hedge ? 1 : 0;
          shift.post_cue += ac.challenge_cue ? 1 : 0;
          shift.post_words += ac.words;
        }
      }
      if (shift.pre_n >= 4 && shift.post_n >= 1) {
        truth.author_shifts.push_back(std::move(shift));
      }
    }
  }

  SynthResult result;
  result.corpus.platform = config.platform;
  for (const auto& post : posts) {
    for (const auto& gc : post.comments) {
      Comment c;
      c.comment_id = gc.id;
      c.post_id = post.post_id;
      if (gc.parent != -1) {
        c.parent_id = post.comments[gc.parent].id;
        c.has_parent = true;
      }
      c.author_id = synth_detail::pad_id("a", gc.author, 5);
      c.timestamp = gc.ts;
      c.body = gc.body;
      c.community = post.community;
      result.corpus.comments.push_back(std::move(c));
    }
  }
  result.corpus.finalize();
  result.truth = std::move(truth);
  return result;
}

inline nlohmann::json GroundTruth::to_json() const {
  nlohmann::json j;
  j["total_comments"] = total_comments;
  j["nested_comments"] = nested_comments;
  j["hedge_comments"] = hedge_comments;
  j["community_comments"] = community_comments;
  j["community_nested"] = community_nested;
  j["community_posts"] = community_posts;
  j["community_author_nested"] = community_author_nested;
  j["depth_by_id"] = depth_by_id;
  j["episodes"] = nlohmann::json::array();
  for (const auto& e : episodes) {
    nlohmann::json je;
    je["challenge_id"] = e.challenge_id;
    je["challenged_id"] = e.challenged_id;
    je["challenged_author"] = e.challenged_author;
    je["post_id"] = e.post_id;
    je["community"] = e.community;
    je["ts"] = e.ts;
    je["strict_challenge"] = e.strict_challenge;
    je["followup"] = e.followup;
    je["any_reply"] = e.any_reply;
    je["repair_direct_full"] = e.repair_direct_full;
    je["repair_direct_strict"] = e.repair_direct_strict;
    je["repair_k3_full"] = e.repair_k3_full;
    je["repair_k3_strict"] = e.repair_k3_strict;
    je["repair_k5_full"] = e.repair_k5_full;
    je["repair_k5_strict"] = e.repair_k5_strict;
    je["repair_k10_full"] = e.repair_k10_full;
    je["repair_k10_strict"] = e.repair_k10_strict;
    je["repair_t1_full"] = e.repair_t1_full;
    je["repair_t1_strict"] = e.repair_t1_strict;
    je["repair_t6_full"] = e.repair_t6_full;
    je["repair_t6_strict"] = e.repair_t6_strict;
    je["repair_t24_full"] = e.repair_t24_full;
    je["repair_t24_strict"] = e.repair_t24_strict;
    je["orig_return"] = e.orig_return;
    je["multi_turn"] = e.multi_turn;
    je["subtree_cue_full"] = e.subtree_cue_full;
    je["subtree_cue_strict"] = e.subtree_cue_strict;
    je["subtree_size"] = e.subtree_size;
    je["subtree_depth"] = e.subtree_depth;
    j["episodes"].push_back(std::move(je));
  }
  j["author_shifts"] = nlohmann::json::array();
  for (const auto& s : author_shifts) {
    nlohmann::json js;
    js["community"] = s.community;
    js["author"] = s.author;
    js["event_challenge_id"] = s.event_challenge_id;
    js["event_ts"] = s.event_ts;
    js["pre_n"] = s.pre_n;
    js["post_n"] = s.post_n;
    js["pre_hedge"] = s.pre_hedge;
    js["post_hedge"] = s.post_hedge;
    js["pre_cue"] = s.pre_cue;
    js["post_cue"] = s.post_cue;
    js["pre_words"] = s.pre_words;
    js["post_words"] = s.post_words;
    j["author_shifts"].push_back(std::move(js));
  }
  return j;
}

inline GroundTruth GroundTruth::from_json(const nlohmann::json& j) {
  GroundTruth t;
  t.total_comments = j.at("total_comments").get<std::uint64_t>();
  t.nested_comments = j.at("nested_comments").get<std::uint64_t>();
  t.hedge_comments = j.at("hedge_comments").get<std::uint64_t>();
  t.community_comments = j.at("community_comments").get<std::map<std::string, std::uint64_t>>();
  t.community_nested = j.at("community_nested").get<std::map<std::string, std::uint64_t>>();
  t.community_posts = j.at("community_posts").get<std::map<std::string, std::uint64_t>>();
  t.community_author_nested =
      j.at("community_author_nested")
          .get<std::map<std::string, std::map<std::string, std::uint64_t>>>();
  t.depth_by_id = j.at("depth_by_id").get<std::map<std::string, int>>();
  for (const auto& je : j.at("episodes")) {
    EpisodeTruth e;
    e.challenge_id = je.at("challenge_id").get<std::string>();
    e.challenged_id = je.at("challenged_id").get<std::string>();
    e.challenged_author = je.at("challenged_author").get<std::string>();
    e.post_id = je.at("post_id").get<std::string>();
    e.community = je.at("community").get<std::string>();
    e.ts = je.at("ts").get<std::int64_t>();
    e.strict_challenge = je.at("strict_challenge").get<bool>();
    e.followup = je.at("followup").get<bool>();
    e.any_reply = je.at("any_reply").get<bool>();
    e.repair_direct_full = je.at("repair_direct_full").get<bool>();
    e.repair_direct_strict = je.at("repair_direct_strict").get<bool>();
    e.repair_k3_full = je.at("repair_k3_full").get<bool>();
    e.repair_k3_strict = je.at("repair_k3_strict").get<bool>();
    e.repair_k5_full = je.at("repair_k5_full").get<bool>();
    e.repair_k5_strict = je.at("repair_k5_strict").get<bool>();
    e.repair_k10_full = je.at("repair_k10_full").get<bool>();
    e.repair_k10_strict = je.at("repair_k10_strict").get<bool>();
    e.repair_t1_full = je.at("repair_t1_full").get<bool>();
    e.repair_t1_strict = je.at("repair_t1_strict").get<bool>();
    e.repair_t6_full = je.at("repair_t6_full").get<bool>();
    e.repair_t6_strict = je.at("repair_t6_strict").get<bool>();
    e.repair_t24_full = je.at("repair_t24_full").get<bool>();
    e.repair_t24_strict = je.at("repair_t24_strict").get<bool>();
    e.orig_return = je.at("orig_return").get<bool>();
    e.multi_turn = je.at("multi_turn").get<bool>();
    e.subtree_cue_full = je.at("subtree_cue_full").get<bool>();
    e.subtree_cue_strict = je.at("subtree_cue_strict").get<bool>();
    e.subtree_size = je.at("subtree_size").get<std::uint64_t>();
    e.subtree_depth = je.at("subtree_depth").get<int>();
    t.episodes.push_back(std::move(e));
  }
  for (const auto& js : j.at("author_shifts")) {
    AuthorShiftTruth s;
    s.community = js.at("community").get<std::string>();
    s.author = js.at("author").get<std::string>();
    s.event_challenge_id = js.at("event_challenge_id").get<std::string>();
    s.event_ts = js.at("event_ts").get<std::int64_t>();
    s.pre_n = js.at("pre_n").get<std::uint64_t>();
    s.post_n = js.at("post_n").get<std::uint64_t>();
    s.pre_hedge = js.at("pre_hedge").get<std::uint64_t>();
    s.post_hedge = js.at("post_hedge").get<std::uint64_t>();
    s.pre_cue = js.at("pre_cue").get<std::uint64_t>();
    s.post_cue = js.at("post_cue").get<std::uint64_t>();
    s.pre_words = js.at("pre_words").get<std::uint64_t>();
    s.post_words = js.at("post_words").get<std::uint64_t>();
    t.author_shifts.push_back(std::move(s));
  }
  return t;
}

struct VerifyResult {
  bool pass = true;
  std::string first_divergence;  // empty when everything agrees
  std::uint64_t checks = 0;
};

// Replays the full analysis stack over a corpus and demands exact agreement
// with recorded ground truth: counts, depths, episode sets under both lexicon
// variants, every repair window, subtree metrics, and per-author shift sums.
inline VerifyResult verify_against_truth(const Corpus& corpus, const LexiconSet& lexicons,
                                         const GroundTruth& truth) {
  VerifyResult r;
  auto fail = [&](std::string msg) {
    r.pass = false;
    r.first_divergence = std::move(msg);
    return r;
  };
  auto check = [&](bool ok) {
    ++r.checks;
    return ok;
  };

  if (!check(corpus.size() == truth.total_comments)) {
    return fail("total comment count mismatch");
  }
  std::uint64_t nested = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.parent[i] != kNoComment) ++nested;
  }
  if (!check(nested == truth.nested_comments)) return fail("nested comment count mismatch");

  for (const auto& [name, want] : truth.community_comments) {
    auto it = corpus.communities.find(name);
    if (!check(it != corpus.communities.end() && it->second.comments.size() == want)) {
      return fail("community comment count mismatch: " + name);
    }
  }
  if (!check(corpus.communities.size() == truth.community_comments.size())) {
    return fail("community set mismatch");
  }
  for (const auto& [name, want] : truth.community_posts) {
    if (!check(corpus.community(name).posts.size() == want)) {
      return fail("community post count mismatch: " + name);
    }
  }
  for (const auto& [name, want] : truth.community_nested) {
    double expect = truth.community_comments.at(name) == 0
                        ? 0.0
                        : static_cast<double>(want) /
                              static_cast<double>(truth.community_comments.at(name));
    if (!check(nesting_rate(corpus, name) == expect)) {
      return fail("nesting rate mismatch: " + name);
    }
  }
  for (const auto& [name, by_author] : truth.community_author_nested) {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const auto& [author, n] : by_author) {
      counts.push_back(n);
      total += n;
    }
    std::sort(counts.rbegin(), counts.rend());
    std::uint64_t top = 0;
    for (std::size_t i = 0; i < counts.size() && i < 5; ++i) top += counts[i];
    double expect = total == 0 ? 0.0
                               : static_cast<double>(top) / static_cast<double>(total);
    if (!check(author_concentration(corpus, name, 5) == expect)) {
      return fail("author concentration mismatch: " + name);
    }
  }

  for (const auto& [id, want] : truth.depth_by_id) {
    CommentIdx idx = corpus.find_comment(id);
    if (!check(idx != kNoComment && corpus.depth[idx] == want)) {
      return fail("depth mismatch: " + id);
    }
  }

  const CueScan scan = scan_corpus(corpus, lexicons);
  std::uint64_t hedges = 0;
  for (char f : scan.hedging_full) hedges += f ? 1 : 0;
  if (!check(hedges == truth.hedge_comments)) return fail("hedge comment count mismatch");

  const auto episodes_full = extract_challenges(corpus, scan.challenge_full);
  const auto episodes_strict = extract_challenges(corpus, scan.challenge_strict);
  std::vector<const EpisodeTruth*> truth_strict;
  for (const auto& e : truth.episodes) {
    if (e.strict_challenge) truth_strict.push_back(&e);
  }
  if (!check(episodes_full.size() == truth.episodes.size())) {
    return fail("challenge episode count mismatch");
  }
  if (!check(episodes_strict.size() == truth_strict.size())) {
    return fail("strict challenge episode count mismatch");
  }

  auto window_configs = [] {
    std::vector<std::pair<const char*, RepairConfig>> ws;
    RepairConfig c;
    c.mode = RepairMode::direct;
    ws.push_back({"direct", c});
    c.mode = RepairMode::k_window;
    c.k = 3;
    ws.push_back({"k3", c});
    c.k = 5;
    ws.push_back({"k5", c});
    c.k = 10;
    ws.push_back({"k10", c});
    c.mode = RepairMode::time_window;
    c.hours = 1.0;
    ws.push_back({"t1", c});
    c.hours = 6.0;
    ws.push_back({"t6", c});
    c.hours = 24.0;
    ws.push_back({"t24", c});
    return ws;
  }();

  auto truth_window = [](const EpisodeTruth& e, const char* name, bool strict) {
    std::string_view n = name;
    if (n == "direct") return strict ? e.repair_direct_strict : e.repair_direct_full;
    if (n == "k3") return strict ? e.repair_k3_strict : e.repair_k3_full;
    if (n == "k5") return strict ? e.repair_k5_strict : e.repair_k5_full;
    if (n == "k10") return strict ? e.repair_k10_strict : e.repair_k10_full;
    if (n == "t1") return strict ? e.repair_t1_strict : e.repair_t1_full;
    if (n == "t6") return strict ? e.repair_t6_strict : e.repair_t6_full;
    return strict ? e.repair_t24_strict : e.repair_t24_full;
  };

  for (std::size_t i = 0; i < episodes_full.size(); ++i) {
    const ChallengeEpisode& ep = episodes_full[i];
    const EpisodeTruth& et = truth.episodes[i];
    const Comment& chal = corpus.at(ep.challenge);
    if (!check(chal.comment_id == et.challenge_id &&
               corpus.at(ep.challenged).comment_id == et.challenged_id)) {
      return fail("episode identity mismatch at index " + std::to_string(i));
    }
    if (!check(corpus.at(ep.challenged).author_id == et.challenged_author)) {
      return fail("challenged author mismatch: " + et.challenge_id);
    }
    if (!check(followup(corpus, ep) == et.followup)) {
      return fail("followup mismatch: " + et.challenge_id);
    }
    if (!check(any_reply(corpus, ep) == et.any_reply)) {
      return fail("any-reply mismatch: " + et.challenge_id);
    }
    for (const auto& [name, cfg] : window_configs) {
      if (!check(repair(corpus, ep, cfg, scan.repair_full) ==
                 truth_window(et, name, false))) {
        return fail(std::string("repair window ") + name +
                    " mismatch: " + et.challenge_id);
      }
    }
    SubtreeMetrics m = subtree_metrics(corpus, ep.challenge, scan.repair_full);
    if (!check(m.orig_return == et.orig_return && m.multi_turn == et.multi_turn &&
               m.repair_cue_present == et.subtree_cue_full &&
               m.size == et.subtree_size && m.depth == et.subtree_depth)) {
      return fail("subtree metrics mismatch: " + et.challenge_id);
    }
    SubtreeMetrics ms = subtree_metrics(corpus, ep.challenge, scan.repair_strict);
    if (!check(ms.repair_cue_present == et.subtree_cue_strict)) {
      return fail("strict subtree cue mismatch: " + et.challenge_id);
    }
  }
  for (std::size_t i = 0; i < episodes_strict.size(); ++i) {
    const ChallengeEpisode& ep = episodes_strict[i];
    const EpisodeTruth& et = *truth_strict[i];
    if (!check(corpus.at(ep.challenge).comment_id == et.challenge_id)) {
      return fail("strict episode identity mismatch at index " + std::to_string(i));
    }
    for (const auto& [name, cfg] : window_configs) {
      if (!check(repair(corpus, ep, cfg, scan.repair_strict) ==
                 truth_window(et, name, true))) {
        return fail(std::string("strict repair window ") + name +
                    " mismatch: " + et.challenge_id);
      }
    }
  }

  const std::vector<int> words = word_counts(corpus);
  std::map<std::pair<std::string, std::string>, const AuthorShiftTruth*> shift_truth;
  for (const auto& s : truth.author_shifts) {
    shift_truth[{s.community, s.author}] = &s;
  }
  std::size_t matched_shifts = 0;
  for (const auto& [community, info] : corpus.communities) {
    const auto timelines = build_timelines(corpus, community);
    const auto events = first_challenge_events(corpus, episodes_full, community);
    for (const auto& tl : timelines) {
      auto ev = events.find(tl.author_id);
      if (ev == events.end()) continue;
      std::size_t pre = detail::pre_count(corpus, tl, ev->second);
      bool included = pre >= 4 && pre < tl.comments.size();
      auto st = shift_truth.find({community, tl.author_id});
      if (!check(included == (st != shift_truth.end()))) {
        return fail("shift inclusion mismatch: " + community + "/" + tl.author_id);
      }
      if (!included) continue;
      ++matched_shifts;
      const AuthorShiftTruth& want = *st->second;
      if (!check(ev->second.ts == want.event_ts &&
                 ev->second.challenge_id == want.event_challenge_id)) {
        return fail("shift event mismatch: " + community + "/" + tl.author_id);
      }
      std::uint64_t pre_hedge = 0, post_hedge = 0, pre_cue = 0, post_cue = 0;
      std::uint64_t pre_words = 0, post_words = 0;
      for (std::size_t k = 0; k < tl.comments.size(); ++k) {
        CommentIdx c = tl.comments[k];
        bool is_pre = k < pre;
        (is_pre ? pre_hedge : post_hedge) += scan.hedging_full[c] ? 1 : 0;
        (is_pre ? pre_cue : post_cue) += scan.challenge_full[c] ? 1 : 0;
        (is_pre ? pre_words : post_words) += static_cast<std::uint64_t>(words[c]);
      }
      if (!check(pre == want.pre_n && tl.comments.size() - pre == want.post_n &&
                 pre_hedge == want.pre_hedge && post_hedge == want.post_hedge &&
                 pre_cue == want.pre_cue && post_cue == want.post_cue &&
                 pre_words == want.pre_words && post_words == want.post_words)) {
        return fail("shift tally mismatch: " + community + "/" + tl.author_id);
      }
    }
  }
  if (!check(matched_shifts == truth.author_shifts.size())) {
    return fail("shift inclusion count mismatch");
  }

  return r;
}

}  // namespace threadloop
