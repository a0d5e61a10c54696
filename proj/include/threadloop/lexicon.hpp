#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/text.hpp"
#include "vendor/json.hpp"

namespace threadloop {

enum class CueCategory { challenge, repair, hedging };
enum class LexiconVariant { full, strict };

inline const char* category_name(CueCategory c) {
  switch (c) {
    case CueCategory::challenge: return "challenge";
    case CueCategory::repair: return "repair";
    case CueCategory::hedging: return "hedging";
  }
  return "?";
}

inline const char* variant_name(LexiconVariant v) {
  return v == LexiconVariant::full ? "full" : "strict";
}

inline CueCategory parse_category(std::string_view s) {
  if (s == "challenge") return CueCategory::challenge;
  if (s == "repair") return CueCategory::repair;
  if (s == "hedging") return CueCategory::hedging;
  throw ConfigError("unknown cue category: " + std::string(s));
}

inline LexiconVariant parse_variant(std::string_view s) {
  if (s == "full") return LexiconVariant::full;
  if (s == "strict") return LexiconVariant::strict;
  throw ConfigError("unknown lexicon variant: " + std::string(s));
}

// A flat list of literal substrings. Some cues carry structural punctuation
// or a trailing space ("actually ", "rule ") that is part of the match.
struct CueLexicon {
  CueCategory category = CueCategory::challenge;
  LexiconVariant variant = LexiconVariant::full;
  std::vector<std::string> cues;
};

inline CueLexicon make_lexicon(CueCategory cat, LexiconVariant var,
                               std::vector<std::string> raw) {
  CueLexicon lex;
  lex.category = cat;
  lex.variant = var;
  std::set<std::string> seen;
  for (auto& cue : raw) {
    std::string lowered = normalize_for_match(cue);
    if (lowered.empty()) throw ConfigError("empty cue in lexicon");
    if (!seen.insert(lowered).second) {
      throw ConfigError("duplicate cue after lowercasing: " + lowered);
    }
    lex.cues.push_back(std::move(lowered));
  }
  if (lex.cues.empty()) throw ConfigError("lexicon has no cues");
  return lex;
}

// Matching against text that has already been through normalize_for_match.
// Detection is plain substring containment with no word-boundary logic, so
// "no," fires inside "casino," by design; the validation numbers below price
// that in.
inline bool detect_lowered(const CueLexicon& lex, std::string_view lowered) {
  for (const auto& cue : lex.cues) {
    if (lowered.find(cue) != std::string_view::npos) return true;
  }
  return false;
}

inline bool detect(const CueLexicon& lex, std::string_view text) {
  return detect_lowered(lex, normalize_for_match(text));
}

// Measured against a hand-annotated set; used for the recall correction.
struct DetectorValidation {
  double precision = 0.91;
  double recall = 0.48;
  int n = 265;
};

// Upper-bound correction for a conservative detector: observed / recall,
// clamped into [0,1].
inline double adjust_for_recall(double observed_rate, double recall) {
  if (!(recall > 0.0) || recall > 1.0) throw ConfigError("recall must be in (0,1]");
  if (observed_rate < 0.0 || observed_rate > 1.0) {
    throw ConfigError("observed rate must be in [0,1]");
  }
  return std::min(observed_rate / recall, 1.0);
}

namespace builtin {

inline std::vector<std::string> challenge_cues() {
  return {"source?",       "citation",       "that's wrong",
          "that is wrong", "actually,",      "actually ",
          "what do you mean", "what does that mean", "not allowed",
          "stop",          "rule ",          "you can't",
          "you cant",      "disagree",       "incorrect",
          "misleading",    "prove it",       "evidence?",
          "how so",        "why do you think", "i don't think",
          "i dont think",  "that doesn't",   "that doesnt",
          "not true",      "no,",            "wrong"};
}

inline std::vector<std::string> repair_cues() {
  return {"to clarify",  "i meant",       "what i meant", "let me rephrase",
          "sorry",       "apologies",     "my mistake",   "i was wrong",
          "you're right", "you are right", "fair point",   "good point",
          "i stand corrected", "thanks for", "i see your point", "i agree",
          "that's fair", "updated",       "corrected"};
}

inline std::vector<std::string> hedging_cues() {
  return {"perhaps",    "maybe",       "i think",       "it seems",
          "arguably",   "possibly",    "might",         "could be",
          "in my opinion", "i believe", "not sure",      "i suppose",
          "it appears", "one could argue", "it could be", "i would say",
          "from my perspective", "if i'm not mistaken"};
}

inline std::vector<std::string> challenge_strict_removals() {
  return {"actually,", "no,", "stop", "wrong", "rule "};
}

inline std::vector<std::string> repair_strict_removals() {
  return {"i agree", "thanks for", "updated", "corrected"};
}

}  // namespace builtin

inline std::vector<std::string> remove_cues(std::vector<std::string> cues,
                                            const std::vector<std::string>& removals) {
  for (const auto& r : removals) {
    std::string lowered = normalize_for_match(r);
    auto it = std::find(cues.begin(), cues.end(), lowered);
    if (it == cues.end()) {
      throw ConfigError("strict removal not present in full list: " + lowered);
    }
    cues.erase(it);
  }
  return cues;
}

// All six detector configurations: three categories, each in a full and a
// strict variant. The hedging strict list equals its full list.
struct LexiconSet {
  CueLexicon challenge_full;
  CueLexicon challenge_strict;
  CueLexicon repair_full;
  CueLexicon repair_strict;
  CueLexicon hedging_full;
  CueLexicon hedging_strict;

  const CueLexicon& get(CueCategory cat, LexiconVariant var) const {
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

inline LexiconSet build_lexicon_set(std::vector<std::string> challenge,
                                    std::vector<std::string> repair,
                                    std::vector<std::string> hedging,
                                    std::vector<std::string> challenge_removals,
                                    std::vector<std::string> repair_removals,
                                    std::vector<std::string> hedging_removals) {
  LexiconSet set;
  set.challenge_full =
      make_lexicon(CueCategory::challenge, LexiconVariant::full, challenge);
  set.repair_full = make_lexicon(CueCategory::repair, LexiconVariant::full, repair);
  set.hedging_full = make_lexicon(CueCategory::hedging, LexiconVariant::full, hedging);
  set.challenge_strict =
      make_lexicon(CueCategory::challenge, LexiconVariant::strict,
                   remove_cues(challenge, challenge_removals));
  set.repair_strict = make_lexicon(CueCategory::repair, LexiconVariant::strict,
                                   remove_cues(repair, repair_removals));
  set.hedging_strict = make_lexicon(CueCategory::hedging, LexiconVariant::strict,
                                    remove_cues(hedging, hedging_removals));
  return set;
}

inline LexiconSet builtin_lexicons() {
  return build_lexicon_set(builtin::challenge_cues(), builtin::repair_cues(),
                           builtin::hedging_cues(),
                           builtin::challenge_strict_removals(),
                           builtin::repair_strict_removals(), {});
}

// Override file: {"challenge": [...], "repair": [...], "hedging": [...],
// "strict_removals": {"challenge": [...], ...}}. Omitted categories fall back
// to the built-in lists; omitted strict_removals entries default to empty for
// overridden categories and to the built-in removals otherwise.
inline LexiconSet load_lexicons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad lexicon JSON in " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("lexicon file must hold a JSON object");

  auto as_list = [&](const nlohmann::json& j, const char* where) {
    if (!j.is_array()) throw ConfigError(std::string(where) + " must be a list");
    std::vector<std::string> out;
    for (const auto& item : j) {
      if (!item.is_string()) throw ConfigError(std::string(where) + " entries must be strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  };

  std::vector<std::string> challenge = builtin::challenge_cues();
  std::vector<std::string> repair = builtin::repair_cues();
  std::vector<std::string> hedging = builtin::hedging_cues();
  std::vector<std::string> rm_challenge = builtin::challenge_strict_removals();
  std::vector<std::string> rm_repair = builtin::repair_strict_removals();
  std::vector<std::string> rm_hedging;

  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    if (key == "challenge") {
      challenge = as_list(it.value(), "challenge");
      rm_challenge.clear();
    } else if (key == "repair") {
      repair = as_list(it.value(), "repair");
      rm_repair.clear();
    } else if (key == "hedging") {
      hedging = as_list(it.value(), "hedging");
      rm_hedging.clear();
    } else if (key == "strict_removals") {
      if (!it.value().is_object()) {
        throw ConfigError("strict_removals must be an object");
      }
    } else {
      throw ConfigError("unknown key in lexicon file: " + key);
    }
  }
  // Explicit strict_removals wins over the clearing above regardless of key
  // order in the file.
  if (doc.contains("strict_removals")) {
    const auto& rm = doc["strict_removals"];
    for (auto rit = rm.begin(); rit != rm.end(); ++rit) {
      CueCategory cat = parse_category(rit.key());
      auto list = as_list(rit.value(), "strict_removals entry");
      if (cat == CueCategory::challenge) rm_challenge = list;
      else if (cat == CueCategory::repair) rm_repair = list;
      else rm_hedging = list;
    }
  }
  return build_lexicon_set(challenge, repair, hedging, rm_challenge, rm_repair,
                           rm_hedging);
}

}  // namespace threadloop
