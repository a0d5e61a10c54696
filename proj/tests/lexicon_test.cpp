#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "threadloop/lexicon.hpp"

using threadloop::adjust_for_recall;
using threadloop::builtin_lexicons;
using threadloop::ConfigError;
using threadloop::CueCategory;
using threadloop::CueLexicon;
using threadloop::detect;
using threadloop::detect_lowered;
using threadloop::LexiconSet;
using threadloop::LexiconVariant;
using threadloop::load_lexicons;
using threadloop::make_lexicon;
using threadloop::normalize_for_match;
using threadloop::parse_category;
using threadloop::parse_variant;

namespace {

struct GoldenRow {
  CueCategory category;
  LexiconVariant variant;
  std::string text;
  bool expected;
};

std::vector<GoldenRow> load_golden() {
  std::filesystem::path path =
      std::filesystem::path(THREADLOOP_TEST_DATA_DIR) / "detector_golden.tsv";
  std::ifstream in(path);
  EXPECT_TRUE(in.is_open()) << path;
  std::vector<GoldenRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    EXPECT_EQ(cols.size(), 4u) << line;
    if (cols.size() != 4) continue;
    rows.push_back({parse_category(cols[0]), parse_variant(cols[1]), cols[2],
                    cols[3] == "1"});
  }
  return rows;
}

std::string ascii_upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TEST(BuiltinLexicons, CueCounts) {
  LexiconSet set = builtin_lexicons();
  EXPECT_EQ(set.challenge_full.cues.size(), 27u);
  EXPECT_EQ(set.challenge_strict.cues.size(), 22u);
  EXPECT_EQ(set.repair_full.cues.size(), 19u);
  EXPECT_EQ(set.repair_strict.cues.size(), 15u);
  EXPECT_EQ(set.hedging_full.cues.size(), 18u);
  EXPECT_EQ(set.hedging_strict.cues.size(), 18u);
}

TEST(BuiltinLexicons, StrictCuesAreSubsetsOfFull) {
  LexiconSet set = builtin_lexicons();
  auto is_subset = [](const CueLexicon& strict, const CueLexicon& full) {
    for (const auto& cue : strict.cues) {
      if (std::find(full.cues.begin(), full.cues.end(), cue) == full.cues.end()) {
        return false;
      }
    }
    return true;
  };
  EXPECT_TRUE(is_subset(set.challenge_strict, set.challenge_full));
  EXPECT_TRUE(is_subset(set.repair_strict, set.repair_full));
  EXPECT_TRUE(is_subset(set.hedging_strict, set.hedging_full));
  EXPECT_EQ(set.hedging_strict.cues, set.hedging_full.cues);
}

TEST(GoldenDetectorSuite, EveryRowMatches) {
  LexiconSet set = builtin_lexicons();
  std::vector<GoldenRow> rows = load_golden();
  ASSERT_GE(rows.size(), 60u);
  for (const auto& row : rows) {
    const CueLexicon& lex = set.get(row.category, row.variant);
    EXPECT_EQ(detect(lex, row.text), row.expected)
        << "category=" << threadloop::category_name(row.category)
        << " variant=" << threadloop::variant_name(row.variant)
        << " text=" << row.text;
  }
}

TEST(GoldenDetectorSuite, EveryBuiltinCueHasAPositiveRow) {
  LexiconSet set = builtin_lexicons();
  std::vector<GoldenRow> rows = load_golden();
  const CueLexicon* full[] = {&set.challenge_full, &set.repair_full,
                              &set.hedging_full};
  for (const CueLexicon* lex : full) {
    for (const auto& cue : lex->cues) {
      bool covered = false;
      for (const auto& row : rows) {
        if (row.category != lex->category || !row.expected) continue;
        if (normalize_for_match(row.text).find(cue) != std::string::npos) {
          covered = true;
          break;
        }
      }
      EXPECT_TRUE(covered) << "no golden row exercises cue: " << cue;
    }
  }
}

TEST(Detection, CaseInsensitiveOnGoldenTexts) {
  LexiconSet set = builtin_lexicons();
  for (const auto& row : load_golden()) {
    const CueLexicon& lex = set.get(row.category, row.variant);
    EXPECT_EQ(detect(lex, ascii_upper(row.text)), detect(lex, row.text)) << row.text;
  }
}

TEST(Detection, StrictHitImpliesFullHit) {
  LexiconSet set = builtin_lexicons();
  for (const auto& row : load_golden()) {
    std::string lowered = normalize_for_match(row.text);
    const CueLexicon& strict = set.get(row.category, LexiconVariant::strict);
    const CueLexicon& full = set.get(row.category, LexiconVariant::full);
    if (detect_lowered(strict, lowered)) {
      EXPECT_TRUE(detect_lowered(full, lowered)) << row.text;
    }
  }
}

TEST(Detection, ConcatenationNeverLosesAHit) {
  // Substring matching is monotone under concatenation on either side.
  LexiconSet set = builtin_lexicons();
  std::vector<GoldenRow> rows = load_golden();
  const CueLexicon& lex = set.challenge_full;
  for (std::size_t i = 0; i < rows.size(); i += 7) {
    for (std::size_t j = 1; j < rows.size(); j += 11) {
      bool a = detect(lex, rows[i].text);
      bool b = detect(lex, rows[j].text);
      bool joined = detect(lex, rows[i].text + " " + rows[j].text);
      EXPECT_TRUE(joined || !(a || b));
    }
  }
}

TEST(MakeLexicon, RejectsDegenerateInputs) {
  EXPECT_THROW(make_lexicon(CueCategory::challenge, LexiconVariant::full, {}),
               ConfigError);
  EXPECT_THROW(make_lexicon(CueCategory::challenge, LexiconVariant::full, {"x", ""}),
               ConfigError);
  // Duplicates after lowercasing collide.
  EXPECT_THROW(
      make_lexicon(CueCategory::challenge, LexiconVariant::full, {"Stop", "stop"}),
      ConfigError);
}

TEST(MakeLexicon, LowercasesCuesOnConstruction) {
  CueLexicon lex =
      make_lexicon(CueCategory::repair, LexiconVariant::full, {"Sorry", "My Bad"});
  EXPECT_EQ(lex.cues[0], "sorry");
  EXPECT_EQ(lex.cues[1], "my bad");
}

TEST(RemoveCues, MissingRemovalIsAnError) {
  EXPECT_THROW(threadloop::remove_cues({"a", "b"}, {"c"}), ConfigError);
  EXPECT_EQ(threadloop::remove_cues({"a", "b"}, {"a"}),
            std::vector<std::string>{"b"});
}

TEST(AdjustForRecall, KnownValuesAndClamp) {
  EXPECT_NEAR(adjust_for_recall(0.005, 0.48), 0.0104166667, 1e-9);
  EXPECT_DOUBLE_EQ(adjust_for_recall(0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(adjust_for_recall(0.9, 0.5), 1.0);  // clamped
  EXPECT_DOUBLE_EQ(adjust_for_recall(0.3, 1.0), 0.3);
}

TEST(AdjustForRecall, RejectsOutOfRangeArguments) {
  EXPECT_THROW(adjust_for_recall(0.5, 0.0), ConfigError);
  EXPECT_THROW(adjust_for_recall(0.5, 1.5), ConfigError);
  EXPECT_THROW(adjust_for_recall(-0.1, 0.5), ConfigError);
  EXPECT_THROW(adjust_for_recall(1.1, 0.5), ConfigError);
}

TEST(LoadLexicons, OverridesOneCategoryKeepsBuiltinsForOthers) {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "tl_lexicon_test";
  std::filesystem::create_directories(dir);
  std::filesystem::path file = dir / "override.json";
  {
    std::ofstream out(file);
    out << R"({"challenge": ["foo", "bar baz"]})";
  }
  LexiconSet set = load_lexicons(file.string());
  EXPECT_EQ(set.challenge_full.cues, (std::vector<std::string>{"foo", "bar baz"}));
  // Overridden category defaults to no strict removals.
  EXPECT_EQ(set.challenge_strict.cues, set.challenge_full.cues);
  // Untouched categories keep the builtin lists including removals.
  LexiconSet builtin = builtin_lexicons();
  EXPECT_EQ(set.repair_full.cues, builtin.repair_full.cues);
  EXPECT_EQ(set.repair_strict.cues, builtin.repair_strict.cues);
}

TEST(LoadLexicons, RejectsUnknownKeysAndBadShapes) {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "tl_lexicon_test";
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const char* body) {
    std::filesystem::path file = dir / name;
    std::ofstream out(file);
    out << body;
    return file.string();
  };
  EXPECT_THROW(load_lexicons(write("unknown.json", R"({"chalenge": []})")),
               ConfigError);
  EXPECT_THROW(load_lexicons(write("notarray.json", R"({"repair": "sorry"})")),
               ConfigError);
  EXPECT_THROW(load_lexicons(write("toplevel.json", R"([1,2])")), ConfigError);
  EXPECT_THROW(load_lexicons(write("badjson.json", "{")), ConfigError);
  EXPECT_THROW(load_lexicons((dir / "missing.json").string()), ConfigError);
}

TEST(ParseNames, RoundTrip) {
  EXPECT_EQ(parse_category("challenge"), CueCategory::challenge);
  EXPECT_EQ(parse_category("repair"), CueCategory::repair);
  EXPECT_EQ(parse_category("hedging"), CueCategory::hedging);
  EXPECT_THROW(parse_category("nope"), ConfigError);
  EXPECT_EQ(parse_variant("full"), LexiconVariant::full);
  EXPECT_EQ(parse_variant("strict"), LexiconVariant::strict);
  EXPECT_THROW(parse_variant("loose"), ConfigError);
}
