#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "threadloop/ingest.hpp"

using threadloop::Corpus;
using threadloop::DataError;
using threadloop::ingest;
using threadloop::IngestOptions;
using threadloop::IngestReport;
using threadloop::Platform;

namespace {

namespace fs = std::filesystem;

class IngestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tl_ingest_" + std::to_string(::getpid())) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_.parent_path()); }

  std::string write(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
  }

  static std::string row(const std::string& id, const std::string& post,
                         const std::string& parent, std::int64_t ts,
                         const std::string& community = "c",
                         const std::string& author = "a1",
                         const std::string& body = "text") {
    std::ostringstream os;
    os << "{\"comment_id\":\"" << id << "\",\"post_id\":\"" << post << "\"";
    if (parent.empty()) os << ",\"parent_id\":null";
    else os << ",\"parent_id\":\"" << parent << "\"";
    os << ",\"author_id\":\"" << author << "\",\"timestamp\":" << ts
       << ",\"body\":\"" << body << "\",\"community\":\"" << community << "\"}\n";
    return os.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(IngestTest, LoadsWellFormedJsonl) {
  auto path = write("a.jsonl", row("c1", "p1", "", 100) + row("c2", "p1", "c1", 200) +
                                   row("c3", "p2", "", 300));
  IngestReport report;
  Corpus c = ingest({path}, Platform::agent_forum, {}, &report);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(report.loaded, 3u);
  EXPECT_EQ(report.skipped, 0u);
  EXPECT_EQ(c.platform, Platform::agent_forum);
  EXPECT_EQ(c.posts.size(), 2u);
}

TEST_F(IngestTest, SkipsMalformedRows) {
  std::string content = row("c1", "p1", "", 100);
  content += "not json at all\n";
  content += "{\"comment_id\":\"c2\"}\n";                       // missing fields
  content += row("c3", "p1", "c3", 300);                        // self parent
  content += "{\"comment_id\":\"c4\",\"post_id\":\"p1\",\"parent_id\":null,"
             "\"author_id\":\"a\",\"timestamp\":1.5,\"body\":\"b\","
             "\"community\":\"c\"}\n";                          // float timestamp
  content += row("c5", "p1", "", 500) + row("c6", "p1", "", 600) +
             row("c7", "p1", "", 700) + row("c8", "p1", "", 800);
  auto path = write("a.jsonl", content);
  IngestReport report;
  Corpus c = ingest({path}, Platform::human_forum, {}, &report);
  EXPECT_EQ(report.loaded, 5u);
  EXPECT_EQ(report.skipped, 4u);
  EXPECT_EQ(c.find_comment("c3"), threadloop::kNoComment);
}

TEST_F(IngestTest, MostlyMalformedInputAborts) {
  auto path = write("a.jsonl", "garbage one\ngarbage two\n" + row("c1", "p1", "", 1));
  EXPECT_THROW(ingest({path}, Platform::human_forum, {}), DataError);
}

TEST_F(IngestTest, DuplicateIdsKeepFirstRow) {
  auto path = write("a.jsonl", row("c1", "p1", "", 100, "c", "a1", "first") +
                                   row("c1", "p1", "", 200, "c", "a2", "second"));
  IngestReport report;
  Corpus c = ingest({path}, Platform::human_forum, {}, &report);
  EXPECT_EQ(report.loaded, 1u);
  EXPECT_EQ(report.duplicates, 1u);
  EXPECT_EQ(c.at(c.find_comment("c1")).body, "first");
}

TEST_F(IngestTest, YearRangeFilterIsInclusive) {
  // 2020-12-31T23:59:59Z, 2021-06-01, 2022-01-01T00:00:00Z
  auto path = write("a.jsonl", row("c1", "p1", "", 1609459199) +
                                   row("c2", "p1", "", 1622505600) +
                                   row("c3", "p1", "", 1640995200));
  IngestOptions opt;
  opt.year_range = {2021, 2021};
  IngestReport report;
  Corpus c = ingest({path}, Platform::human_forum, opt, &report);
  EXPECT_EQ(report.loaded, 1u);
  EXPECT_EQ(report.year_filtered, 2u);
  EXPECT_NE(c.find_comment("c2"), threadloop::kNoComment);
}

TEST_F(IngestTest, PerCommunityCapKeepsFileOrderPrefix) {
  auto path = write("a.jsonl", row("c1", "p1", "", 300, "big") +
                                   row("c2", "p1", "", 100, "big") +
                                   row("c3", "p1", "", 200, "big") +
                                   row("d1", "p2", "", 100, "exact") +
                                   row("d2", "p2", "", 200, "exact") +
                                   row("e1", "p3", "", 100, "small"));
  IngestOptions opt;
  opt.max_comments_cap = 2;
  IngestReport report;
  Corpus c = ingest({path}, Platform::human_forum, opt, &report);
  EXPECT_EQ(report.cap_dropped, 1u);
  // First two file rows survive even though c1 is chronologically last.
  EXPECT_NE(c.find_comment("c1"), threadloop::kNoComment);
  EXPECT_NE(c.find_comment("c2"), threadloop::kNoComment);
  EXPECT_EQ(c.find_comment("c3"), threadloop::kNoComment);
  EXPECT_TRUE(report.cap_hit_per_community.at("big"));
  EXPECT_TRUE(report.cap_hit_per_community.at("exact"));  // landing on the cap counts
  EXPECT_FALSE(report.cap_hit_per_community.at("small"));
}

TEST_F(IngestTest, OrphanCountAfterLinking) {
  auto path = write("a.jsonl", row("c1", "p1", "", 100) + row("c2", "p1", "gone", 200) +
                                   row("c3", "p2", "c1", 300));
  IngestReport report;
  ingest({path}, Platform::human_forum, {}, &report);
  EXPECT_EQ(report.orphans, 2u);  // dangling parent and cross-post parent
}

TEST_F(IngestTest, IsoTimestampsInJsonl) {
  std::string content =
      "{\"comment_id\":\"c1\",\"post_id\":\"p1\",\"parent_id\":null,"
      "\"author_id\":\"a\",\"timestamp\":\"2021-01-01T00:00:00Z\",\"body\":\"b\","
      "\"community\":\"c\"}\n";
  auto path = write("a.jsonl", content);
  Corpus c = ingest({path}, Platform::human_forum, {});
  EXPECT_EQ(c.at(0).timestamp, 1609459200);
}

TEST_F(IngestTest, CsvFormatWithQuotedBodies) {
  std::string content =
      "comment_id,post_id,parent_id,author_id,timestamp,body,community\n"
      "c1,p1,,a1,100,\"hello, world\",c\n"
      "c2,p1,c1,a2,2021-01-01T00:00:00Z,\"line\none\",c\n";
  auto path = write("a.csv", content);
  IngestReport report;
  Corpus c = ingest({path}, Platform::human_forum, {}, &report);
  EXPECT_EQ(report.loaded, 2u);
  EXPECT_EQ(c.at(c.find_comment("c1")).body, "hello, world");
  EXPECT_EQ(c.at(c.find_comment("c2")).timestamp, 1609459200);
  EXPECT_EQ(c.at(c.find_comment("c2")).body, "line\none");
  EXPECT_FALSE(c.at(c.find_comment("c1")).has_parent);
  EXPECT_TRUE(c.at(c.find_comment("c2")).has_parent);
}

TEST_F(IngestTest, CsvHeaderMissingColumnAborts) {
  auto path = write("a.csv", "comment_id,post_id,author_id,timestamp,body,community\n"
                             "c1,p1,a1,100,b,c\n");
  EXPECT_THROW(ingest({path}, Platform::human_forum, {}), DataError);
}

TEST_F(IngestTest, DirectoryExpandsSortedNonRecursive) {
  write("b.jsonl", row("c1", "p1", "", 100, "c", "a1", "from_b"));
  write("a.jsonl", row("c1", "p1", "", 100, "c", "a1", "from_a"));
  fs::create_directories(dir_ / "sub");
  {
    std::ofstream out(dir_ / "sub" / "c.jsonl", std::ios::binary);
    out << row("deep", "p9", "", 1);
  }
  IngestReport report;
  Corpus c = ingest({dir_.string()}, Platform::human_forum, {}, &report);
  // a.jsonl ran first, so its duplicate wins; the nested file never loads.
  EXPECT_EQ(c.at(c.find_comment("c1")).body, "from_a");
  EXPECT_EQ(report.duplicates, 1u);
  EXPECT_EQ(c.find_comment("deep"), threadloop::kNoComment);
}

TEST_F(IngestTest, MissingInputsFail) {
  EXPECT_THROW(ingest({}, Platform::human_forum, {}), threadloop::ConfigError);
  EXPECT_THROW(ingest({(dir_ / "nope.jsonl").string()}, Platform::human_forum, {}),
               DataError);
}

TEST_F(IngestTest, FormatForPathByExtension) {
  using threadloop::format_for_path;
  using threadloop::IngestFormat;
  EXPECT_EQ(format_for_path("x.csv"), IngestFormat::csv);
  EXPECT_EQ(format_for_path("x.jsonl"), IngestFormat::jsonl);
  EXPECT_EQ(format_for_path("x.ndjson"), IngestFormat::jsonl);
  EXPECT_EQ(format_for_path("x.json"), IngestFormat::jsonl);
  EXPECT_THROW(format_for_path("x.txt"), threadloop::ConfigError);
}

TEST_F(IngestTest, SerializeRoundTripIsStable) {
  auto path = write("a.jsonl", row("c2", "p1", "c1", 200, "zeta") +
                                   row("c1", "p1", "", 100, "zeta") +
                                   row("b1", "q1", "", 50, "alpha", "a2",
                                       "quote \\\" and comma,"));
  Corpus c = ingest({path}, Platform::human_forum, {});
  std::ostringstream first;
  threadloop::serialize_corpus(c, first);
  auto second_path = write("b.jsonl", first.str());
  Corpus c2 = ingest({second_path}, Platform::human_forum, {});
  std::ostringstream second;
  threadloop::serialize_corpus(c2, second);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(c2.size(), c.size());
}

TEST_F(IngestTest, AuditCapReportsYearMixAndCapFlags) {
  auto path = write("a.jsonl", row("c1", "p1", "", 100, "full3") +
                                   row("c2", "p1", "", 1609459200, "full3") +
                                   row("c3", "p1", "", 300, "full3") +
                                   row("d1", "p2", "", 100, "light"));
  IngestOptions opt;
  opt.max_comments_cap = 3;
  IngestReport report;
  Corpus c = ingest({path}, Platform::human_forum, opt, &report);
  auto audits = threadloop::audit_cap(c, report);
  ASSERT_EQ(audits.size(), 2u);
  for (const auto& a : audits) {
    double sum = 0.0;
    for (const auto& [year, pct] : a.year_percent) sum += pct;
    EXPECT_NEAR(sum, 100.0, 1e-9);
    if (a.community == "full3") {
      EXPECT_TRUE(a.cap_hit);  // landed exactly on the cap
      EXPECT_EQ(a.total, 3u);
      EXPECT_NEAR(a.year_percent.at(1970), 200.0 / 3.0, 1e-9);
      EXPECT_NEAR(a.year_percent.at(2021), 100.0 / 3.0, 1e-9);
    } else {
      EXPECT_EQ(a.community, "light");
      EXPECT_FALSE(a.cap_hit);
    }
  }
}
