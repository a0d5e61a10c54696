#include <gtest/gtest.h>

#include "threadloop/text.hpp"

using threadloop::contains;
using threadloop::normalize_for_match;
using threadloop::word_count;

TEST(NormalizeForMatch, AsciiLowercasing) {
  EXPECT_EQ(normalize_for_match("Hello WORLD"), "hello world");
  EXPECT_EQ(normalize_for_match("MiXeD CaSe 123!?"), "mixed case 123!?");
  EXPECT_EQ(normalize_for_match(""), "");
}

TEST(NormalizeForMatch, CurlyApostrophesBecomeAscii) {
  // U+2019 right single quote
  EXPECT_EQ(normalize_for_match("don’t"), "don't");
  // U+2018 left single quote
  EXPECT_EQ(normalize_for_match("don‘t"), "don't");
  EXPECT_EQ(normalize_for_match("‘quoted’"), "'quoted'");
}

TEST(NormalizeForMatch, LatinOneUppercaseFolds) {
  // U+00C4 -> U+00E4, U+00C9 -> U+00E9
  EXPECT_EQ(normalize_for_match("Ärger"), "ärger");
  EXPECT_EQ(normalize_for_match("École"), "école");
  // U+00DE (capital thorn, last of the C3 fold range) -> U+00FE
  EXPECT_EQ(normalize_for_match("Þ"), "þ");
}

TEST(NormalizeForMatch, MultiplicationSignUntouched) {
  // U+00D7 sits inside the C3 page but is punctuation, not a letter.
  EXPECT_EQ(normalize_for_match("3×4"), "3×4");
  EXPECT_EQ(normalize_for_match("don×t"), "don×t");
}

TEST(NormalizeForMatch, LowercaseNonAsciiPassesThrough) {
  EXPECT_EQ(normalize_for_match("café"), "café");
  // Multi-byte sequences outside the handled pages survive byte for byte.
  EXPECT_EQ(normalize_for_match("中文 OK"), "中文 ok");
}

TEST(NormalizeForMatch, Idempotent) {
  const char* samples[] = {"Hello", "don’t", "Ä", "plain", "A×B"};
  for (const char* s : samples) {
    std::string once = normalize_for_match(s);
    EXPECT_EQ(normalize_for_match(once), once) << s;
  }
}

TEST(WordCount, CountsWhitespaceSeparatedRuns) {
  EXPECT_EQ(word_count(""), 0);
  EXPECT_EQ(word_count("   "), 0);
  EXPECT_EQ(word_count("one"), 1);
  EXPECT_EQ(word_count("one two three"), 3);
  EXPECT_EQ(word_count("  padded   with\textra \n whitespace  "), 4);
  EXPECT_EQ(word_count("a\nb\nc"), 3);
}

TEST(Contains, PlainSubstring) {
  EXPECT_TRUE(contains("hello world", "lo wo"));
  EXPECT_TRUE(contains("abc", ""));
  EXPECT_FALSE(contains("abc", "abcd"));
  EXPECT_FALSE(contains("", "x"));
}
