#pragma once

#include <string>
#include <string_view>

namespace threadloop {

// Case-folds text for cue matching: ASCII A-Z, the Latin-1 supplement range
// (so "É" folds like "é"), and typographic apostrophes U+2018/U+2019
// normalized to ASCII '\''. Cue lists are ASCII, so this is sufficient for
// matching; other bytes pass through untouched.
inline std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (c == 0xE2 && i + 2 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0x80 &&
               (static_cast<unsigned char>(text[i + 2]) == 0x98 ||
                static_cast<unsigned char>(text[i + 2]) == 0x99)) {
      out.push_back('\'');
      i += 2;
    } else if (c == 0xC3 && i + 1 < text.size()) {
      unsigned char d = static_cast<unsigned char>(text[i + 1]);
      // U+00C0..U+00DE fold to U+00E0..U+00FE, except U+00D7 (multiplication sign)
      if (d >= 0x80 && d <= 0x9E && d != 0x97) d = static_cast<unsigned char>(d + 0x20);
      out.push_back(static_cast<char>(c));
      out.push_back(static_cast<char>(d));
      ++i;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

// Whitespace-token word count; the comment-length metric.
inline int word_count(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (char ch : text) {
    bool ws = ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

inline bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

}  // namespace threadloop
