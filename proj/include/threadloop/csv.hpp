#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "threadloop/common.hpp"

namespace threadloop {

// RFC 4180 row reader: quoted fields may contain commas, doubled quotes, and
// embedded newlines. Returns false at end of input.
inline bool csv_read_row(std::istream& in, std::vector<std::string>& row) {
  row.clear();
  int c = in.get();
  if (c == std::istream::traits_type::eof()) return false;
  std::string field;
  bool quoted = false;
  bool at_field_start = true;
  while (true) {
    if (c == std::istream::traits_type::eof()) {
      row.push_back(std::move(field));
      return true;
    }
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        int peek = in.peek();
        if (peek == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && at_field_start) {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      at_field_start = true;
      c = in.get();
      continue;
    } else if (ch == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      row.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    at_field_start = false;
    c = in.get();
  }
}

inline std::string csv_escape(std::string_view field) {
  bool needs_quote = false;
  for (char ch : field) {
    if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline void csv_write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << '\n';
}

}  // namespace threadloop
