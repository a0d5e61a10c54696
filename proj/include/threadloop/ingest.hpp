#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/corpus.hpp"
#include "threadloop/csv.hpp"
#include "threadloop/time_util.hpp"
#include "vendor/json.hpp"

namespace threadloop {

enum class IngestFormat { jsonl, csv };

struct IngestOptions {
  std::optional<std::uint64_t> max_comments_cap;        // per community
  std::optional<std::pair<int, int>> year_range;        // inclusive UTC years
};

struct IngestReport {
  std::uint64_t loaded = 0;
  std::uint64_t skipped = 0;     // malformed rows
  std::uint64_t duplicates = 0;  // repeated comment_id, later row dropped
  std::uint64_t orphans = 0;     // parent_id present but unresolvable
  std::uint64_t year_filtered = 0;
  std::uint64_t cap_dropped = 0;
  std::map<std::string, bool> cap_hit_per_community;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["loaded"] = loaded;
    j["skipped"] = skipped;
    j["duplicates"] = duplicates;
    j["orphans"] = orphans;
    j["year_filtered"] = year_filtered;
    j["cap_dropped"] = cap_dropped;
    j["cap_hit_per_community"] = cap_hit_per_community;
    return j;
  }
};

namespace detail {

struct RawRow {
  Comment comment;
  bool ok = false;
};

inline bool parse_timestamp_field(const nlohmann::json& v, std::int64_t& out) {
  if (v.is_number_integer()) {
    out = v.get<std::int64_t>();
    return out >= 0;
  }
  if (v.is_number_unsigned()) {
    out = static_cast<std::int64_t>(v.get<std::uint64_t>());
    return out >= 0;
  }
  if (v.is_string()) {
    try {
      out = parse_iso8601(v.get<std::string>());
    } catch (const DataError&) {
      return false;
    }
    return out >= 0;
  }
  return false;
}

inline bool parse_timestamp_text(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  bool all_digits = true;
  for (char c : s) {
    if (c < '0' || c > '9') {
      all_digits = false;
      break;
    }
  }
  if (all_digits) {
    try {
      out = std::stoll(s);
    } catch (...) {
      return false;
    }
    return out >= 0;
  }
  try {
    out = parse_iso8601(s);
  } catch (const DataError&) {
    return false;
  }
  return out >= 0;
}

// Field checks mirror the Comment invariants; a row that breaks one is
// malformed, not a loadable comment with odd data.
inline bool validate_row(Comment& c) {
  if (c.comment_id.empty() || c.post_id.empty() || c.author_id.empty() ||
      c.community.empty()) {
    return false;
  }
  if (c.has_parent && c.parent_id.empty()) c.has_parent = false;
  if (c.has_parent && c.parent_id == c.comment_id) return false;
  if (c.timestamp < 0) return false;
  return true;
}

inline RawRow parse_jsonl_row(const std::string& line) {
  RawRow row;
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return row;
  Comment& c = row.comment;
  auto str = [&](const char* key, std::string& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return true;
  };
  if (!str("comment_id", c.comment_id)) return row;
  if (!str("post_id", c.post_id)) return row;
  if (!str("author_id", c.author_id)) return row;
  if (!str("body", c.body)) return row;
  if (!str("community", c.community)) return row;
  auto pit = j.find("parent_id");
  if (pit != j.end() && !pit->is_null()) {
    if (!pit->is_string()) return row;
    c.parent_id = pit->get<std::string>();
    c.has_parent = true;
  }
  auto tit = j.find("timestamp");
  if (tit == j.end() || !parse_timestamp_field(*tit, c.timestamp)) return row;
  row.ok = validate_row(c);
  return row;
}

struct CsvHeader {
  int comment_id = -1, post_id = -1, parent_id = -1, author_id = -1;
  int timestamp = -1, body = -1, community = -1;
  bool complete() const {
    return comment_id >= 0 && post_id >= 0 && parent_id >= 0 && author_id >= 0 &&
           timestamp >= 0 && body >= 0 && community >= 0;
  }
};

inline CsvHeader parse_csv_header(const std::vector<std::string>& row) {
  CsvHeader h;
  for (std::size_t i = 0; i < row.size(); ++i) {
    int idx = static_cast<int>(i);
    if (row[i] == "comment_id") h.comment_id = idx;
    else if (row[i] == "post_id") h.post_id = idx;
    else if (row[i] == "parent_id") h.parent_id = idx;
    else if (row[i] == "author_id") h.author_id = idx;
    else if (row[i] == "timestamp") h.timestamp = idx;
    else if (row[i] == "body") h.body = idx;
    else if (row[i] == "community") h.community = idx;
  }
  return h;
}

inline RawRow parse_csv_row(const CsvHeader& h, const std::vector<std::string>& row) {
  RawRow out;
  int needed = std::max({h.comment_id, h.post_id, h.parent_id, h.author_id,
                         h.timestamp, h.body, h.community});
  if (static_cast<int>(row.size()) <= needed) return out;
  Comment& c = out.comment;
  c.comment_id = row[h.comment_id];
  c.post_id = row[h.post_id];
  c.author_id = row[h.author_id];
  c.body = row[h.body];
  c.community = row[h.community];
  if (!row[h.parent_id].empty()) {
    c.parent_id = row[h.parent_id];
    c.has_parent = true;
  }
  if (!parse_timestamp_text(row[h.timestamp], c.timestamp)) return out;
  out.ok = validate_row(c);
  return out;
}

}  // namespace detail

inline IngestFormat format_for_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  if (ext == ".csv") return IngestFormat::csv;
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return IngestFormat::jsonl;
  throw ConfigError("cannot infer format from extension: " + p.string());
}

// Streams rows in file order: year filter first, then the per-community cap,
// matching how the corpora in the measurement pipeline were assembled.
inline Corpus ingest(const std::vector<std::string>& paths, Platform platform,
                     const IngestOptions& options, IngestReport* report_out = nullptr,
                     std::optional<IngestFormat> forced_format = std::nullopt) {
  Corpus corpus;
  corpus.platform = platform;
  IngestReport report;
  std::unordered_set<std::string> seen_ids;
  std::map<std::string, std::uint64_t> community_counts;
  std::uint64_t rows_total = 0;

  auto admit = [&](detail::RawRow&& row) {
    ++rows_total;
    if (!row.ok) {
      ++report.skipped;
      return;
    }
    Comment& c = row.comment;
    if (options.year_range) {
      int year = utc_year(c.timestamp);
      if (year < options.year_range->first || year > options.year_range->second) {
        ++report.year_filtered;
        return;
      }
    }
    if (!seen_ids.insert(c.comment_id).second) {
      ++report.duplicates;
      return;
    }
    if (options.max_comments_cap) {
      std::uint64_t& count = community_counts[c.community];
      if (count >= *options.max_comments_cap) {
        ++report.cap_dropped;
        report.cap_hit_per_community[c.community] = true;
        return;
      }
      ++count;
    }
    ++report.loaded;
    corpus.comments.push_back(std::move(c));
  };

  std::vector<std::filesystem::path> files;
  for (const auto& p : paths) {
    std::filesystem::path path(p);
    if (std::filesystem::is_directory(path)) {
      std::vector<std::filesystem::path> inside;
      for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file()) inside.push_back(entry.path());
      }
      std::sort(inside.begin(), inside.end());
      for (auto& f : inside) files.push_back(std::move(f));
    } else {
      files.push_back(path);
    }
  }
  if (files.empty()) throw ConfigError("no input files");

  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open input: " + file.string());
    IngestFormat fmt = forced_format ? *forced_format : format_for_path(file);
    if (fmt == IngestFormat::jsonl) {
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        admit(detail::parse_jsonl_row(line));
      }
    } else {
      std::vector<std::string> row;
      if (!csv_read_row(in, row)) continue;
      detail::CsvHeader header = detail::parse_csv_header(row);
      if (!header.complete()) {
        throw DataError("csv header missing required columns in " + file.string());
      }
      while (csv_read_row(in, row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        admit(detail::parse_csv_row(header, row));
      }
    }
  }

  if (rows_total > 0 && report.skipped * 2 > rows_total) {
    throw DataError("more than half of input rows are malformed; schema mismatch");
  }

  // Cap hit also when a community landed exactly on the cap.
  if (options.max_comments_cap) {
    for (const auto& [name, count] : community_counts) {
      if (count >= *options.max_comments_cap) report.cap_hit_per_community[name] = true;
      else if (!report.cap_hit_per_community.count(name))
        report.cap_hit_per_community[name] = false;
    }
  }

  corpus.finalize();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.orphan[i]) ++report.orphans;
  }
  if (report_out) *report_out = report;
  return corpus;
}

// Year distribution audit over the loaded corpus.
struct CommunityYearAudit {
  std::string community;
  std::uint64_t total = 0;
  std::map<int, double> year_percent;
  bool cap_hit = false;
};

inline std::vector<CommunityYearAudit> audit_cap(const Corpus& corpus,
                                                 const IngestReport& report) {
  std::vector<CommunityYearAudit> out;
  for (const auto& [name, info] : corpus.communities) {
    CommunityYearAudit row;
    row.community = name;
    row.total = info.comments.size();
    std::map<int, std::uint64_t> per_year;
    for (CommentIdx i : info.comments) ++per_year[utc_year(corpus.at(i).timestamp)];
    for (const auto& [year, count] : per_year) {
      row.year_percent[year] =
          row.total ? 100.0 * static_cast<double>(count) / static_cast<double>(row.total) : 0.0;
    }
    auto it = report.cap_hit_per_community.find(name);
    row.cap_hit = it != report.cap_hit_per_community.end() && it->second;
    out.push_back(std::move(row));
  }
  return out;
}

// Canonical corpus serialization: community, then post, then thread order.
// Two ingests of the same inputs serialize byte-identically.
inline void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& [name, info] : corpus.communities) {
    for (PostIdx p : info.posts) {
      for (CommentIdx i : corpus.post_comments[p]) {
        const Comment& c = corpus.at(i);
        nlohmann::json j;
        j["comment_id"] = c.comment_id;
        j["post_id"] = c.post_id;
        if (c.has_parent) j["parent_id"] = c.parent_id;
        else j["parent_id"] = nullptr;
        j["author_id"] = c.author_id;
        j["timestamp"] = c.timestamp;
        j["body"] = c.body;
        j["community"] = c.community;
        out << j.dump() << '\n';
      }
    }
  }
}

}  // namespace threadloop
