#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace threadloop {

// Error taxonomy maps onto the CLI exit codes: config=1, data=2, internal=3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantError(what);
}

enum class Platform { agent_forum, human_forum };

inline const char* platform_name(Platform p) {
  return p == Platform::agent_forum ? "agent_forum" : "human_forum";
}

inline Platform parse_platform(const std::string& s) {
  if (s == "agent_forum" || s == "agent" || s == "moltbook") return Platform::agent_forum;
  if (s == "human_forum" || s == "human" || s == "reddit") return Platform::human_forum;
  throw ConfigError("unknown platform: " + s);
}

using CommentIdx = std::uint32_t;
using PostIdx = std::uint32_t;
inline constexpr CommentIdx kNoComment = static_cast<CommentIdx>(-1);
inline constexpr PostIdx kNoPost = static_cast<PostIdx>(-1);

}  // namespace threadloop
