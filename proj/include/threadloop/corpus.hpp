#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "threadloop/common.hpp"
#include "threadloop/rng.hpp"

namespace threadloop {

struct Comment {
  std::string comment_id;
  std::string post_id;
  std::string parent_id;  // meaningful only when has_parent
  bool has_parent = false;
  std::string author_id;
  std::int64_t timestamp = 0;
  std::string body;
  std::string community;
};

// Posts are implicit thread roots reconstructed from comment rows; dumps
// carry no post table.
struct Post {
  std::string post_id;
  std::string community;
  std::int64_t timestamp = 0;  // earliest comment in the post
};

struct CommunityInfo {
  std::vector<PostIdx> posts;       // sorted by post_id
  std::vector<CommentIdx> comments; // sorted by (timestamp, comment_id)
};

// Immutable after finalize(); every analysis reads it concurrently.
struct Corpus {
  Platform platform = Platform::human_forum;
  std::vector<Comment> comments;
  std::vector<Post> posts;

  // Built by finalize(), all indexed by CommentIdx/PostIdx.
  std::unordered_map<std::string, CommentIdx> comment_by_id;
  std::unordered_map<std::string, PostIdx> post_by_id;
  std::vector<CommentIdx> parent;   // resolved same-post parent, else kNoComment
  std::vector<PostIdx> post_of;
  std::vector<std::vector<CommentIdx>> children;  // (timestamp, comment_id) order
  std::vector<int> depth;           // roots and orphans at 0
  std::vector<bool> orphan;         // parent_id present but unresolved or cycle-cut
  std::vector<std::vector<CommentIdx>> post_comments;  // (timestamp, comment_id) order
  std::map<std::string, CommunityInfo> communities;

  void finalize();

  const Comment& at(CommentIdx i) const { return comments[i]; }
  std::size_t size() const { return comments.size(); }

  CommentIdx find_comment(std::string_view id) const {
    auto it = comment_by_id.find(std::string(id));
    return it == comment_by_id.end() ? kNoComment : it->second;
  }

  const CommunityInfo& community(const std::string& id) const {
    auto it = communities.find(id);
    if (it == communities.end()) throw ConfigError("unknown community: " + id);
    return it->second;
  }
};

namespace detail {

inline bool comment_order_less(const Corpus& c, CommentIdx a, CommentIdx b) {
  const Comment& ca = c.comments[a];
  const Comment& cb = c.comments[b];
  if (ca.timestamp != cb.timestamp) return ca.timestamp < cb.timestamp;
  return ca.comment_id < cb.comment_id;
}

}  // namespace detail

inline void Corpus::finalize() {
  const std::size_t n = comments.size();
  comment_by_id.clear();
  comment_by_id.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] =
        comment_by_id.emplace(comments[i].comment_id, static_cast<CommentIdx>(i));
    if (!inserted) throw InvariantError("duplicate comment_id in corpus");
  }

  // Post stubs from comment membership; community and timestamp come from the
  // earliest (timestamp, comment_id) member.
  posts.clear();
  post_by_id.clear();
  post_of.assign(n, kNoPost);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = post_by_id.find(comments[i].post_id);
    if (it == post_by_id.end()) {
      PostIdx pi = static_cast<PostIdx>(posts.size());
      posts.push_back({comments[i].post_id, comments[i].community, comments[i].timestamp});
      post_by_id.emplace(comments[i].post_id, pi);
      post_of[i] = pi;
    } else {
      post_of[i] = it->second;
      Post& p = posts[it->second];
      if (comments[i].timestamp < p.timestamp) p.timestamp = comments[i].timestamp;
    }
  }

  // Parent resolution requires the parent to live in the same post; a
  // cross-post parent_id is corrupt linkage and the child becomes an orphan.
  parent.assign(n, kNoComment);
  orphan.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!comments[i].has_parent) continue;
    auto it = comment_by_id.find(comments[i].parent_id);
    if (it != comment_by_id.end() && post_of[it->second] == post_of[i]) {
      parent[i] = it->second;
    } else {
      orphan[i] = true;
    }
  }

  // Each comment has at most one parent, so each component holds at most one
  // cycle. Cut every cycle at its smallest (timestamp, comment_id) member,
  // reclassifying that comment as an orphan root.
  {
    std::vector<std::uint8_t> color(n, 0);  // 0 new, 1 on current path, 2 done
    std::vector<CommentIdx> path;
    for (std::size_t i = 0; i < n; ++i) {
      if (color[i] != 0) continue;
      path.clear();
      CommentIdx j = static_cast<CommentIdx>(i);
      while (j != kNoComment && color[j] == 0) {
        color[j] = 1;
        path.push_back(j);
        j = parent[j];
      }
      if (j != kNoComment && color[j] == 1) {
        CommentIdx cut = j;
        for (CommentIdx walk = parent[j]; walk != j; walk = parent[walk]) {
          if (detail::comment_order_less(*this, walk, cut)) cut = walk;
        }
        parent[cut] = kNoComment;
        orphan[cut] = true;
      }
      for (CommentIdx node : path) color[node] = 2;
    }
  }

  children.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] != kNoComment) children[parent[i]].push_back(static_cast<CommentIdx>(i));
  }
  for (auto& kids : children) {
    std::sort(kids.begin(), kids.end(),
              [&](CommentIdx a, CommentIdx b) { return detail::comment_order_less(*this, a, b); });
  }

  depth.assign(n, 0);
  {
    std::vector<CommentIdx> stack;
    for (std::size_t i = 0; i < n; ++i) {
      if (parent[i] == kNoComment) stack.push_back(static_cast<CommentIdx>(i));
    }
    while (!stack.empty()) {
      CommentIdx cur = stack.back();
      stack.pop_back();
      for (CommentIdx kid : children[cur]) {
        depth[kid] = depth[cur] + 1;
        stack.push_back(kid);
      }
    }
  }

  post_comments.assign(posts.size(), {});
  for (std::size_t i = 0; i < n; ++i) {
    post_comments[post_of[i]].push_back(static_cast<CommentIdx>(i));
  }
  for (auto& members : post_comments) {
    std::sort(members.begin(), members.end(),
              [&](CommentIdx a, CommentIdx b) { return detail::comment_order_less(*this, a, b); });
  }

  communities.clear();
  for (std::size_t p = 0; p < posts.size(); ++p) {
    communities[posts[p].community].posts.push_back(static_cast<PostIdx>(p));
  }
  for (auto& [name, info] : communities) {
    std::sort(info.posts.begin(), info.posts.end(),
              [&](PostIdx a, PostIdx b) { return posts[a].post_id < posts[b].post_id; });
  }
  for (std::size_t i = 0; i < n; ++i) {
    communities[comments[i].community].comments.push_back(static_cast<CommentIdx>(i));
  }
  for (auto& [name, info] : communities) {
    std::sort(info.comments.begin(), info.comments.end(),
              [&](CommentIdx a, CommentIdx b) { return detail::comment_order_less(*this, a, b); });
  }
}

// Per-post view over corpus indices. Orphans sit beside true roots at depth 0
// but stay listed apart so reports can flag them.
struct ThreadTree {
  PostIdx post = kNoPost;
  std::vector<CommentIdx> roots;    // parent_id absent
  std::vector<CommentIdx> orphans;  // parent_id present but unresolved
};

inline ThreadTree build_threads(const Corpus& corpus, const std::string& post_id) {
  auto it = corpus.post_by_id.find(post_id);
  if (it == corpus.post_by_id.end()) throw ConfigError("unknown post: " + post_id);
  ThreadTree tree;
  tree.post = it->second;
  for (CommentIdx i : corpus.post_comments[tree.post]) {
    if (corpus.parent[i] != kNoComment) continue;
    if (corpus.orphan[i]) tree.orphans.push_back(i);
    else tree.roots.push_back(i);
  }
  return tree;
}

// Uniform post subsample that keeps whole posts: floor(fraction * posts) from
// each community, preserving reply-chain integrity by construction.
inline Corpus subsample_posts(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ConfigError("subsample fraction must be in (0,1]");
  }
  std::vector<bool> keep_post(corpus.posts.size(), false);
  for (const auto& [name, info] : corpus.communities) {
    std::vector<PostIdx> pool = info.posts;  // already sorted by post_id
    Rng rng = derive_rng(seed, "subsample:" + name);
    std::size_t want = fraction >= 1.0
                           ? pool.size()
                           : static_cast<std::size_t>(fraction * static_cast<double>(pool.size()));
    for (std::size_t i = 0; i < want; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      keep_post[pool[i]] = true;
    }
  }
  Corpus out;
  out.platform = corpus.platform;
  for (std::size_t i = 0; i < corpus.comments.size(); ++i) {
    if (keep_post[corpus.post_of[i]]) out.comments.push_back(corpus.comments[i]);
  }
  out.finalize();
  return out;
}

}  // namespace threadloop
