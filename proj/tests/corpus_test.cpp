#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "threadloop/corpus.hpp"

using threadloop::CommentIdx;
using threadloop::Corpus;
using threadloop::kNoComment;
using threadloop::Platform;

namespace {

void add(Corpus& c, const std::string& id, const std::string& post,
         const std::string& parent, const std::string& author, std::int64_t ts,
         const std::string& community, const std::string& body = "x") {
  threadloop::Comment cm;
  cm.comment_id = id;
  cm.post_id = post;
  cm.author_id = author;
  cm.timestamp = ts;
  cm.body = body;
  cm.community = community;
  if (!parent.empty()) {
    cm.parent_id = parent;
    cm.has_parent = true;
  }
  c.comments.push_back(std::move(cm));
}

Corpus two_post_corpus() {
  Corpus c;
  c.platform = Platform::human_forum;
  add(c, "c1", "p1", "", "u1", 100, "alpha");
  add(c, "c2", "p1", "c1", "u2", 200, "alpha");
  add(c, "c3", "p1", "c2", "u1", 300, "alpha");
  add(c, "c4", "p1", "c1", "u3", 150, "alpha");
  add(c, "c5", "p1", "", "u2", 50, "alpha");
  add(c, "c6", "p1", "zzz", "u4", 400, "alpha");   // dangling parent
  add(c, "d1", "p2", "", "u9", 1000, "beta");
  add(c, "d2", "p2", "d1", "u9", 1100, "beta");
  add(c, "d3", "p2", "c1", "u5", 1200, "beta");    // parent lives in p1
  c.finalize();
  return c;
}

CommentIdx idx(const Corpus& c, const std::string& id) {
  CommentIdx i = c.find_comment(id);
  EXPECT_NE(i, kNoComment) << id;
  return i;
}

}  // namespace

TEST(CorpusFinalize, ResolvesSamePostParents) {
  Corpus c = two_post_corpus();
  EXPECT_EQ(c.parent[idx(c, "c2")], idx(c, "c1"));
  EXPECT_EQ(c.parent[idx(c, "c3")], idx(c, "c2"));
  EXPECT_EQ(c.parent[idx(c, "c1")], kNoComment);
  EXPECT_FALSE(c.orphan[idx(c, "c1")]);
}

TEST(CorpusFinalize, DanglingParentBecomesOrphan) {
  Corpus c = two_post_corpus();
  CommentIdx i = idx(c, "c6");
  EXPECT_EQ(c.parent[i], kNoComment);
  EXPECT_TRUE(c.orphan[i]);
  EXPECT_EQ(c.depth[i], 0);
  EXPECT_TRUE(c.at(i).has_parent);  // field presence survives orphaning
}

TEST(CorpusFinalize, CrossPostParentBecomesOrphan) {
  Corpus c = two_post_corpus();
  CommentIdx i = idx(c, "d3");
  EXPECT_EQ(c.parent[i], kNoComment);
  EXPECT_TRUE(c.orphan[i]);
}

TEST(CorpusFinalize, DepthsFollowResolvedChain) {
  Corpus c = two_post_corpus();
  EXPECT_EQ(c.depth[idx(c, "c1")], 0);
  EXPECT_EQ(c.depth[idx(c, "c2")], 1);
  EXPECT_EQ(c.depth[idx(c, "c4")], 1);
  EXPECT_EQ(c.depth[idx(c, "c3")], 2);
  EXPECT_EQ(c.depth[idx(c, "d2")], 1);
}

TEST(CorpusFinalize, ChildrenSortedByTimestampThenId) {
  Corpus c = two_post_corpus();
  const auto& kids = c.children[idx(c, "c1")];
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_EQ(kids[0], idx(c, "c4"));  // ts 150
  EXPECT_EQ(kids[1], idx(c, "c2"));  // ts 200
}

TEST(CorpusFinalize, PostTimestampIsEarliestComment) {
  Corpus c = two_post_corpus();
  EXPECT_EQ(c.posts[c.post_by_id.at("p1")].timestamp, 50);
  EXPECT_EQ(c.posts[c.post_by_id.at("p2")].timestamp, 1000);
}

TEST(CorpusFinalize, PostCommentsChronological) {
  Corpus c = two_post_corpus();
  const auto& members = c.post_comments[c.post_by_id.at("p1")];
  std::vector<std::string> ids;
  for (CommentIdx i : members) ids.push_back(c.at(i).comment_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"c5", "c1", "c4", "c2", "c3", "c6"}));
}

TEST(CorpusFinalize, CommunityViewsSorted) {
  Corpus c = two_post_corpus();
  ASSERT_EQ(c.communities.size(), 2u);
  const auto& alpha = c.community("alpha");
  EXPECT_EQ(alpha.posts.size(), 1u);
  EXPECT_EQ(alpha.comments.size(), 6u);
  EXPECT_EQ(c.at(alpha.comments.front()).comment_id, "c5");
  EXPECT_EQ(c.at(alpha.comments.back()).comment_id, "c6");
  EXPECT_THROW(c.community("gamma"), threadloop::ConfigError);
}

TEST(CorpusFinalize, TimestampTieBreaksOnCommentId) {
  Corpus c;
  add(c, "b", "p", "", "u1", 10, "x");
  add(c, "a", "p", "", "u2", 10, "x");
  c.finalize();
  const auto& members = c.post_comments[0];
  EXPECT_EQ(c.at(members[0]).comment_id, "a");
  EXPECT_EQ(c.at(members[1]).comment_id, "b");
}

TEST(CorpusFinalize, DuplicateIdsRejected) {
  Corpus c;
  add(c, "same", "p", "", "u1", 1, "x");
  add(c, "same", "p", "", "u2", 2, "x");
  EXPECT_THROW(c.finalize(), threadloop::InvariantError);
}

TEST(CorpusFinalize, TwoCycleCutAtEarliestMember) {
  Corpus c;
  add(c, "x1", "p", "x2", "u1", 10, "x");
  add(c, "x2", "p", "x1", "u2", 20, "x");
  add(c, "x3", "p", "x2", "u3", 30, "x");
  c.finalize();
  CommentIdx x1 = c.find_comment("x1"), x2 = c.find_comment("x2"),
             x3 = c.find_comment("x3");
  EXPECT_EQ(c.parent[x1], kNoComment);
  EXPECT_TRUE(c.orphan[x1]);
  EXPECT_EQ(c.parent[x2], x1);
  EXPECT_FALSE(c.orphan[x2]);
  EXPECT_EQ(c.depth[x1], 0);
  EXPECT_EQ(c.depth[x2], 1);
  EXPECT_EQ(c.depth[x3], 2);
}

TEST(CorpusFinalize, SelfParentCutAsOrphan) {
  Corpus c;
  add(c, "s", "p", "s", "u1", 5, "x");
  c.finalize();
  CommentIdx s = c.find_comment("s");
  EXPECT_EQ(c.parent[s], kNoComment);
  EXPECT_TRUE(c.orphan[s]);
}

TEST(BuildThreads, SeparatesRootsFromOrphans) {
  Corpus c = two_post_corpus();
  auto tree = threadloop::build_threads(c, "p1");
  std::vector<std::string> roots, orphans;
  for (CommentIdx i : tree.roots) roots.push_back(c.at(i).comment_id);
  for (CommentIdx i : tree.orphans) orphans.push_back(c.at(i).comment_id);
  EXPECT_EQ(roots, (std::vector<std::string>{"c5", "c1"}));
  EXPECT_EQ(orphans, (std::vector<std::string>{"c6"}));
  EXPECT_THROW(threadloop::build_threads(c, "nope"), threadloop::ConfigError);
}

TEST(SubsamplePosts, KeepsWholePostsAndHonorsFraction) {
  Corpus c;
  for (int p = 0; p < 10; ++p) {
    std::string post = "p" + std::to_string(p);
    add(c, post + "_root", post, "", "u1", 100 + p, "x");
    add(c, post + "_kid", post, post + "_root", "u2", 200 + p, "x");
  }
  c.finalize();
  Corpus half = threadloop::subsample_posts(c, 0.5, 7);
  EXPECT_EQ(half.posts.size(), 5u);
  EXPECT_EQ(half.size(), 10u);  // both members of each kept post survive
  for (std::size_t i = 0; i < half.size(); ++i) {
    if (half.at(static_cast<CommentIdx>(i)).has_parent) {
      EXPECT_NE(half.parent[i], kNoComment);  // no reply chain was severed
    }
  }
  Corpus all = threadloop::subsample_posts(c, 1.0, 7);
  EXPECT_EQ(all.posts.size(), 10u);
  EXPECT_EQ(all.size(), 20u);
}

TEST(SubsamplePosts, DeterministicPerSeed) {
  Corpus c;
  for (int p = 0; p < 20; ++p) {
    add(c, "c" + std::to_string(p), "p" + std::to_string(p), "", "u1", p, "x");
  }
  c.finalize();
  auto ids = [](const Corpus& s) {
    std::set<std::string> out;
    for (const auto& cm : s.comments) out.insert(cm.comment_id);
    return out;
  };
  EXPECT_EQ(ids(threadloop::subsample_posts(c, 0.3, 11)),
            ids(threadloop::subsample_posts(c, 0.3, 11)));
  EXPECT_NE(ids(threadloop::subsample_posts(c, 0.3, 11)),
            ids(threadloop::subsample_posts(c, 0.3, 12)));
}

TEST(SubsamplePosts, RejectsBadFraction) {
  Corpus c = two_post_corpus();
  EXPECT_THROW(threadloop::subsample_posts(c, 0.0, 1), threadloop::ConfigError);
  EXPECT_THROW(threadloop::subsample_posts(c, 1.5, 1), threadloop::ConfigError);
}
