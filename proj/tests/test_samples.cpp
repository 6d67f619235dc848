// Copyright 2026 The tourvln Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_support.hpp"
#include "tourvln/samples.hpp"

using namespace tourvln;
using namespace testing_support;

namespace {

// kinds: 'r' room, 't' transition
Trajectory shaped(const std::string& video, const std::string& kinds, const std::string& suffix = "-t00") {
  Trajectory t;
  t.video_id = video;
  t.trajectory_id = video + suffix;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    TrajectoryNode n;
    n.kind = kinds[i] == 'r' ? NodeKind::room : NodeKind::transition;
    n.view.room_type = i % kRoomTypeCount;
    n.view.keyframe = {video, static_cast<std::int64_t>(10 * i)};
    if (n.kind == NodeKind::room) {
      n.group_ref = i;
      ++t.room_node_count;
    }
    t.nodes.push_back(n);
  }
  t.k_drawn = t.length();
  return t;
}

PathInstructionPair pair_for(const Trajectory& t) {
  PathInstructionPair p;
  p.trajectory_id = t.trajectory_id;
  p.pair_id = t.trajectory_id + "-p0";
  return p;
}

std::vector<int> room_subsequence(const JudgmentSample& s, const Trajectory& t) {
  std::vector<int> out;
  for (int code : s.node_order) {
    if (code >= 0 && t.nodes[static_cast<std::size_t>(code)].kind == NodeKind::room) out.push_back(code);
  }
  return out;
}

}  // namespace

TEST(Positive, IdentityOrder) {
  auto t = shaped("a", "rtrr");
  auto s = make_positive(pair_for(t), t);
  EXPECT_EQ(s.label, 1);
  EXPECT_EQ(s.node_order, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_TRUE(is_identity(s.node_order));
  EXPECT_EQ(s.sample_id, make_positive(pair_for(t), t).sample_id);
}

TEST(ShuffleTransitions, TwoTransitionsSwap) {
  auto t = shaped("a", "rtrtr");
  Rng rng(1);
  auto s = shuffle_transitions(pair_for(t), t, rng);
  EXPECT_EQ(s.node_order, (std::vector<int>{0, 3, 2, 1, 4}));
  EXPECT_EQ(s.label, 0);
  auto one = shaped("a", "rtrr");
  EXPECT_THROW(shuffle_transitions(pair_for(one), one, rng), Inapplicable);
}

TEST(ShuffleTransitions, RoomSlotsFixedPointwise) {
  Rng rng(2);
  auto t = shaped("a", "rtrtrtr");
  for (int i = 0; i < 2000; ++i) {
    auto s = shuffle_transitions(pair_for(t), t, rng);
    ASSERT_FALSE(is_identity(s.node_order));
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      if (t.nodes[k].kind == NodeKind::room) {
        EXPECT_EQ(s.node_order[k], static_cast<int>(k));
      }
    }
  }
}

TEST(ShuffleAll, ForcedSwapAndNeverIdentity) {
  auto two = shaped("a", "rr");
  Rng rng(3);
  EXPECT_EQ(shuffle_all(pair_for(two), two, rng).node_order, (std::vector<int>{1, 0}));
  auto five = shaped("a", "rtrtr");
  for (int i = 0; i < 10000; ++i) {
    auto s = shuffle_all(pair_for(five), five, rng);
    ASSERT_FALSE(is_identity(s.node_order));
    auto sorted = s.node_order;
    std::sort(sorted.begin(), sorted.end());
    ASSERT_TRUE(is_identity(sorted));
  }
  Rng a(8), b(8);
  EXPECT_EQ(shuffle_all(pair_for(five), five, a).node_order, shuffle_all(pair_for(five), five, b).node_order);
}

TEST(InsertForeign, ReplacesEveryTransitionFromOtherVideos) {
  std::vector<Trajectory> ts{shaped("a", "rtrtr"), shaped("b", "rtrr"), shaped("c", "rrrr")};
  auto pool = DonorPool::from_trajectories(ts);
  Rng rng(4);
  const auto& t = ts[0];
  for (int i = 0; i < 1000; ++i) {
    auto s = insert_foreign(pair_for(t), t, pool, rng);
    ASSERT_EQ(s.foreign_nodes.size(), 2u);  // K=5, R=3
    EXPECT_EQ(room_subsequence(s, t), (std::vector<int>{0, 2, 4}));
    EXPECT_LT(s.node_order[1], 0);
    EXPECT_LT(s.node_order[3], 0);
    for (const auto& f : s.foreign_nodes) EXPECT_NE(f.donor_video_id, "a");
  }
}

TEST(InsertForeign, SameVideoDonorsInapplicable) {
  std::vector<Trajectory> ts{shaped("a", "rtrtr"), shaped("a", "rtrr", "-t01")};
  auto pool = DonorPool::from_trajectories(ts);
  Rng rng(4);
  EXPECT_THROW(insert_foreign(pair_for(ts[0]), ts[0], pool, rng), Inapplicable);
  EXPECT_THROW(insert_foreign(pair_for(ts[0]), ts[0], DonorPool{}, rng), Inapplicable);
}

TEST(DonorPool, DrawIsUniformOverOtherVideos) {
  std::vector<Trajectory> ts{shaped("a", "rrr"), shaped("b", "rr"), shaped("c", "rrrr")};
  auto pool = DonorPool::from_trajectories(ts);
  EXPECT_EQ(pool.size(), 9u);
  EXPECT_EQ(pool.eligible_count("b"), 7u);
  EXPECT_EQ(pool.eligible_count("zzz"), 9u);
  Rng rng(5);
  std::map<std::pair<std::string, int>, int> counts;
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto& f = pool.draw("b", rng);
    ASSERT_NE(f.donor_video_id, "b");
    counts[{f.donor_video_id, f.slot}] += 1;
  }
  EXPECT_EQ(counts.size(), 7u);
  for (const auto& [_, c] : counts) EXPECT_NEAR(c, n / 7, 500);
}

TEST(MakeNegatives, DefaultCountsAndFallthrough) {
  std::vector<Trajectory> ts{shaped("a", "rtrtr"), shaped("b", "rtrr"), shaped("c", "rrrr")};
  auto pool = DonorPool::from_trajectories(ts);
  Rng rng(6);
  auto negs = make_negatives(pair_for(ts[0]), ts[0], pool, rng);
  ASSERT_EQ(negs.size(), 3u);
  EXPECT_EQ(negs[0].strategy, Strategy::shuffle_transitions);
  EXPECT_EQ(negs[1].strategy, Strategy::shuffle_all);
  EXPECT_EQ(negs[2].strategy, Strategy::insert_foreign);
  EXPECT_EQ(negs[2].sample_id, "a-t00-p0-insert_foreign-0");

  std::vector<std::string> notes;
  auto none = make_negatives(pair_for(ts[2]), ts[2], pool, rng, {}, &notes);
  ASSERT_EQ(none.size(), 1u);
  EXPECT_EQ(none[0].strategy, Strategy::shuffle_all);
  EXPECT_EQ(notes.size(), 2u);

  EXPECT_TRUE(make_negatives(pair_for(ts[0]), ts[0], pool, rng, StrategyCounts{0, 0, 0}).empty());
  auto many = make_negatives(pair_for(ts[0]), ts[0], pool, rng, StrategyCounts{2, 3, 1});
  EXPECT_EQ(many.size(), 6u);
  std::set<std::string> ids;
  for (const auto& s : many) ids.insert(s.sample_id);
  EXPECT_EQ(ids.size(), 6u);
}

TEST(JudgmentJson, RoundTrip) {
  std::vector<Trajectory> ts{shaped("a", "rtrtr"), shaped("b", "rtrr")};
  auto pool = DonorPool::from_trajectories(ts);
  Rng rng(7);
  for (const auto& s : make_negatives(pair_for(ts[0]), ts[0], pool, rng)) {
    auto j = judgment_to_json(s);
    EXPECT_EQ(judgment_to_json(judgment_from_json(j)), j);
  }
}

TEST(Split, TwentyVideos) {
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("v" + std::to_string(i));
  auto s = split_videos(ids, 0.95, 1);
  EXPECT_EQ(s.train_videos.size(), 19u);
  EXPECT_EQ(s.test_videos.size(), 1u);
  EXPECT_TRUE(s.warnings.empty());
  auto again = split_videos(ids, 0.95, 1);
  EXPECT_EQ(again.train_videos, s.train_videos);
  EXPECT_EQ(split_to_json(split_from_json(split_to_json(s))), split_to_json(s));
}

TEST(Split, OneVideoWarnsAndErrors) {
  auto s = split_videos({"only"}, 0.95, 1);
  EXPECT_EQ(s.train_videos.size(), 1u);
  EXPECT_TRUE(s.test_videos.empty());
  EXPECT_EQ(s.warnings.size(), 1u);
  EXPECT_THROW(split_videos({}, 0.95, 1), DomainError);
  EXPECT_THROW(split_videos({"a"}, 1.0, 1), ConfigError);
  EXPECT_THROW(split_videos({"a"}, 0.0, 1), ConfigError);
}

TEST(Split, PartitionForManySeedsAndSizes) {
  for (int n = 1; n <= 30; ++n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto s = split_videos(ids, 0.8, seed);
      std::vector<std::string> all = s.train_videos;
      all.insert(all.end(), s.test_videos.begin(), s.test_videos.end());
      std::sort(all.begin(), all.end());
      auto expect = ids;
      std::sort(expect.begin(), expect.end());
      EXPECT_EQ(all, expect);
      EXPECT_EQ(s.train_videos.size(), static_cast<std::size_t>(std::llround(0.8 * n)));
    }
  }
}

TEST(Ranking, ArityAndDistractors) {
  auto t = shaped("a", "rr");
  auto p = pair_for(t);
  Rng rng(8);
  auto zero = make_ranking_set(p, std::vector<std::string>{}, 0, rng);
  EXPECT_EQ(zero.candidates, (std::vector<std::string>{"a-t00"}));
  EXPECT_EQ(zero.gold_index, 0u);

  std::vector<std::string> pool{"a-t00", "b-t00", "c-t00", "d-t00", "e-t00"};
  std::set<std::size_t> golds;
  for (int i = 0; i < 400; ++i) {
    auto s = make_ranking_set(p, pool, 3, rng);
    ASSERT_EQ(s.candidates.size(), 4u);
    EXPECT_EQ(s.candidates[s.gold_index], "a-t00");
    EXPECT_EQ(std::count(s.candidates.begin(), s.candidates.end(), "a-t00"), 1);
    EXPECT_EQ(std::set<std::string>(s.candidates.begin(), s.candidates.end()).size(), 4u);
    golds.insert(s.gold_index);
  }
  EXPECT_EQ(golds, (std::set<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(make_ranking_set(p, std::vector<std::string>{"a-t00", "b-t00"}, 3, rng), GenerationError);
}

TEST(Mlm, ForcingAndMonteCarloMean) {
  std::vector<std::string> tokens(10, "w");
  Rng rng(9);
  auto tiny = make_mlm_sample(tokens, 1e-9, rng);
  EXPECT_EQ(tiny.masked_positions.size(), 1u);

  // E[masked] = n p + P(none) = 10 * 0.15 + 0.85^10
  const double expected = 10 * 0.15 + std::pow(0.85, 10);
  double total = 0.0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto s = make_mlm_sample(tokens, 0.15, rng);
    ASSERT_TRUE(std::is_sorted(s.masked_positions.begin(), s.masked_positions.end()));
    ASSERT_EQ(std::set<std::size_t>(s.masked_positions.begin(), s.masked_positions.end()).size(),
              s.masked_positions.size());
    ASSERT_FALSE(s.masked_positions.empty());
    total += static_cast<double>(s.masked_positions.size());
  }
  EXPECT_NEAR(total / trials, expected, 0.05);
  EXPECT_NEAR(total / trials, 1.5, 0.3);
  EXPECT_THROW(make_mlm_sample(std::vector<std::string>{}, 0.15, rng), DomainError);
  EXPECT_THROW(make_mlm_sample(tokens, 0.0, rng), DomainError);
}
