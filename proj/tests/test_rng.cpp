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
#include <map>
#include <set>

#include "tourvln/format.hpp"
#include "tourvln/rng.hpp"

using namespace tourvln;

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedSeedsDependOnEveryTag) {
  const auto base = derive_seed(42, "trajectories", "vid000", 0);
  EXPECT_EQ(base, derive_seed(42, "trajectories", "vid000", 0));
  EXPECT_NE(base, derive_seed(43, "trajectories", "vid000", 0));
  EXPECT_NE(base, derive_seed(42, "samples", "vid000", 0));
  EXPECT_NE(base, derive_seed(42, "trajectories", "vid001", 0));
  EXPECT_NE(base, derive_seed(42, "trajectories", "vid000", 1));
  // tag boundaries matter
  EXPECT_NE(derive_seed(1, "ab", "c"), derive_seed(1, "a", "bc"));
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  Rng rng(7);
  std::map<std::size_t, int> counts;
  const int n = 60000;
  for (int i = 0; i < n; ++i) counts[rng.uniform_index(6)] += 1;
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [k, c] : counts) {
    EXPECT_LT(k, 6u);
    EXPECT_NEAR(c, n / 6, 400);  // ~5 sigma
  }
}

TEST(Rng, UniformIntIsClosed) {
  Rng rng(1);
  std::set<int> seen;
  for (int i = 0; i < 2000; ++i) seen.insert(rng.uniform_int(4, 7));
  EXPECT_EQ(seen, (std::set<int>{4, 5, 6, 7}));
  EXPECT_EQ(rng.uniform_int(3, 3), 3);
  EXPECT_THROW(rng.uniform_int(5, 4), DomainError);
  EXPECT_THROW(rng.uniform_index(0), DomainError);
}

TEST(Rng, Uniform01InUnitInterval) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, SampleIndicesDistinctSortedInRange) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 1 + rng.uniform_index(20);
    std::size_t k = rng.uniform_index(n + 1);
    auto s = rng.sample_indices(n, k);
    ASSERT_EQ(s.size(), k);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), k);
    for (auto i : s) EXPECT_LT(i, n);
  }
  EXPECT_THROW(rng.sample_indices(3, 4), DomainError);
}

TEST(Rng, ShuffleIsPermutationAndHitsAllOrders) {
  Rng rng(5);
  std::set<std::vector<int>> orders;
  for (int i = 0; i < 600; ++i) {
    std::vector<int> v{0, 1, 2};
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    ASSERT_EQ(sorted, (std::vector<int>{0, 1, 2}));
    orders.insert(v);
  }
  EXPECT_EQ(orders.size(), 6u);
}

TEST(Format, RoundSigSixDigits) {
  EXPECT_EQ(round_sig(0.123456789), 0.123457);
  EXPECT_EQ(round_sig(123456789.0), 123457000.0);
  EXPECT_EQ(round_sig(0.0), 0.0);
  EXPECT_EQ(format_sig(1.0 / 3.0), "0.333333");
}

TEST(Format, JsonlRoundTripAndLineNumbers) {
  std::vector<Json> rows{{{"a", 1}}, {{"b", "x"}}};
  std::istringstream in(to_jsonl(rows) + "\n");
  auto back = parse_jsonl(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], rows[0]);
  EXPECT_EQ(back[1], rows[1]);

  std::istringstream bad("{\"a\":1}\n\n{oops\n");
  try {
    parse_jsonl(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Format, SplitWhitespace) {
  EXPECT_EQ(split_whitespace("  go  to\tthe kitchen "), (std::vector<std::string>{"go", "to", "the", "kitchen"}));
  EXPECT_TRUE(split_whitespace("   ").empty());
}
