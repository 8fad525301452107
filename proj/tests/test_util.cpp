#include <atomic>
#include <set>

#include <gtest/gtest.h>

#include "rulsif/rng.hpp"
#include "rulsif/threading.hpp"

using namespace rulsif;

TEST(DeriveSeed, StreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t master : {0ull, 1ull, 0xDEADBEEFull}) {
    for (std::uint64_t stream = 0; stream < 1000; ++stream) {
      seen.insert(derive_seed(master, stream));
    }
  }
  EXPECT_EQ(seen.size(), 3000u);
  EXPECT_EQ(derive_seed(42, 7), derive_seed(42, 7));
}

TEST(ShuffledIndices, PermutationOfRange) {
  auto engine = make_engine(5);
  const auto idx = shuffled_indices(100, engine);
  std::set<Index> unique(idx.begin(), idx.end());
  EXPECT_EQ(unique.size(), 100u);
  EXPECT_EQ(*unique.begin(), 0);
  EXPECT_EQ(*unique.rbegin(), 99);
}

TEST(ParallelFor, CoversAllIndicesOnce) {
  std::vector<std::atomic<int>> hits(500);
  parallel_for(500, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, SerialFallbackAndEmptyRange) {
  int count = 0;
  parallel_for(7, 1, [&](std::size_t) { ++count; });
  EXPECT_EQ(count, 7);
  parallel_for(0, 4, [&](std::size_t) { FAIL(); });
}

TEST(ParallelFor, PropagatesFirstException) {
  EXPECT_THROW(parallel_for(64, 4,
                            [&](std::size_t i) {
                              if (i == 13) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
