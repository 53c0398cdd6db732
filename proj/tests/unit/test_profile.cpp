#include <gtest/gtest.h>

#include "ategb/parallel.hpp"
#include "ategb/profile.hpp"

using namespace ategb;

TEST(Profile, StringRoundTrip) {
  EXPECT_EQ(profile_string(0b01, 2), "10");
  EXPECT_EQ(profile_string(0b10, 2), "01");
  EXPECT_EQ(parse_profile("101", 3), 0b101u);
  for (Profile d = 0; d < profile_count(4); ++d) EXPECT_EQ(parse_profile(profile_string(d, 4), 4), d);
  EXPECT_THROW(parse_profile("12", 2), std::invalid_argument);
  EXPECT_THROW(parse_profile("1", 2), std::invalid_argument);
}

TEST(Profile, OpponentsPackingInverts) {
  for (int S = 2; S <= 5; ++S)
    for (Profile d = 0; d < profile_count(S); ++d)
      for (int s = 0; s < S; ++s) {
        const auto opp = opponents(d, s);
        EXPECT_LT(opp, 1u << (S - 1));
        EXPECT_EQ(with_player(opp, s, bit(d, s)), d);
      }
  EXPECT_EQ(opponents(0b110, 0), 0b11u);
  EXPECT_EQ(opponents(0b110, 1), 0b10u);
}

TEST(Profile, ReductionsAndExtensions) {
  EXPECT_TRUE(is_reduction(0b01, 0b11));
  EXPECT_FALSE(is_reduction(0b11, 0b11));
  EXPECT_FALSE(is_reduction(0b10, 0b01));
  EXPECT_TRUE(is_extension(0b111, 0b001));
  EXPECT_EQ(entrants(0b1011), 3);
}

TEST(Profile, LevelsPartitionTheCube) {
  for (int S = 1; S <= 6; ++S) {
    std::size_t total = 0;
    for (int j = 0; j <= S; ++j) {
      for (Profile d : profiles_with_count(S, j)) EXPECT_EQ(entrants(d), j);
      total += profiles_with_count(S, j).size();
    }
    EXPECT_EQ(total, profile_count(S));
  }
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Parallel, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}
