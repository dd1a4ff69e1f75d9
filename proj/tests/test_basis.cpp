#include "eprmbl/basis.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstdint>
#include <set>
#include <vector>

using namespace eprmbl;

namespace {

std::uint64_t binomial(int n, int k) {
    std::uint64_t r = 1;
    for(int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

} // namespace

TEST(Basis, FourSitesZeroMagnetization) {
    const auto b = enumerate_sector(4, 0);
    const std::vector<std::uint64_t> expected{0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100};
    ASSERT_EQ(b.size(), expected.size());
    for(std::size_t k = 0; k < expected.size(); ++k) EXPECT_EQ(b[k].bits, expected[k]);
}

TEST(Basis, SizesMatchBinomial) {
    for(int L = 2; L <= 14; L += 2) {
        for(int sz = -L; sz <= L; sz += 2) {
            const auto b = enumerate_sector(L, sz);
            EXPECT_EQ(b.size(), binomial(L, (L + sz) / 2)) << "L=" << L << " sz_twice=" << sz;
        }
    }
    EXPECT_EQ(enumerate_sector(12, 0).size(), 924U);
    EXPECT_EQ(enumerate_sector(14, 0).size(), 3432U);
}

TEST(Basis, StatesSortedUniqueAndInSector) {
    const auto                  b = enumerate_sector(10, 2);
    std::set<std::uint64_t>     seen;
    std::uint64_t               prev = 0;
    for(std::size_t k = 0; k < b.size(); ++k) {
        const auto c = b[k];
        EXPECT_EQ(c.popcount(), 6);
        EXPECT_LT(c.bits, std::uint64_t{1} << 10);
        if(k > 0) EXPECT_GT(c.bits, prev);
        prev = c.bits;
        seen.insert(c.bits);
    }
    EXPECT_EQ(seen.size(), b.size());
}

TEST(Basis, IndexRoundTrip) {
    const auto b = enumerate_sector(12, 0);
    for(std::size_t k = 0; k < b.size(); ++k) EXPECT_EQ(b.index(b[k]), k);
}

TEST(Basis, FlipFlopClosure) {
    const auto b = enumerate_sector(8, 0);
    for(std::size_t k = 0; k < b.size(); ++k) {
        const auto c = b[k];
        for(int i = 0; i + 1 < 8; ++i) {
            if(c.up(i) == c.up(i + 1)) continue;
            EXPECT_TRUE(b.contains(c.flipped(i).flipped(i + 1)));
        }
    }
}

TEST(Basis, NonMemberLookup) {
    const auto b = enumerate_sector(6, 0);
    EXPECT_FALSE(b.find(SpinConfiguration{0b000111}.flipped(0)).has_value());
    EXPECT_THROW((void)b.index(SpinConfiguration{0b111111}), NumericError);
}

TEST(Basis, SiteSpin) {
    const SpinConfiguration c{0b0101};
    EXPECT_DOUBLE_EQ(site_spin(c, 0, 4), 0.5);
    EXPECT_DOUBLE_EQ(site_spin(c, 1, 4), -0.5);
    EXPECT_DOUBLE_EQ(site_spin(c, 2, 4), 0.5);
    EXPECT_DOUBLE_EQ(site_spin(c, 3, 4), -0.5);
    EXPECT_THROW((void)site_spin(c, 4, 4), NumericError);
    EXPECT_THROW((void)site_spin(c, -1, 4), NumericError);
}

TEST(Basis, InvalidDimensions) {
    EXPECT_THROW((void)enumerate_sector(5, 1), NumericError);
    EXPECT_THROW((void)enumerate_sector(0, 0), NumericError);
    EXPECT_THROW((void)enumerate_sector(32, 0), NumericError);
    EXPECT_THROW((void)enumerate_sector(4, 6), NumericError);
    EXPECT_THROW((void)enumerate_sector(4, 1), NumericError);
}

TEST(Basis, FullyPolarizedSectors) {
    const auto up   = enumerate_sector(6, 6);
    const auto down = enumerate_sector(6, -6);
    ASSERT_EQ(up.size(), 1U);
    ASSERT_EQ(down.size(), 1U);
    EXPECT_EQ(up[0].bits, 0b111111U);
    EXPECT_EQ(down[0].bits, 0U);
}
