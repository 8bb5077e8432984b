#include <gtest/gtest.h>

#include <random>

#include "oracles/numa_oracle.hpp"
#include "support.hpp"

using namespace ldesc;
using namespace ldesc::test;

namespace {

// Four contiguous 16 KiB D-tiles, one CTA per C-tile.
LocalityDescriptor four_tiles(Addr base = 0) {
    return coaccessed(structure("t", base, 4, {16384, 1, 1}), {4096, 1, 1}, {1, 1, 1});
}

}  // namespace

TEST(Numa, BitRangeZones) {
    const auto m = ZoneMapping::bitrange(14, 4);
    EXPECT_EQ(zone_of_address(0x0, m, 4), 0u);
    EXPECT_EQ(zone_of_address(0x4000, m, 4), 1u);
    EXPECT_EQ(zone_of_address(0xC000, m, 4), 3u);
}

TEST(Numa, XorHashRule) {
    const auto m = ZoneMapping::xor_hash(4);
    for (Addr a : {0x0ULL, 0x80ULL, 0x1180ULL, 0xdeadbe80ULL, 0x123456789ULL}) {
        const Addr want = ((a >> 7) ^ (a >> 9) ^ (a >> 11)) % 4;
        EXPECT_EQ(zone_of_address(a, m, 4), want);
    }
}

TEST(Numa, FirstTouchUnplaced) {
    FirstTouchPlacement p;
    const ZoneMapping ft{MappingScheme::FIRST_TOUCH, 7, 2};
    EXPECT_THROW(zone_of_address(0x10000, ft, 4, &p), Error);
    p.touch(0x10000, 2);
    p.touch(0x10040, 3);  // same page: first toucher wins
    EXPECT_EQ(zone_of_address(0x1ffff, ft, 4, &p), 2u);
    try {
        p.zone_of(0x20000);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UNPLACED_PAGE);
    }
}

TEST(Numa, NumaPartAlignedTiles) {
    const auto d = four_tiles();
    const auto grid = grid_of({4, 1, 1});
    EXPECT_EQ(numa_part(d, 14, grid, 4), (CtaPartition{0, 1, 2, 3}));
    EXPECT_EQ(numa_part(d, 16, grid, 4), (CtaPartition{0, 0, 0, 0}));
}

TEST(Numa, NumaPartTieGoesLow) {
    // One 256 B tile split evenly over zones 0 and 1 by 128 B stripes.
    const auto d = coaccessed(structure("t", 0, 4, {64, 1, 1}), {64, 1, 1}, {1, 1, 1});
    EXPECT_EQ(numa_part(d, 7, grid_of({1, 1, 1}), 2), (CtaPartition{0}));
}

TEST(Numa, CompUtilExamples) {
    const auto d = four_tiles();
    const auto grid = grid_of({4, 1, 1});
    EXPECT_DOUBLE_EQ(comp_util(3, d, grid, CtaPartition{0, 1, 2, 3}, 14, 4), 3.0);
    // 2 zones, every C-tile placed in the other zone.
    EXPECT_DOUBLE_EQ(comp_util(2, d, grid, CtaPartition{1, 0, 1, 0}, 14, 2), 0.0);
    const auto one = coaccessed(structure("t", 0, 4, {64, 1, 1}), {64, 1, 1}, {1, 1, 1});
    EXPECT_DOUBLE_EQ(comp_util(1, one, grid_of({1, 1, 1}), CtaPartition{1}, 7, 2), 0.5);
    EXPECT_THROW(comp_util(1, one, grid_of({1, 1, 1}), CtaPartition{}, 7, 2), Error);
}

TEST(Numa, PlanSingleDescriptor) {
    const auto d = four_tiles();
    const auto plan = place_and_partition(std::vector{d}, grid_of({4, 1, 1}), 4);
    EXPECT_EQ(plan.mappings.at(0).low_bit, 14u);
    EXPECT_EQ(plan.per_structure.at("t").low_bit, 14u);
    EXPECT_DOUBLE_EQ(plan.utility, 1.0);
    EXPECT_EQ(plan.cta_partition, (CtaPartition{0, 1, 2, 3}));
    EXPECT_FALSE(plan.balance_guard_relaxed);
}

TEST(Numa, PlanTwoIdenticalDescriptors) {
    auto a = four_tiles(0x100000);
    auto b = four_tiles(0x200000);
    b.data.name = "u";
    b.priority = 1;
    const auto plan = place_and_partition(std::vector{a, b}, grid_of({4, 1, 1}), 4);
    EXPECT_EQ(plan.mappings[0].low_bit, plan.mappings[1].low_bit);
    EXPECT_DOUBLE_EQ(plan.utility, 2.0 + 1.0);
}

TEST(Numa, PlanOneZone) {
    auto a = four_tiles(0x100000);
    auto b = four_tiles(0x200000);
    b.data.name = "u";
    b.priority = 1;
    const auto plan = place_and_partition(std::vector{a, b}, grid_of({4, 1, 1}), 1);
    EXPECT_DOUBLE_EQ(plan.utility, 3.0);
    for (auto z : plan.cta_partition) EXPECT_EQ(z, 0u);
}

TEST(Numa, GuardRelaxedWhenNothingBalances) {
    // Single C-tile: every partition puts all CTAs in one zone.
    const auto d = coaccessed(structure("t", 0, 4, {1024, 1, 1}), {1024, 1, 1}, {4, 1, 1});
    const auto plan = place_and_partition(std::vector{d}, grid_of({4, 1, 1}), 4);
    EXPECT_TRUE(plan.balance_guard_relaxed);
    EXPECT_DOUBLE_EQ(plan.utility, 1.0);
    PlacementOptions off;
    off.balance_guard = false;
    EXPECT_FALSE(place_and_partition(std::vector{d}, grid_of({4, 1, 1}), 4, off).balance_guard_relaxed);
}

TEST(Numa, GuardRejectsSkewedCandidate) {
    // 32 KiB tiles: low_bit 15 gives full locality but puts everything in zones 0 and 1.
    const auto d = coaccessed(structure("t", 0, 4, {32768, 1, 1}), {8192, 1, 1}, {1, 1, 1});
    const auto grid = grid_of({4, 1, 1});
    const auto guarded = place_and_partition(std::vector{d}, grid, 4);
    PlacementOptions off;
    off.balance_guard = false;
    const auto free = place_and_partition(std::vector{d}, grid, 4, off);
    EXPECT_DOUBLE_EQ(free.utility, 1.0);
    EXPECT_TRUE(partition_balanced(guarded.cta_partition, 4, 1.25));
    EXPECT_LE(guarded.utility, free.utility);
}

TEST(Numa, FirstTouchSkew) {
    const auto grid = grid_of({8, 1, 1});
    std::vector<TouchEvent> trace;
    // CTAs of zone 0 (ids 0,1) run ahead and touch every page first.
    for (Addr page = 0; page < 8; ++page) trace.push_back({0, 0x100000 + page * kPageBytes});
    for (CtaId c = 0; c < 8; ++c) trace.push_back({c, 0x100000 + c * kPageBytes});
    const auto r = baseline_first_touch(grid, 4, trace);
    EXPECT_EQ(r.cta_partition, (CtaPartition{0, 0, 1, 1, 2, 2, 3, 3}));
    for (const auto& [page, zone] : r.pages.pages()) EXPECT_EQ(zone, 0u);

    std::vector<TouchEvent> fair{{4, 0x100000}};
    EXPECT_EQ(baseline_first_touch(grid, 4, fair).pages.zone_of(0x100000), 2u);
}

TEST(NumaProperty, BurstsNeverSplit) {
    std::mt19937_64 rng(7);
    for (std::uint32_t zones : {2u, 4u, 8u})
        for (unsigned lb = kMinLowBit; lb <= kMaxLowBit; ++lb) {
            const auto m = ZoneMapping::bitrange(lb, zones);
            for (int i = 0; i < 200; ++i) {
                const Addr burst = (rng() >> 8) & ~Addr{kBurstBytes - 1};
                const auto z = zone_of_address(burst, m, zones);
                EXPECT_EQ(zone_of_address(burst + kBurstBytes - 1, m, zones), z);
            }
        }
}

TEST(NumaProperty, ZoneBytesMatchElementCount) {
    const auto d = coaccessed(structure("t", 0x30000, 4, {300, 7, 2}), {100, 3, 1}, {1, 1, 1});
    const Dim3 counts = dtile_count(d);
    for (unsigned lb = 7; lb <= 16; ++lb)
        for (std::uint64_t k = 0; k < counts.product(); ++k)
            ASSERT_EQ(dtile_zone_bytes(make_tile_index(delinearize(k, counts), counts), d, lb, 4),
                      oracle::zone_bytes(d, k, lb, 4));
}

TEST(NumaProperty, CompUtilBoundedAndMonotone) {
    const auto d = coaccessed(structure("t", 0, 4, {8192, 1, 1}), {1024, 1, 1}, {1, 1, 1});
    const auto grid = grid_of({8, 1, 1});
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        CtaPartition part(8);
        for (auto& z : part) z = static_cast<std::uint32_t>(rng() % 4);
        const unsigned lb = 7 + static_cast<unsigned>(rng() % 10);
        const double u = comp_util(2.0, d, grid, part, lb, 4);
        ASSERT_GE(u, 0.0);
        ASSERT_LE(u, 2.0 + 1e-12);
        // Moving one C-tile to its majority zone never lowers utility.
        const auto best = numa_part(d, lb, grid, 4);
        const auto c = rng() % 8;
        auto improved = part;
        improved[c] = best[c];
        ASSERT_GE(comp_util(2.0, d, grid, improved, lb, 4), u - 1e-12);
    }
}

TEST(NumaProperty, PlanBeatsEveryFixedBit) {
    const auto d = coaccessed(structure("t", 0x40000, 4, {4096, 4, 1}), {1024, 2, 1}, {2, 1, 1});
    const auto grid = grid_of({8, 2, 1});
    PlacementOptions off;
    off.balance_guard = false;
    const auto plan = place_and_partition(std::vector{d}, grid, 4, off);
    for (unsigned lb = 7; lb <= 16; ++lb)
        EXPECT_GE(plan.utility + 1e-12, comp_util(1.0, d, grid, numa_part(d, lb, grid, 4), lb, 4));
}

TEST(NumaProperty, MatchesBruteForceSmall) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const std::uint64_t cx = 1 + rng() % 4, cy = 1 + rng() % 2;
        const CtaGrid grid = grid_of({cx * 2, cy, 1});
        auto a = coaccessed(structure("a", 0x100000, 4, {cx * 512, cy, 1}), {512, 1, 1}, {2, 1, 1});
        auto b = coaccessed(structure("b", 0x300000, 4, {cx * 2 * 64, cy * 4, 1}), {64, 4, 1}, {1, 1, 1}, {1, 2, 3}, 1);
        const auto plan = place_and_partition(std::vector{a, b}, grid, 4);
        const auto want = oracle::brute_force({a, b}, grid, 4);
        EXPECT_NEAR(plan.utility, want.utility, 1e-9);
    }
}

TEST(NumaProperty, DistributionNormalization) {
    EXPECT_EQ(normalize_distribution(std::vector<std::uint64_t>{0, 0}), (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(normalize_distribution(std::vector<std::uint64_t>{1, 3}), (std::vector<double>{0.25, 0.75}));
}

TEST(Numa, ZoneCountMustBePow2) {
    EXPECT_THROW(validate_zone_count(3), Error);
    EXPECT_THROW(place_and_partition(std::vector{four_tiles()}, grid_of({4, 1, 1}), 3), Error);
}
