#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldesc;
using namespace ldesc::test;

namespace {

// 8 D-tiles of 4 KiB along X.
LocalityDescriptor strided() {
    return coaccessed(structure("s", 0x100000, 4, {8192, 1, 1}), {1024, 1, 1}, {1, 1, 1});
}

}  // namespace

TEST(Prefetch, DistanceFormula) {
    const auto d = strided();
    auto st = make_stream_state(d);
    ASSERT_EQ(st.dtile_width, 4096u);
    st.active_dtiles = {0, 1};
    const Addr trigger = 0x100000 + 256;
    const auto reqs = on_miss(trigger, d, 32768, 128, st);
    ASSERT_EQ(reqs.size(), 1u);
    EXPECT_EQ(prefetch_distance_factor(32768, 2, 4096), 4u);
    EXPECT_EQ(reqs[0], (PrefetchRequest{trigger + 512, trigger, PrefetchKind::STRIDE}));
}

TEST(Prefetch, Nearby) {
    auto d = with_type(strided(), LocalityType::INTER_THREAD, SharingType::NEARBY);
    StreamState st = make_stream_state(d);
    const auto reqs = on_miss(0x100000, d, 32768, 128, st);
    ASSERT_EQ(reqs.size(), 1u);
    EXPECT_EQ(reqs[0].addr, 0x100000u + 128);
    EXPECT_EQ(reqs[0].kind, PrefetchKind::NEXTLINE);
}

TEST(Prefetch, DroppedPastEnd) {
    const auto d = strided();
    auto st = make_stream_state(d);
    EXPECT_TRUE(on_miss(d.data.end() - 128, d, 32768, 128, st).empty());
    auto nearby = with_type(d, LocalityType::INTER_THREAD, SharingType::NEARBY);
    EXPECT_TRUE(on_miss(d.data.end() - 64, nearby, 32768, 128, st).empty());
}

TEST(Prefetch, IrregularAndNonSharedIssueNothing) {
    auto d = strided();
    d.pattern = AccessPattern::irregular();
    auto st = make_stream_state(d);
    EXPECT_TRUE(on_miss(0x100000, d, 32768, 128, st).empty());
    EXPECT_TRUE(on_miss(0x100000, with_type(strided(), LocalityType::INTRA_THREAD), 32768, 128, st).empty());
}

TEST(Prefetch, ZeroFactorFallsBackToNextLine) {
    const auto d = strided();
    auto st = make_stream_state(d);
    st.active_dtiles = {0, 1, 2, 3, 4, 5, 6, 7};
    const auto reqs = on_miss(0x100000, d, 16384, 128, st);  // 16384 / (8 * 4096) == 0
    ASSERT_EQ(reqs.size(), 1u);
    EXPECT_EQ(reqs[0].addr, 0x100000u + 128);
    EXPECT_EQ(reqs[0].kind, PrefetchKind::NEXTLINE);
}

TEST(Prefetch, RetireDoublesDistance) {
    const auto d = strided();
    auto st = make_stream_state(d);
    st.active_dtiles = {0, 1};
    const Addr a = 0x100000;
    EXPECT_EQ(on_miss(a, d, 32768, 128, st)[0].addr - a, 512u);
    retire_stream(1, st);
    EXPECT_EQ(on_miss(a, d, 32768, 128, st)[0].addr - a, 1024u);
    retire_stream(0, st);
    EXPECT_TRUE(st.active_dtiles.empty());
    // The miss re-registers its own D-tile.
    EXPECT_EQ(on_miss(a + 4096, d, 32768, 128, st)[0].addr - (a + 4096), 1024u);
    EXPECT_EQ(st.active_dtiles, (std::set<std::uint64_t>{1}));
    try {
        retire_stream(5, st);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UNKNOWN_STREAM);
    }
}

TEST(PrefetchProperty, DistanceNonIncreasingInActiveTiles) {
    for (std::uint64_t l1 : {8192u, 32768u, 65536u})
        for (std::uint64_t width : {128u, 1024u, 4096u}) {
            std::uint64_t prev = prefetch_distance_factor(l1, 1, width);
            for (std::uint64_t n = 2; n <= 64; ++n) {
                const auto f = prefetch_distance_factor(l1, n, width);
                ASSERT_LE(f, prev);
                prev = f;
            }
            EXPECT_EQ(prefetch_distance_factor(l1, 2, width), prefetch_distance_factor(l1, 1, width) / 2);
        }
}

TEST(PrefetchProperty, TargetsStayInside) {
    const auto d = strided();
    const auto nearby = with_type(d, LocalityType::INTER_THREAD, SharingType::NEARBY);
    for (const LocalityDescriptor* desc : {&d, &nearby}) {
        auto st = make_stream_state(*desc);
        for (Addr a = desc->data.base; a < desc->data.end(); a += 64)
            for (const auto& r : on_miss(a, *desc, 32768, 128, st)) ASSERT_TRUE(desc->data.contains(r.addr));
    }
}

// Sequential REGULAR stream through one D-tile: replay with instant fills.
TEST(PrefetchProperty, SequentialAccuracy) {
    const auto d = coaccessed(structure("s", 0x100000, 4, {16384, 1, 1}), {16384, 1, 1}, {1, 1, 1});
    auto st = make_stream_state(d);
    Cache l1(CacheConfig{32768, 128, 4, 32, 1'000'000});
    Cycle now = 0;
    for (Addr a = d.data.base; a < d.data.end(); a += 128, ++now) {
        if (l1.access(a, InsertionClass::SOFT_PIN, now) != AccessOutcome::MISS) continue;
        l1.fill(a, now);
        for (const auto& r : on_miss(a, d, 32768, 128, st))
            if (l1.prefetch(r.addr, InsertionClass::SOFT_PIN, now)) l1.fill(r.addr, now);
    }
    ASSERT_GT(l1.stats().prefetches_issued, 0u);
    const double acc =
        static_cast<double>(l1.stats().prefetches_useful) / static_cast<double>(l1.stats().prefetches_issued);
    EXPECT_GE(acc, 0.9);
}
