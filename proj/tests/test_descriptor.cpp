#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldesc;
using namespace ldesc::test;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ldesc::Error thrown";
    return ErrorCode::INVALID_CONFIG;
}

}  // namespace

TEST(Descriptor, HistoColumnTilesAccepted) {
    const CtaGrid grid = grid_of({16, 8, 1});
    auto d = coaccessed(structure("img", 0x10000, 4, {16 * 64, 32, 1}), {64, 32, 1}, {1, 8, 1}, {1, 0, 0});
    const auto out = validate_descriptor_set(std::vector{d}, grid);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(dtile_count(out[0]), (Dim3{16, 1, 1}));
    EXPECT_EQ(ctile_count(out[0], grid), (Dim3{16, 1, 1}));
}

TEST(Descriptor, SortedByPriority) {
    const CtaGrid grid = grid_of({4, 1, 1});
    auto a = coaccessed(structure("a", 0x10000, 4, {128, 1, 1}), {32, 1, 1}, {1, 1, 1}, {1, 2, 3}, 1);
    auto b = coaccessed(structure("b", 0x20000, 4, {128, 1, 1}), {32, 1, 1}, {1, 1, 1}, {1, 2, 3}, 0);
    const auto out = validate_descriptor_set(std::vector{a, b}, grid);
    EXPECT_EQ(out[0].data.name, "b");
    EXPECT_EQ(out[1].data.name, "a");
    const auto again = validate_descriptor_set(out, grid);
    EXPECT_EQ(again[0].data.name, "b");
    EXPECT_EQ(again[1].data.name, "a");
}

TEST(Descriptor, CountMismatchRejected) {
    // 8 D-tiles against 6 C-tiles.
    const CtaGrid grid = grid_of({6, 1, 1});
    auto d = coaccessed(structure("a", 0x10000, 4, {64, 1, 1}), {8, 1, 1}, {1, 1, 1});
    EXPECT_EQ(code_of([&] { validate_descriptor(d, grid); }), ErrorCode::INVALID_TILE_SEMANTICS);
}

TEST(Descriptor, OverlapWithEqualPriorityRejected) {
    const CtaGrid grid = grid_of({1, 1, 1});
    auto a = coaccessed(structure("a", 0x10000, 4, {1024, 1, 1}), {1024, 1, 1}, {1, 1, 1});
    auto b = with_type(a, LocalityType::NO_REUSE);
    b.data.name = "b";
    EXPECT_EQ(code_of([&] { validate_descriptor_set(std::vector{a, b}, grid); }), ErrorCode::OVERLAP_CONFLICT);
    b.priority = 1;
    EXPECT_NO_THROW(validate_descriptor_set(std::vector{a, b}, grid));
}

TEST(Descriptor, DisjointEqualPriorityAccepted) {
    const CtaGrid grid = grid_of({1, 1, 1});
    auto a = coaccessed(structure("a", 0x10000, 4, {1024, 1, 1}), {1024, 1, 1}, {1, 1, 1});
    auto b = coaccessed(structure("b", 0x20000, 4, {1024, 1, 1}), {1024, 1, 1}, {1, 1, 1});
    EXPECT_NO_THROW(validate_descriptor_set(std::vector{a, b}, grid));
}

TEST(Descriptor, MisalignedBase) {
    auto d = coaccessed(structure("a", 0x10080, 4, {32, 1, 1}), {32, 1, 1}, {1, 1, 1});
    EXPECT_EQ(code_of([&] { validate_descriptor(d, grid_of({1, 1, 1})); }), ErrorCode::MISALIGNED_BASE);
}

TEST(Descriptor, SharingOnlyForInterThread) {
    const CtaGrid grid = grid_of({1, 1, 1});
    auto d = coaccessed(structure("a", 0x10000, 4, {32, 1, 1}), {32, 1, 1}, {1, 1, 1});
    auto no_reuse = with_type(d, LocalityType::NO_REUSE, SharingType::NEARBY);
    EXPECT_EQ(code_of([&] { validate_descriptor(no_reuse, grid); }), ErrorCode::INVALID_DESCRIPTOR);
    auto inter = with_type(d, LocalityType::INTER_THREAD);
    EXPECT_EQ(code_of([&] { validate_descriptor(inter, grid); }), ErrorCode::INVALID_DESCRIPTOR);
}

TEST(Descriptor, StrideMustBeElementMultiple) {
    const CtaGrid grid = grid_of({1, 1, 1});
    auto d = coaccessed(structure("a", 0x10000, 8, {32, 1, 1}), {32, 1, 1}, {1, 1, 1}, {1, 2, 3}, 0,
                        AccessPattern::regular(12));
    EXPECT_EQ(code_of([&] { validate_descriptor(d, grid); }), ErrorCode::INVALID_DESCRIPTOR);
    d.pattern = AccessPattern::regular(0);
    EXPECT_EQ(code_of([&] { validate_descriptor(d, grid); }), ErrorCode::INVALID_DESCRIPTOR);
    d.pattern = AccessPattern::regular(16);
    EXPECT_NO_THROW(validate_descriptor(d, grid));
}

TEST(Descriptor, TileBoundsAndMap) {
    const CtaGrid grid = grid_of({4, 1, 1});
    auto d = coaccessed(structure("a", 0x10000, 4, {32, 1, 1}), {64, 1, 1}, {1, 1, 1});
    EXPECT_THROW(validate_descriptor(d, grid), Error);  // dtile larger than data
    d.tiles.dtile = {8, 1, 1};
    d.tiles.ctile = {8, 1, 1};
    EXPECT_THROW(validate_descriptor(d, grid), Error);  // ctile larger than grid
    d.tiles.ctile = {1, 1, 1};
    d.tiles.compute_data_map = {1, 1, 3};
    EXPECT_THROW(validate_descriptor(d, grid), Error);
    d.tiles.compute_data_map = {0, 0, 0};
    EXPECT_THROW(validate_descriptor(d, grid), Error);
    d.tiles.compute_data_map = {3, 1, 2};
    EXPECT_NO_THROW(validate_descriptor(d, grid));
}

TEST(Descriptor, EmptySetRejected) {
    EXPECT_THROW(validate_descriptor_set(std::vector<LocalityDescriptor>{}, grid_of({1, 1, 1})), Error);
}

TEST(Descriptor, CeilingCounts) {
    auto d = coaccessed(structure("a", 0x10000, 1, {20, 1, 1}), {8, 1, 1}, {1, 1, 1});
    EXPECT_EQ(dtile_count(d).x, 3u);
    d.tiles.ctile = {1, 8, 1};
    EXPECT_EQ(ctile_count(d, grid_of({16, 8, 1})), (Dim3{16, 1, 1}));
    d.tiles.dtile = d.data.dims;
    EXPECT_EQ(dtile_count(d), (Dim3{1, 1, 1}));
}

// Count products agree for every accepted descriptor over a small sweep.
TEST(DescriptorProperty, AcceptedImpliesMatchingCounts) {
    const CtaGrid grid = grid_of({4, 3, 2});
    int accepted = 0;
    for (std::uint64_t dx : {1, 2, 3, 4, 6, 12})
        for (std::uint64_t dy : {1, 2, 3, 6})
            for (std::uint64_t cx : {1, 2, 4})
                for (std::uint64_t cy : {1, 3})
                    for (std::uint64_t cz : {1, 2}) {
                        auto d = coaccessed(structure("a", 0x10000, 4, {12, 6, 1}), {dx, dy, 1}, {cx, cy, cz});
                        try {
                            validate_descriptor(d, grid);
                        } catch (const Error&) {
                            continue;
                        }
                        ++accepted;
                        EXPECT_EQ(dtile_count(d).product(), ctile_count(d, grid).product());
                    }
    EXPECT_GT(accepted, 0);
}

TEST(DescriptorProperty, OwningDescriptorPrefersPriority) {
    const CtaGrid grid = grid_of({1, 1, 1});
    auto a = coaccessed(structure("a", 0x10000, 4, {1024, 1, 1}), {1024, 1, 1}, {1, 1, 1}, {1, 2, 3}, 1);
    auto b = with_type(a, LocalityType::NO_REUSE);
    b.priority = 0;
    b.data.name = "b";
    const auto sorted = validate_descriptor_set(std::vector{a, b}, grid);
    EXPECT_EQ(owning_descriptor(sorted, 0x10000 + 100), std::optional<std::size_t>(0));
    EXPECT_EQ(sorted[0].data.name, "b");
    EXPECT_FALSE(owning_descriptor(sorted, 0x10000 + 4096).has_value());
}
