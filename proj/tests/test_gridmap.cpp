#include <gtest/gtest.h>

#include "mapsight/gridmap.hpp"
#include "support.hpp"

namespace mapsight {
namespace {

TEST(Colormap, ExplorationOrderAndColors) {
    const Colormap c = Colormap::exploration();
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c.color(labels::kFree), (Rgb{0, 255, 0}));
    EXPECT_EQ(c.color(labels::kOccupied), (Rgb{255, 0, 0}));
    EXPECT_EQ(c.color(labels::kOutOfBoundary), (Rgb{0, 0, 255}));
}

TEST(Colormap, RejectsGapsAndDuplicateColors) {
    EXPECT_THROW(Colormap({{0, {1, 1, 1}, "a"}, {2, {2, 2, 2}, "b"}}), std::invalid_argument);
    EXPECT_THROW(Colormap({{0, {1, 1, 1}, "a"}, {1, {1, 1, 1}, "b"}}), std::invalid_argument);
}

TEST(GridToRgb, DirectLookup) {
    const SemanticGrid one(1, 1, Colormap::exploration(), labels::kFree);
    EXPECT_EQ(grid_to_rgb(one).at(0, 0), (Rgb{0, 255, 0}));

    const SemanticGrid g(2, 2, Colormap::exploration(), std::vector<Label>{0, 1, 2, 0});
    const RgbImage img = grid_to_rgb(g);
    EXPECT_EQ(img.at(0, 0), (Rgb{0, 255, 0}));
    EXPECT_EQ(img.at(1, 0), (Rgb{255, 0, 0}));
    EXPECT_EQ(img.at(0, 1), (Rgb{0, 0, 255}));
    EXPECT_EQ(img.at(1, 1), (Rgb{0, 255, 0}));
}

TEST(RgbToGrid, NearestColorAndTies) {
    const Colormap c = Colormap::exploration();
    EXPECT_EQ(nearest_label({0, 255, 0}, c), labels::kFree);
    EXPECT_EQ(nearest_label({10, 240, 8}, c), labels::kFree);
    // (128,128,0) is equidistant from free and occupied.
    EXPECT_EQ(nearest_label({128, 128, 0}, c), labels::kFree);
    EXPECT_EQ(nearest_label({0, 128, 128}, c), labels::kFree);
    EXPECT_EQ(nearest_label({128, 0, 128}, c), labels::kOccupied);
}

TEST(RgbToGrid, RoundTripIsIdentity) {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const SemanticGrid g = testing::random_grid(rng, 17, 9, Colormap::exploration());
        EXPECT_EQ(rgb_to_grid(grid_to_rgb(g), g.colormap()), g);
    }
}

TEST(PeripheryMask, VisibleCounts) {
    EXPECT_EQ(periphery_mask(14, 0).visible_count(), 196);
    EXPECT_EQ(periphery_mask(14, 1).visible_count(), 144);
    EXPECT_EQ(periphery_mask(14, 3).visible_count(), 64);
    EXPECT_THROW((void)periphery_mask(14, 7), std::invalid_argument);
    EXPECT_THROW((void)periphery_mask(14, -1), std::invalid_argument);
}

TEST(PeripheryMask, FourFoldSymmetric) {
    for (int k = 0; k < 7; ++k) {
        const PatchMask m = periphery_mask(14, k);
        for (int r = 0; r < 14; ++r) {
            for (int c = 0; c < 14; ++c) {
                EXPECT_EQ(m.visible(r, c), m.visible(c, r));
                EXPECT_EQ(m.visible(r, c), m.visible(13 - r, c));
                EXPECT_EQ(m.visible(r, c), m.visible(r, 13 - c));
            }
        }
    }
}

TEST(ExpansionFactor, PaperValuesAndMonotone) {
    EXPECT_NEAR(expansion_factor(224, 1), 1.1667, 1e-4);
    EXPECT_NEAR(expansion_factor(224, 2), 1.40, 1e-4);
    EXPECT_NEAR(expansion_factor(224, 3), 1.75, 1e-4);
    EXPECT_DOUBLE_EQ(expansion_factor(224, 0), 1.0);
    for (int k = 1; k < 7; ++k) EXPECT_GT(expansion_factor(224, k), expansion_factor(224, k - 1));
    EXPECT_THROW((void)expansion_factor(224, 7), std::invalid_argument);
}

TEST(FootprintMask, AlignedAndOffsetBlocks) {
    BoolGrid all(224, 224, true);
    EXPECT_EQ(footprint_mask(all).visible_count(), 196);

    BoolGrid aligned(224, 224);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) aligned.set(x, y, true);
    EXPECT_EQ(footprint_mask(aligned).visible_count(), 9);

    BoolGrid offset(224, 224);
    for (int y = 8; y < 56; ++y)
        for (int x = 8; x < 56; ++x) offset.set(x, y, true);
    const PatchMask m = footprint_mask(offset);
    EXPECT_EQ(m.visible_count(), 4);
    EXPECT_TRUE(m.visible(1, 1) && m.visible(1, 2) && m.visible(2, 1) && m.visible(2, 2));
}

TEST(FootprintMask, NeverShowsUnobservedPixels) {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        BoolGrid g(64, 64);
        for (auto& c : g.cells) c = rng.bernoulli(0.9) ? 1 : 0;
        const PatchMask m = footprint_mask(g);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (m.pixel_visible(x, y)) EXPECT_TRUE(g.at(x, y));
    }
    EXPECT_THROW((void)footprint_mask(BoolGrid(30, 30)), std::invalid_argument);
}

TEST(PasteVisible, OnlyVisiblePatchesChange) {
    Rng rng(11);
    const RgbImage src = testing::random_image(rng, 32, 32);
    RgbImage dst(32, 32, {1, 2, 3});
    PatchMask m(2, 16, false);
    m.set_visible(0, 1, true);
    paste_visible(dst, src, m);
    EXPECT_EQ(dst.at(20, 3), src.at(20, 3));
    EXPECT_EQ(dst.at(3, 3), (Rgb{1, 2, 3}));
    EXPECT_EQ(blank_masked(src, m, {9, 9, 9}).at(3, 20), (Rgb{9, 9, 9}));
}

}  // namespace
}  // namespace mapsight
