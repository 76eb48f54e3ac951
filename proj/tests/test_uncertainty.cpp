#include <gtest/gtest.h>

#include <numeric>

#include "mapsight/exploration.hpp"
#include "mapsight/uncertainty.hpp"
#include "support.hpp"

namespace mapsight {
namespace {

/// Every masked pixel independently becomes free-green or occupied-red with
/// probability one half, driven by the request seed.
class CoinPredictor final : public Predictor {
public:
    [[nodiscard]] std::string kind() const override { return "coin"; }
    [[nodiscard]] RgbImage reconstruct(const PredictRequest& req) const override {
        RgbImage out = req.image;
        Rng rng(req.seed);
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                const bool heads = rng.bernoulli(0.5);
                if (!req.mask.pixel_visible(x, y)) out.at(x, y) = heads ? Rgb{0, 255, 0} : Rgb{255, 0, 0};
            }
        }
        return out;
    }
};

RgbImage room_rgb(std::uint64_t seed) {
    Rng rng(seed);
    return grid_to_rgb(testing::random_grid(rng, 64, 64, Colormap::exploration()));
}

TEST(Bootstrap, OracleHasZeroVarianceEverywhere) {
    const RgbImage truth = room_rgb(1);
    const OraclePredictor oracle(truth);
    const PatchMask mask = periphery_mask(4, 1);
    const auto res = bootstrap_uncertainty(oracle, blank_masked(truth, mask, kUnobservedColor), mask, {}, 5);
    for (double v : res.field.variance) ASSERT_EQ(v, 0.0);
    EXPECT_EQ(res.mean_prediction, truth);
    EXPECT_TRUE(uncertain_cells(res.field, 0.0).empty());
}

TEST(Bootstrap, CoinFlipVarianceMatchesClosedForm) {
    // Two channels swing between 0 and 255: 2 * 127.5^2 per pixel.
    const RgbImage img(64, 64, kUnobservedColor);
    const PatchMask mask = periphery_mask(4, 1);
    const auto res = bootstrap_uncertainty(CoinPredictor{}, img, mask, {64, 2.0, 25.0}, 9);
    double sum = 0;
    int masked = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (mask.pixel_visible(x, y)) {
                ASSERT_EQ(res.field.at(x, y), 0.0);
            } else {
                sum += res.field.at(x, y);
                ++masked;
            }
        }
    }
    EXPECT_NEAR(sum / masked, 32512.5, 0.05 * 32512.5);
}

TEST(Bootstrap, ObservedPixelsAreNeverUncertain) {
    const RgbImage img(64, 64, kUnobservedColor);
    PatchMask mask(4, 16, false);
    mask.set_visible(0, 0, true);
    Rng rng(3);
    BoolGrid observed(64, 64);
    for (auto& c : observed.cells) c = rng.bernoulli(0.3) ? 1 : 0;
    const auto res = bootstrap_uncertainty(CoinPredictor{}, img, mask, {8, 2.0, 25.0}, 1, &observed);
    for (const Cell c : uncertain_cells(res.field, 0.0)) ASSERT_FALSE(observed.at(c.x, c.y));
    EXPECT_GT(uncertain_cells(res.field, 0.0).size(), 0u);
}

TEST(Bootstrap, ThresholdIsMonotone) {
    const RgbImage img(64, 64, kUnobservedColor);
    const PatchMask mask = periphery_mask(4, 1);
    const auto res = bootstrap_uncertainty(CoinPredictor{}, img, mask, {8, 2.0, 25.0}, 2);
    std::size_t prev = uncertain_cells(res.field, 0.0).size();
    for (double tau : {1.0, 25.0, 1000.0, 20000.0, 40000.0, 70000.0}) {
        const std::size_t now = uncertain_cells(res.field, tau).size();
        EXPECT_LE(now, prev) << tau;
        prev = now;
    }
    EXPECT_EQ(prev, 0u);
    EXPECT_THROW((void)uncertain_cells(res.field, -1.0), std::invalid_argument);
}

TEST(Bootstrap, DeterministicAndRejectsSingleSample) {
    const RgbImage img(64, 64, kUnobservedColor);
    const PatchMask mask = periphery_mask(4, 1);
    const auto a = bootstrap_uncertainty(CoinPredictor{}, img, mask, {8, 2.0, 25.0}, 4);
    const auto b = bootstrap_uncertainty(CoinPredictor{}, img, mask, {8, 2.0, 25.0}, 4);
    EXPECT_EQ(a.field.variance, b.field.variance);
    EXPECT_EQ(a.mean_prediction, b.mean_prediction);
    EXPECT_THROW((void)bootstrap_uncertainty(CoinPredictor{}, img, mask, {1, 2.0, 25.0}, 4), std::invalid_argument);
}

TEST(Bootstrap, NearestFillStaysBelowDefaultThresholdOnFlatFill) {
    // Perturbation noise on a uniform visible region cannot exceed a few
    // sigma^2 per channel once clamped, far below the default tau.
    const RgbImage truth(64, 64, Rgb{0, 255, 0});
    const PatchMask mask = periphery_mask(4, 1);
    const auto res = bootstrap_uncertainty(NearestFillPredictor{}, blank_masked(truth, mask, kUnobservedColor), mask,
                                           {}, 11);
    EXPECT_TRUE(uncertain_cells(res.field, 25.0).empty());
}

}  // namespace
}  // namespace mapsight
