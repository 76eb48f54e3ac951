#include <gtest/gtest.h>

#include <cmath>

#include "mapsight/kernels.hpp"
#include "support.hpp"

namespace mapsight {
namespace {

using testing::random_image;
using testing::random_mask;

TEST(Kernels, GaussianTapsNormalizedAndSymmetric) {
    const auto taps = kernels::gaussian_taps(11, 1.5);
    ASSERT_EQ(taps.size(), 11u);
    double sum = 0;
    for (double t : taps) sum += t;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (int i = 0; i < 11; ++i) EXPECT_DOUBLE_EQ(taps[i], taps[10 - i]);
    EXPECT_NEAR(taps[6] / taps[5], std::exp(-1.0 / (2 * 1.5 * 1.5)), 1e-12);
}

TEST(Kernels, MatchLabelsSerialEqualsParallel) {
    Rng rng(1);
    const RgbImage img = random_image(rng, 64, 48);
    const Rgb palette[] = {{0, 255, 0}, {255, 0, 0}, {0, 0, 255}, {128, 128, 128}};
    std::vector<Label> a(img.pixel_count()), b(img.pixel_count());
    kernels::serial::match_labels(img.pixels(), palette, a);
    kernels::parallel::match_labels(img.pixels(), palette, b);
    EXPECT_EQ(a, b);
}

// Direct evaluation of one window, written independently of the kernels.
double window_ssim(const RgbImage& a, const RgbImage& b, int x0, int y0) {
    const auto w = kernels::gaussian_taps(11, 1.5);
    const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
    double total = 0;
    for (int c = 0; c < 3; ++c) {
        auto ch = [c](Rgb p) { return double(c == 0 ? p.r : c == 1 ? p.g : p.b); };
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < 11; ++j)
            for (int i = 0; i < 11; ++i) {
                const double wt = w[i] * w[j];
                const double va = ch(a.at(x0 + i, y0 + j)), vb = ch(b.at(x0 + i, y0 + j));
                ma += wt * va;
                mb += wt * vb;
                saa += wt * va * va;
                sbb += wt * vb * vb;
                sab += wt * va * vb;
            }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / 3;
}

TEST(Kernels, SsimMapMatchesDirectWindows) {
    Rng rng(2);
    const RgbImage a = random_image(rng, 20, 16);
    const RgbImage b = random_image(rng, 20, 16);
    const auto s = kernels::serial::ssim_map(a, b, {});
    const auto p = kernels::parallel::ssim_map(a, b, {});
    ASSERT_EQ(s.size(), 10u * 6u);
    ASSERT_EQ(p.size(), s.size());
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 10; ++x) {
            EXPECT_NEAR(s[y * 10 + x], window_ssim(a, b, x, y), 1e-9);
            EXPECT_NEAR(p[y * 10 + x], s[y * 10 + x], 1e-9);
        }
    EXPECT_THROW((void)kernels::serial::ssim_map(RgbImage(5, 5), RgbImage(5, 5), {}), std::invalid_argument);
}

std::vector<std::int32_t> brute_nearest(const PatchMask& m) {
    const int side = m.image_side();
    std::vector<std::int32_t> out(static_cast<std::size_t>(side) * side, -1);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            long best = -1;
            std::int32_t arg = -1;
            for (int sy = 0; sy < side; ++sy)
                for (int sx = 0; sx < side; ++sx) {
                    if (!m.pixel_visible(sx, sy)) continue;
                    const long d = long(sx - x) * (sx - x) + long(sy - y) * (sy - y);
                    if (best < 0 || d < best) {  // scan order gives the row-then-column tie rule
                        best = d;
                        arg = sy * side + sx;
                    }
                }
            out[static_cast<std::size_t>(y) * side + x] = arg;
        }
    return out;
}

TEST(Kernels, NearestVisibleSourceMatchesBruteForce) {
    Rng rng(3);
    for (int t = 0; t < 12; ++t) {
        const PatchMask m = random_mask(rng, 4, 4);
        const auto expect = brute_nearest(m);
        EXPECT_EQ(kernels::serial::nearest_visible_source(m), expect);
        EXPECT_EQ(kernels::parallel::nearest_visible_source(m), expect);
    }
}

TEST(Kernels, NearestVisibleSourceLargeGridSerialEqualsParallel) {
    Rng rng(4);
    for (int t = 0; t < 3; ++t) {
        const PatchMask m = random_mask(rng, 7, 8);
        EXPECT_EQ(kernels::parallel::nearest_visible_source(m), kernels::serial::nearest_visible_source(m));
    }
    const PatchMask none(4, 4, false);
    for (auto v : kernels::parallel::nearest_visible_source(none)) EXPECT_EQ(v, -1);
}

TEST(Kernels, AssignToCentersSerialEqualsParallel) {
    Rng rng(5);
    std::vector<Point2> pts(500), centers(4);
    for (auto& p : pts) p = {rng.uniform() * 100, rng.uniform() * 100};
    for (auto& c : centers) c = {rng.uniform() * 100, rng.uniform() * 100};
    std::vector<int> a(pts.size()), b(pts.size());
    const double sa = kernels::serial::assign_to_centers(pts, centers, a);
    const double sb = kernels::parallel::assign_to_centers(pts, centers, b);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(sa, sb, 1e-6);
}

TEST(Kernels, ChannelVarianceBernoulliAndOrderInvariant) {
    std::vector<RgbImage> samples;
    for (int i = 0; i < 4; ++i) samples.emplace_back(1, 1, i % 2 ? Rgb{0, 255, 0} : Rgb{255, 0, 0});
    std::vector<double> v(1), w(1);
    kernels::serial::channel_variance(samples, v);
    EXPECT_DOUBLE_EQ(v[0], 2 * 127.5 * 127.5);
    std::reverse(samples.begin(), samples.end());
    kernels::parallel::channel_variance(samples, w);
    EXPECT_DOUBLE_EQ(v[0], w[0]);
}

}  // namespace
}  // namespace mapsight
