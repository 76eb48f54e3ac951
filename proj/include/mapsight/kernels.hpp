#pragma once

// Data-parallel inner loops. Every kernel has a straightforward serial
// reference and an OpenMP version; tests pin them against each other and
// bench/ compares their throughput. Library code calls the parallel versions.

#include <cstdint>
#include <span>
#include <vector>

#include "mapsight/gridmap.hpp"

namespace mapsight::kernels {

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
[[nodiscard]] std::vector<double> gaussian_taps(int window, double sigma);

namespace serial {

void match_labels(std::span<const Rgb> pixels, std::span<const Rgb> palette, std::span<Label> out);

/// Channel-averaged local SSIM for every fully contained window, row-major,
/// (W - window + 1) x (H - window + 1). Direct 2D weighted sums.
[[nodiscard]] std::vector<double> ssim_map(const RgbImage& a, const RgbImage& b, const SsimParams& params);

/// For each pixel, the linear index of the nearest pixel lying in a visible
/// patch (Euclidean; ties to smaller row then column). Brute force over every
/// visible pixel. Returns -1 everywhere when nothing is visible.
[[nodiscard]] std::vector<std::int32_t> nearest_visible_source(const PatchMask& mask);

/// Assigns each point to its nearest center (ties to lowest index); returns
/// the sum of squared distances.
double assign_to_centers(std::span<const Point2> points, std::span<const Point2> centers, std::span<int> labels);

/// Per-pixel population variance across samples, summed over channels.
void channel_variance(std::span<const RgbImage> samples, std::span<double> out);

}  // namespace serial

namespace parallel {

void match_labels(std::span<const Rgb> pixels, std::span<const Rgb> palette, std::span<Label> out);

/// Same contract as serial::ssim_map, computed with separable filtering.
[[nodiscard]] std::vector<double> ssim_map(const RgbImage& a, const RgbImage& b, const SsimParams& params);

/// Same contract as serial::nearest_visible_source, with patch-level pruning.
[[nodiscard]] std::vector<std::int32_t> nearest_visible_source(const PatchMask& mask);

double assign_to_centers(std::span<const Point2> points, std::span<const Point2> centers, std::span<int> labels);

void channel_variance(std::span<const RgbImage> samples, std::span<double> out);

}  // namespace parallel

}  // namespace mapsight::kernels
