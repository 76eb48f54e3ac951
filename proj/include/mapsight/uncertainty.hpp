#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mapsight/gridmap.hpp"
#include "mapsight/predictor.hpp"

namespace mapsight {

/// Channel-summed per-pixel variance of bootstrapped predictions (0-255^2 scale).
struct UncertaintyField {
    int width = 0;
    int height = 0;
    std::vector<double> variance;
    int n_samples = 0;
    double sigma = 0.0;
    double tau = 0.0;

    [[nodiscard]] double at(int x, int y) const { return variance[static_cast<std::size_t>(y) * width + x]; }
};

struct BootstrapOptions {
    int n_samples = 8;
    double sigma = 2.0;
    double tau = 25.0;
};

struct BootstrapResult {
    RgbImage mean_prediction;
    UncertaintyField field;
};

/// Runs `n_samples` predictions on inputs perturbed with seeds seed+0..n-1 and
/// takes the population variance of the outputs. Pixels of visible patches,
/// and any pixel flagged in `observed`, get variance 0. Fails as a whole if
/// any single prediction fails.
[[nodiscard]] BootstrapResult bootstrap_uncertainty(const Predictor& endpoint, const RgbImage& image,
                                                    const PatchMask& mask, const BootstrapOptions& options,
                                                    std::uint64_t seed, const BoolGrid* observed = nullptr);

/// Pixels with variance strictly above tau, in row-major order.
[[nodiscard]] std::vector<Cell> uncertain_cells(const UncertaintyField& field, double tau);

/// Variance clamped to [0, 65535] for a 16-bit grayscale dump.
void write_uncertainty_png(const std::filesystem::path& path, const UncertaintyField& field);

}  // namespace mapsight
