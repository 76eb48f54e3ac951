#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mapsight/gridmap.hpp"
#include "mapsight/kernels.hpp"

namespace mapsight::metrics {

enum class Region { full_image, masked_only };

[[nodiscard]] const char* to_string(Region region);

inline constexpr double kDefaultPsnrCap = 100.0;

// Whole-image variants and masked-only variants; the latter restrict every
// metric to pixels of patches that `mask` hides. All throw
// std::invalid_argument on dimension mismatch.

[[nodiscard]] double mse(const RgbImage& a, const RgbImage& b);
[[nodiscard]] double mse(const RgbImage& a, const RgbImage& b, const PatchMask& mask);

/// 10*log10(255^2 / mse); returns `cap` for identical inputs.
[[nodiscard]] double psnr_from_mse(double mse, double cap = kDefaultPsnrCap);
[[nodiscard]] double psnr(const RgbImage& a, const RgbImage& b, double cap = kDefaultPsnrCap);
[[nodiscard]] double psnr(const RgbImage& a, const RgbImage& b, const PatchMask& mask, double cap = kDefaultPsnrCap);

/// Mean local SSIM averaged over channels. The masked-only form averages only
/// windows lying entirely inside hidden patches, so visible pixels never enter.
[[nodiscard]] double ssim(const RgbImage& a, const RgbImage& b, const kernels::SsimParams& params = {});
[[nodiscard]] double ssim(const RgbImage& a, const RgbImage& b, const PatchMask& mask,
                          const kernels::SsimParams& params = {});

/// Unweighted mean IoU over classes present in either grid.
[[nodiscard]] double miou(const SemanticGrid& pred, const SemanticGrid& truth);
[[nodiscard]] double miou(const SemanticGrid& pred, const SemanticGrid& truth, const PatchMask& mask);

[[nodiscard]] double label_accuracy(const SemanticGrid& pred, const SemanticGrid& truth);

struct MetricReport {
    Region region = Region::full_image;
    double ssim = 0.0;
    double psnr = 0.0;
    double mse = 0.0;
    std::optional<double> miou;
};

/// Computes every metric for one region. Label grids are optional; miou is
/// filled only when both are given.
[[nodiscard]] MetricReport evaluate(const RgbImage& pred, const RgbImage& truth, Region region, const PatchMask& mask,
                                    const SemanticGrid* pred_labels = nullptr,
                                    const SemanticGrid* truth_labels = nullptr);

struct MetricRow {
    std::string dataset;
    std::string modality;
    double expansion = 1.0;
    MetricReport report;
};

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const MetricRow& row);

}  // namespace mapsight::metrics
