#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mapsight/gridmap.hpp"

namespace mapsight {

struct PredictRequest {
    RgbImage image;
    PatchMask mask;
    /// Gaussian noise sigma on the 0-255 scale, applied to what the model sees.
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument unless the image matches the mask geometry
/// and at least one patch is visible.
void validate(const PredictRequest& req);

/// Masked-inpainting endpoint. Implementations must be safe to call from
/// several threads at once.
class Predictor {
public:
    virtual ~Predictor() = default;

    [[nodiscard]] virtual std::string kind() const = 0;

    /// Raw model output for a validated request. May differ from the input on
    /// visible patches; predict() overwrites them.
    [[nodiscard]] virtual RgbImage reconstruct(const PredictRequest& req) const = 0;
};

/// i.i.d. Gaussian noise per channel, clamped to [0,255] and rounded.
/// sigma = 0 returns the input unchanged. With `only`, pixels outside the
/// mask's visible patches are copied unchanged and draw no noise.
[[nodiscard]] RgbImage perturb(const RgbImage& image, double sigma, std::uint64_t seed,
                               const PatchMask* only = nullptr);

/// Validated prediction. Visible patches of the result are the unperturbed
/// input, bit-exact; hidden patches are the endpoint's reconstruction.
[[nodiscard]] RgbImage predict(const Predictor& endpoint, const PredictRequest& req);

/// predict followed by color-to-label matching. Cells flagged in `observed`
/// keep the label of their input color whatever the endpoint returns.
[[nodiscard]] SemanticGrid predict_to_grid(const Predictor& endpoint, const PredictRequest& req,
                                           const Colormap& colormap, const BoolGrid& observed);
/// As above, treating exactly the visible patches as observed.
[[nodiscard]] SemanticGrid predict_to_grid(const Predictor& endpoint, const PredictRequest& req,
                                           const Colormap& colormap);

/// Returns the ground truth everywhere; ignores its input.
class OraclePredictor final : public Predictor {
public:
    explicit OraclePredictor(RgbImage truth) : truth_(std::move(truth)) {}
    [[nodiscard]] std::string kind() const override { return "oracle"; }
    [[nodiscard]] RgbImage reconstruct(const PredictRequest& req) const override;

private:
    RgbImage truth_;
};

/// Ground truth with seeded label flips on hidden pixels: each hidden pixel
/// independently moves to label (l + 1) mod n with probability `flip_rate`.
class NoisyOraclePredictor final : public Predictor {
public:
    NoisyOraclePredictor(SemanticGrid truth, double flip_rate);
    [[nodiscard]] std::string kind() const override { return "noisy_oracle"; }
    [[nodiscard]] RgbImage reconstruct(const PredictRequest& req) const override;
    [[nodiscard]] double flip_rate() const { return flip_rate_; }

private:
    SemanticGrid truth_;
    double flip_rate_;
};

/// Copies each hidden pixel from the nearest visible pixel of the (perturbed)
/// input. Euclidean distance, ties to smaller row then column.
class NearestFillPredictor final : public Predictor {
public:
    [[nodiscard]] std::string kind() const override { return "nearest_fill"; }
    [[nodiscard]] RgbImage reconstruct(const PredictRequest& req) const override;

private:
    [[nodiscard]] std::shared_ptr<const std::vector<std::int32_t>> sources(const PatchMask& mask) const;

    // Bootstrap sampling reuses one mask many times in a row.
    mutable std::mutex cache_mutex_;
    mutable PatchMask cached_mask_;
    mutable std::shared_ptr<const std::vector<std::int32_t>> cached_sources_;
};

}  // namespace mapsight
