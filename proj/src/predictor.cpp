#include "mapsight/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mapsight/errors.hpp"
#include "mapsight/kernels.hpp"
#include "mapsight/rng.hpp"

namespace mapsight {

void validate(const PredictRequest& req) {
    if (req.image.width() != req.mask.image_side() || req.image.height() != req.mask.image_side()) {
        throw std::invalid_argument("predict: image side must equal patches_per_side * patch_size");
    }
    if (req.mask.visible_count() == 0) throw std::invalid_argument("predict: mask has no visible patch");
    if (!(req.noise_sigma >= 0.0)) throw std::invalid_argument("predict: noise_sigma must be >= 0");
}

RgbImage perturb(const RgbImage& image, double sigma, std::uint64_t seed, const PatchMask* only) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("perturb: sigma must be >= 0");
    if (sigma == 0.0) return image;
    Rng rng(derive_seed(seed, "perturb"));
    RgbImage out = image;
    auto noisy = [&](std::uint8_t v) {
        const double x = std::clamp(v + sigma * rng.normal(), 0.0, 255.0);
        return static_cast<std::uint8_t>(std::floor(x + 0.5));
    };
    if (only && (only->image_side() != image.width() || only->image_side() != image.height())) {
        throw std::invalid_argument("perturb: mask does not match image");
    }
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            if (only && !only->pixel_visible(x, y)) continue;
            Rgb& p = out.at(x, y);
            p.r = noisy(p.r);
            p.g = noisy(p.g);
            p.b = noisy(p.b);
        }
    }
    return out;
}

RgbImage predict(const Predictor& endpoint, const PredictRequest& req) {
    validate(req);
    RgbImage out = endpoint.reconstruct(req);
    if (out.width() != req.image.width() || out.height() != req.image.height()) {
        throw PredictorError(PredictorError::Kind::malformed_response,
                             endpoint.kind() + ": reconstruction has wrong dimensions");
    }
    paste_visible(out, req.image, req.mask);
    return out;
}

SemanticGrid predict_to_grid(const Predictor& endpoint, const PredictRequest& req, const Colormap& colormap,
                             const BoolGrid& observed) {
    if (observed.width != req.image.width() || observed.height != req.image.height()) {
        throw std::invalid_argument("predict_to_grid: observed grid does not match image");
    }
    const RgbImage out = predict(endpoint, req);
    SemanticGrid grid = rgb_to_grid(out, colormap);
    for (int y = 0; y < grid.height(); ++y) {
        for (int x = 0; x < grid.width(); ++x) {
            if (observed.at(x, y)) grid.set(x, y, nearest_label(req.image.at(x, y), colormap));
        }
    }
    return grid;
}

SemanticGrid predict_to_grid(const Predictor& endpoint, const PredictRequest& req, const Colormap& colormap) {
    BoolGrid observed(req.image.width(), req.image.height());
    if (req.mask.image_side() == req.image.width()) {
        for (int y = 0; y < observed.height; ++y) {
            for (int x = 0; x < observed.width; ++x) observed.set(x, y, req.mask.pixel_visible(x, y));
        }
    }
    return predict_to_grid(endpoint, req, colormap, observed);
}

RgbImage OraclePredictor::reconstruct(const PredictRequest& req) const {
    if (truth_.width() != req.image.width() || truth_.height() != req.image.height()) {
        throw std::invalid_argument("oracle: request does not match the ground truth size");
    }
    return truth_;
}

NoisyOraclePredictor::NoisyOraclePredictor(SemanticGrid truth, double flip_rate)
    : truth_(std::move(truth)), flip_rate_(flip_rate) {
    if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw std::invalid_argument("noisy_oracle: flip rate must be in [0,1]");
}

RgbImage NoisyOraclePredictor::reconstruct(const PredictRequest& req) const {
    if (truth_.width() != req.image.width() || truth_.height() != req.image.height()) {
        throw std::invalid_argument("noisy_oracle: request does not match the ground truth size");
    }
    const Colormap& cmap = truth_.colormap();
    const auto n = static_cast<int>(cmap.size());
    RgbImage out = grid_to_rgb(truth_);
    Rng rng(derive_seed(req.seed, "label-flip"));
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            if (req.mask.pixel_visible(x, y)) continue;
            if (rng.bernoulli(flip_rate_)) {
                out.at(x, y) = cmap.color(static_cast<Label>((truth_.at(x, y) + 1) % n));
            }
        }
    }
    return out;
}

std::shared_ptr<const std::vector<std::int32_t>> NearestFillPredictor::sources(const PatchMask& mask) const {
    {
        std::lock_guard lock(cache_mutex_);
        if (cached_sources_ && cached_mask_ == mask) return cached_sources_;
    }
    auto computed = std::make_shared<const std::vector<std::int32_t>>(kernels::parallel::nearest_visible_source(mask));
    std::lock_guard lock(cache_mutex_);
    cached_mask_ = mask;
    cached_sources_ = computed;
    return computed;
}

RgbImage NearestFillPredictor::reconstruct(const PredictRequest& req) const {
    // Hidden input pixels are never read, so only visible ones are perturbed.
    const RgbImage seen = perturb(req.image, req.noise_sigma, req.seed, &req.mask);
    const auto src = sources(req.mask);
    RgbImage out = seen;
    auto in_px = seen.pixels();
    auto out_px = out.pixels();
    for (std::size_t i = 0; i < out_px.size(); ++i) out_px[i] = in_px[static_cast<std::size_t>((*src)[i])];
    return out;
}

}  // namespace mapsight
