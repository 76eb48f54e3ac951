#include "mapsight/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "mapsight/image_io.hpp"
#include "mapsight/kernels.hpp"

namespace mapsight {

BootstrapResult bootstrap_uncertainty(const Predictor& endpoint, const RgbImage& image, const PatchMask& mask,
                                      const BootstrapOptions& options, std::uint64_t seed, const BoolGrid* observed) {
    if (options.n_samples < 2) throw std::invalid_argument("bootstrap_uncertainty: need at least 2 samples");
    if (observed && (observed->width != image.width() || observed->height != image.height())) {
        throw std::invalid_argument("bootstrap_uncertainty: observed grid does not match image");
    }
    const int n = options.n_samples;
    std::vector<RgbImage> samples(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

    // Samples are independent; aggregation below reads them in index order.
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            PredictRequest req{image, mask, options.sigma, seed + static_cast<std::uint64_t>(i)};
            samples[static_cast<std::size_t>(i)] = predict(endpoint, req);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    BootstrapResult out;
    out.field.width = image.width();
    out.field.height = image.height();
    out.field.n_samples = n;
    out.field.sigma = options.sigma;
    out.field.tau = options.tau;
    out.field.variance.assign(image.pixel_count(), 0.0);
    kernels::parallel::channel_variance(samples, out.field.variance);

    out.mean_prediction = RgbImage(image.width(), image.height());
    auto mean_px = out.mean_prediction.pixels();
    for (std::size_t i = 0; i < mean_px.size(); ++i) {
        long s[3] = {0, 0, 0};
        for (const auto& img : samples) {
            const Rgb p = img.pixels()[i];
            s[0] += p.r;
            s[1] += p.g;
            s[2] += p.b;
        }
        auto avg = [n](long v) { return static_cast<std::uint8_t>(std::floor(static_cast<double>(v) / n + 0.5)); };
        mean_px[i] = {avg(s[0]), avg(s[1]), avg(s[2])};
    }

    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (mask.pixel_visible(x, y) || (observed && observed->at(x, y))) {
                out.field.variance[static_cast<std::size_t>(y) * image.width() + x] = 0.0;
            }
        }
    }
    return out;
}

std::vector<Cell> uncertain_cells(const UncertaintyField& field, double tau) {
    if (!(tau >= 0.0)) throw std::invalid_argument("uncertain_cells: tau must be >= 0");
    std::vector<Cell> cells;
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            if (field.at(x, y) > tau) cells.push_back({x, y});
        }
    }
    return cells;
}

void write_uncertainty_png(const std::filesystem::path& path, const UncertaintyField& field) {
    io::Gray16 img{field.width, field.height, {}};
    img.values.reserve(field.variance.size());
    for (double v : field.variance) {
        img.values.push_back(static_cast<std::uint16_t>(std::clamp(std::floor(v + 0.5), 0.0, 65535.0)));
    }
    io::write_gray16_png(path, img);
}

}  // namespace mapsight
