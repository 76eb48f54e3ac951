#include "mapsight/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "mapsight/csv.hpp"

namespace mapsight::metrics {

namespace {

void check_same(const RgbImage& a, const RgbImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw std::invalid_argument("metrics: dimension mismatch");
}

void check_mask(const RgbImage& a, const PatchMask& mask) {
    if (a.width() != mask.image_side() || a.height() != mask.image_side()) {
        throw std::invalid_argument("metrics: mask does not match image geometry");
    }
}

double squared_error(Rgb p, Rgb q) {
    const double dr = static_cast<double>(p.r) - q.r;
    const double dg = static_cast<double>(p.g) - q.g;
    const double db = static_cast<double>(p.b) - q.b;
    return dr * dr + dg * dg + db * db;
}

double miou_impl(const SemanticGrid& pred, const SemanticGrid& truth, const BoolGrid* region) {
    if (pred.width() != truth.width() || pred.height() != truth.height()) {
        throw std::invalid_argument("miou: dimension mismatch");
    }
    if (!(pred.colormap() == truth.colormap())) throw std::invalid_argument("miou: colormap mismatch");
    const std::size_t classes = truth.colormap().size();
    std::vector<std::size_t> inter(classes, 0), pred_n(classes, 0), truth_n(classes, 0);
    auto pl = pred.labels();
    auto tl = truth.labels();
    std::size_t included = 0;
    for (std::size_t i = 0; i < tl.size(); ++i) {
        if (region && region->cells[i] == 0) continue;
        ++included;
        ++pred_n[pl[i]];
        ++truth_n[tl[i]];
        if (pl[i] == tl[i]) ++inter[tl[i]];
    }
    if (included == 0) throw std::invalid_argument("miou: empty region");
    double sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t uni = pred_n[c] + truth_n[c] - inter[c];
        if (uni == 0) continue;
        sum += static_cast<double>(inter[c]) / static_cast<double>(uni);
        ++present;
    }
    return sum / present;
}

}  // namespace

const char* to_string(Region region) { return region == Region::full_image ? "full_image" : "masked_only"; }

double mse(const RgbImage& a, const RgbImage& b) {
    check_same(a, b);
    double total = 0.0;
    auto pa = a.pixels();
    auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) total += squared_error(pa[i], pb[i]);
    return total / (3.0 * static_cast<double>(pa.size()));
}

double mse(const RgbImage& a, const RgbImage& b, const PatchMask& mask) {
    check_same(a, b);
    check_mask(a, mask);
    double total = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            if (mask.pixel_visible(x, y)) continue;
            total += squared_error(a.at(x, y), b.at(x, y));
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("mse: mask hides no pixels");
    return total / (3.0 * static_cast<double>(n));
}

double psnr_from_mse(double mse, double cap) {
    if (mse <= 0.0) return cap;
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const RgbImage& a, const RgbImage& b, double cap) { return psnr_from_mse(mse(a, b), cap); }

double psnr(const RgbImage& a, const RgbImage& b, const PatchMask& mask, double cap) {
    return psnr_from_mse(mse(a, b, mask), cap);
}

double ssim(const RgbImage& a, const RgbImage& b, const kernels::SsimParams& params) {
    const auto map = kernels::parallel::ssim_map(a, b, params);
    double sum = 0.0;
    for (double v : map) sum += v;
    return sum / static_cast<double>(map.size());
}

double ssim(const RgbImage& a, const RgbImage& b, const PatchMask& mask, const kernels::SsimParams& params) {
    check_mask(a, mask);
    const auto map = kernels::parallel::ssim_map(a, b, params);
    const int win = params.window;
    const int w = a.width();
    const int ow = w - win + 1;
    const int oh = a.height() - win + 1;

    // Summed-area table of hidden pixels decides which windows are fully hidden.
    std::vector<int> sat(static_cast<std::size_t>(w + 1) * (a.height() + 1), 0);
    auto at = [&](int x, int y) -> int& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            at(x + 1, y + 1) = (mask.pixel_visible(x, y) ? 0 : 1) + at(x, y + 1) + at(x + 1, y) - at(x, y);
        }
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int hidden = at(ox + win, oy + win) - at(ox, oy + win) - at(ox + win, oy) + at(ox, oy);
            if (hidden != win * win) continue;
            sum += map[static_cast<std::size_t>(oy) * ow + ox];
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("ssim: no window fits inside the hidden region");
    return sum / static_cast<double>(n);
}

double miou(const SemanticGrid& pred, const SemanticGrid& truth) { return miou_impl(pred, truth, nullptr); }

double miou(const SemanticGrid& pred, const SemanticGrid& truth, const PatchMask& mask) {
    if (truth.width() != mask.image_side() || truth.height() != mask.image_side()) {
        throw std::invalid_argument("miou: mask does not match grid geometry");
    }
    const BoolGrid hidden = mask.masked_pixels();
    return miou_impl(pred, truth, &hidden);
}

double label_accuracy(const SemanticGrid& pred, const SemanticGrid& truth) {
    if (pred.width() != truth.width() || pred.height() != truth.height()) {
        throw std::invalid_argument("label_accuracy: dimension mismatch");
    }
    auto pl = pred.labels();
    auto tl = truth.labels();
    std::size_t same = 0;
    for (std::size_t i = 0; i < pl.size(); ++i) same += pl[i] == tl[i] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(pl.size());
}

MetricReport evaluate(const RgbImage& pred, const RgbImage& truth, Region region, const PatchMask& mask,
                      const SemanticGrid* pred_labels, const SemanticGrid* truth_labels) {
    MetricReport r;
    r.region = region;
    if (region == Region::full_image) {
        r.mse = mse(pred, truth);
        r.ssim = ssim(pred, truth);
    } else {
        r.mse = mse(pred, truth, mask);
        r.ssim = ssim(pred, truth, mask);
    }
    r.psnr = psnr_from_mse(r.mse);
    if (pred_labels && truth_labels) {
        r.miou = region == Region::full_image ? miou(*pred_labels, *truth_labels)
                                              : miou(*pred_labels, *truth_labels, mask);
    }
    return r;
}

void write_csv_header(std::ostream& out) { out << "dataset,modality,expansion,region,ssim,psnr,mse,miou\n"; }

void write_csv_row(std::ostream& out, const MetricRow& row) {
    out << row.dataset << ',' << row.modality << ',' << fixed(row.expansion, 4) << ',' << to_string(row.report.region)
        << ',' << fixed(row.report.ssim) << ',' << fixed(row.report.psnr) << ',' << fixed(row.report.mse) << ','
        << (row.report.miou ? fixed(*row.report.miou) : std::string{}) << '\n';
}

}  // namespace mapsight::metrics
