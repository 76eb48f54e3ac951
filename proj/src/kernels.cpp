#include "mapsight/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mapsight::kernels {

namespace {

inline long color_distance(Rgb a, Rgb b) {
    const long dr = long{a.r} - b.r;
    const long dg = long{a.g} - b.g;
    const long db = long{a.b} - b.b;
    return dr * dr + dg * dg + db * db;
}

inline Label match_one(Rgb p, std::span<const Rgb> palette) {
    std::size_t best = 0;
    long best_d = color_distance(p, palette[0]);
    for (std::size_t i = 1; i < palette.size(); ++i) {
        const long d = color_distance(p, palette[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return static_cast<Label>(best);
}

inline double channel(Rgb p, int c) { return c == 0 ? p.r : (c == 1 ? p.g : p.b); }

void check_ssim_inputs(const RgbImage& a, const RgbImage& b, const SsimParams& params) {
    if (a.width() != b.width() || a.height() != b.height()) throw std::invalid_argument("ssim: dimension mismatch");
    if (params.window <= 0 || a.width() < params.window || a.height() < params.window) {
        throw std::invalid_argument("ssim: image smaller than window");
    }
}

inline double ssim_value(double mu_a, double mu_b, double e_aa, double e_bb, double e_ab, double c1, double c2) {
    const double var_a = e_aa - mu_a * mu_a;
    const double var_b = e_bb - mu_b * mu_b;
    const double cov = e_ab - mu_a * mu_b;
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

struct PixelRect {
    int x0, y0, x1, y1;  // inclusive
};

inline long sq(long v) { return v * v; }

inline long point_rect_d2(int px, int py, const PixelRect& r) {
    const long dx = px < r.x0 ? r.x0 - px : (px > r.x1 ? px - r.x1 : 0);
    const long dy = py < r.y0 ? r.y0 - py : (py > r.y1 ? py - r.y1 : 0);
    return dx * dx + dy * dy;
}

inline long rect_rect_d2(const PixelRect& a, const PixelRect& b) {
    const long dx = std::max({0, b.x0 - a.x1, a.x0 - b.x1});
    const long dy = std::max({0, b.y0 - a.y1, a.y0 - b.y1});
    return dx * dx + dy * dy;
}

void check_variance_inputs(std::span<const RgbImage> samples, std::span<double> out) {
    if (samples.empty()) throw std::invalid_argument("channel_variance: no samples");
    for (const auto& s : samples) {
        if (s.width() != samples[0].width() || s.height() != samples[0].height()) {
            throw std::invalid_argument("channel_variance: sample dimension mismatch");
        }
    }
    if (out.size() != samples[0].pixel_count()) throw std::invalid_argument("channel_variance: output size mismatch");
}

inline double pixel_variance(std::span<const RgbImage> samples, std::size_t i) {
    const auto n = static_cast<std::int64_t>(samples.size());
    std::int64_t s[3] = {0, 0, 0};
    std::int64_t q[3] = {0, 0, 0};
    for (const auto& img : samples) {
        const Rgb p = img.pixels()[i];
        const std::int64_t v[3] = {p.r, p.g, p.b};
        for (int c = 0; c < 3; ++c) {
            s[c] += v[c];
            q[c] += v[c] * v[c];
        }
    }
    std::int64_t num = 0;
    for (int c = 0; c < 3; ++c) num += n * q[c] - s[c] * s[c];
    return static_cast<double>(num) / static_cast<double>(n * n);
}

}  // namespace

std::vector<double> gaussian_taps(int window, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(window));
    const double mid = (window - 1) / 2.0;
    double total = 0.0;
    for (int i = 0; i < window; ++i) {
        const double d = i - mid;
        taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        total += taps[i];
    }
    for (double& t : taps) t /= total;
    return taps;
}

namespace serial {

void match_labels(std::span<const Rgb> pixels, std::span<const Rgb> palette, std::span<Label> out) {
    if (palette.empty() || out.size() != pixels.size()) throw std::invalid_argument("match_labels: bad arguments");
    for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = match_one(pixels[i], palette);
}

std::vector<double> ssim_map(const RgbImage& a, const RgbImage& b, const SsimParams& params) {
    check_ssim_inputs(a, b, params);
    const int win = params.window;
    const auto taps = gaussian_taps(win, params.sigma);
    const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
    const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
    const int ow = a.width() - win + 1;
    const int oh = a.height() - win + 1;
    std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            double acc = 0.0;
            for (int c = 0; c < 3; ++c) {
                double mu_a = 0, mu_b = 0, e_aa = 0, e_bb = 0, e_ab = 0;
                for (int v = 0; v < win; ++v) {
                    for (int u = 0; u < win; ++u) {
                        const double w = taps[v] * taps[u];
                        const double pa = channel(a.at(ox + u, oy + v), c);
                        const double pb = channel(b.at(ox + u, oy + v), c);
                        mu_a += w * pa;
                        mu_b += w * pb;
                        e_aa += w * pa * pa;
                        e_bb += w * pb * pb;
                        e_ab += w * pa * pb;
                    }
                }
                acc += ssim_value(mu_a, mu_b, e_aa, e_bb, e_ab, c1, c2);
            }
            out[static_cast<std::size_t>(oy) * ow + ox] = acc / 3.0;
        }
    }
    return out;
}

std::vector<std::int32_t> nearest_visible_source(const PatchMask& mask) {
    const int side = mask.image_side();
    std::vector<std::int32_t> visible;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            if (mask.pixel_visible(x, y)) visible.push_back(y * side + x);
        }
    }
    std::vector<std::int32_t> out(static_cast<std::size_t>(side) * side, -1);
    if (visible.empty()) return out;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const int idx = y * side + x;
            if (mask.pixel_visible(x, y)) {
                out[idx] = idx;
                continue;
            }
            long best = std::numeric_limits<long>::max();
            std::int32_t best_idx = -1;
            for (std::int32_t v : visible) {
                const long d = sq(v % side - x) + sq(v / side - y);
                if (d < best) {
                    best = d;
                    best_idx = v;
                }
            }
            out[idx] = best_idx;
        }
    }
    return out;
}

double assign_to_centers(std::span<const Point2> points, std::span<const Point2> centers, std::span<int> labels) {
    if (centers.empty() || labels.size() != points.size()) throw std::invalid_argument("assign_to_centers: bad arguments");
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double dx = points[i].x - centers[c].x;
            const double dy = points[i].y - centers[c].y;
            const double d = dx * dx + dy * dy;
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
        objective += best_d;
    }
    return objective;
}

void channel_variance(std::span<const RgbImage> samples, std::span<double> out) {
    check_variance_inputs(samples, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pixel_variance(samples, i);
}

}  // namespace serial

namespace parallel {

void match_labels(std::span<const Rgb> pixels, std::span<const Rgb> palette, std::span<Label> out) {
    if (palette.empty() || out.size() != pixels.size()) throw std::invalid_argument("match_labels: bad arguments");
    const auto n = static_cast<std::ptrdiff_t>(pixels.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = match_one(pixels[i], palette);
}

std::vector<double> ssim_map(const RgbImage& a, const RgbImage& b, const SsimParams& params) {
    check_ssim_inputs(a, b, params);
    const int win = params.window;
    const auto taps = gaussian_taps(win, params.sigma);
    const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
    const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
    const int w = a.width();
    const int h = a.height();
    const int ow = w - win + 1;
    const int oh = h - win + 1;
    std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);

    // Horizontal pass: five moments per (row, output column) for one channel.
    constexpr int kMoments = 5;
    std::vector<double> horiz(static_cast<std::size_t>(h) * ow * kMoments);
    for (int c = 0; c < 3; ++c) {
#pragma omp parallel for schedule(static)
        for (int y = 0; y < h; ++y) {
            for (int ox = 0; ox < ow; ++ox) {
                double m[kMoments] = {0, 0, 0, 0, 0};
                for (int u = 0; u < win; ++u) {
                    const double pa = channel(a.at(ox + u, y), c);
                    const double pb = channel(b.at(ox + u, y), c);
                    const double t = taps[u];
                    m[0] += t * pa;
                    m[1] += t * pb;
                    m[2] += t * pa * pa;
                    m[3] += t * pb * pb;
                    m[4] += t * pa * pb;
                }
                double* dst = &horiz[(static_cast<std::size_t>(y) * ow + ox) * kMoments];
                for (int k = 0; k < kMoments; ++k) dst[k] = m[k];
            }
        }
#pragma omp parallel for schedule(static)
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double m[kMoments] = {0, 0, 0, 0, 0};
                for (int v = 0; v < win; ++v) {
                    const double* src = &horiz[(static_cast<std::size_t>(oy + v) * ow + ox) * kMoments];
                    for (int k = 0; k < kMoments; ++k) m[k] += taps[v] * src[k];
                }
                out[static_cast<std::size_t>(oy) * ow + ox] += ssim_value(m[0], m[1], m[2], m[3], m[4], c1, c2) / 3.0;
            }
        }
    }
    return out;
}

std::vector<std::int32_t> nearest_visible_source(const PatchMask& mask) {
    const int per = mask.patches_per_side();
    const int ps = mask.patch_size();
    const int side = mask.image_side();
    std::vector<std::int32_t> out(static_cast<std::size_t>(side) * side, -1);

    std::vector<PixelRect> visible;
    std::vector<PixelRect> hidden;
    for (int pr = 0; pr < per; ++pr) {
        for (int pc = 0; pc < per; ++pc) {
            const PixelRect r{pc * ps, pr * ps, pc * ps + ps - 1, pr * ps + ps - 1};
            (mask.visible(pr, pc) ? visible : hidden).push_back(r);
        }
    }
    if (visible.empty()) return out;

    for (const auto& r : visible) {
        for (int y = r.y0; y <= r.y1; ++y) {
            for (int x = r.x0; x <= r.x1; ++x) out[static_cast<std::size_t>(y) * side + x] = y * side + x;
        }
    }

    const auto n_hidden = static_cast<std::ptrdiff_t>(hidden.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t hi = 0; hi < n_hidden; ++hi) {
        const PixelRect& q = hidden[hi];
        // Distance to a box is convex, so its maximum over q sits at a corner.
        long upper = std::numeric_limits<long>::max();
        for (const auto& v : visible) {
            const long worst = std::max({point_rect_d2(q.x0, q.y0, v), point_rect_d2(q.x1, q.y0, v),
                                         point_rect_d2(q.x0, q.y1, v), point_rect_d2(q.x1, q.y1, v)});
            upper = std::min(upper, worst);
        }
        std::vector<const PixelRect*> candidates;
        for (const auto& v : visible) {
            if (rect_rect_d2(q, v) <= upper) candidates.push_back(&v);
        }
        for (int y = q.y0; y <= q.y1; ++y) {
            for (int x = q.x0; x <= q.x1; ++x) {
                long best = std::numeric_limits<long>::max();
                int bx = 0, by = 0;
                for (const PixelRect* v : candidates) {
                    const int cx = std::clamp(x, v->x0, v->x1);
                    const int cy = std::clamp(y, v->y0, v->y1);
                    const long d = sq(cx - x) + sq(cy - y);
                    if (d < best || (d == best && (cy < by || (cy == by && cx < bx)))) {
                        best = d;
                        bx = cx;
                        by = cy;
                    }
                }
                out[static_cast<std::size_t>(y) * side + x] = by * side + bx;
            }
        }
    }
    return out;
}

double assign_to_centers(std::span<const Point2> points, std::span<const Point2> centers, std::span<int> labels) {
    if (centers.empty() || labels.size() != points.size()) throw std::invalid_argument("assign_to_centers: bad arguments");
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    double objective = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : objective)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double dx = points[i].x - centers[c].x;
            const double dy = points[i].y - centers[c].y;
            const double d = dx * dx + dy * dy;
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
        objective += best_d;
    }
    return objective;
}

void channel_variance(std::span<const RgbImage> samples, std::span<double> out) {
    check_variance_inputs(samples, out);
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = pixel_variance(samples, static_cast<std::size_t>(i));
}

}  // namespace parallel

}  // namespace mapsight::kernels
