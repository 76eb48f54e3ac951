#include "mapsight/gridmap.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "mapsight/kernels.hpp"

namespace mapsight {

Colormap::Colormap(std::vector<ColormapEntry> entries) : entries_(std::move(entries)) {
    if (entries_.size() > 256) throw std::invalid_argument("colormap: more than 256 labels");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].label != i) {
            throw std::invalid_argument("colormap: labels must be contiguous from 0, got " +
                                        std::to_string(entries_[i].label) + " at position " + std::to_string(i));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (entries_[j].color == entries_[i].color) {
                throw std::invalid_argument("colormap: duplicate color for labels " + std::to_string(j) + " and " +
                                            std::to_string(i));
            }
        }
    }
}

Colormap Colormap::exploration() {
    return Colormap({{labels::kFree, {0, 255, 0}, "free"},
                     {labels::kOccupied, {255, 0, 0}, "occupied"},
                     {labels::kOutOfBoundary, {0, 0, 255}, "out-of-boundary"}});
}

Colormap Colormap::binary() {
    return Colormap({{0, {255, 255, 255}, "navigable"}, {1, {0, 0, 0}, "non-navigable"}});
}

Rgb Colormap::color(Label label) const {
    if (!contains(label)) throw std::out_of_range("colormap: unknown label " + std::to_string(label));
    return entries_[label].color;
}

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

SemanticGrid::SemanticGrid(int width, int height, Colormap colormap, Label fill)
    : width_(width), height_(height), colormap_(std::move(colormap)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (!colormap_.contains(fill)) throw std::invalid_argument("grid fill label not in colormap");
    labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

SemanticGrid::SemanticGrid(int width, int height, Colormap colormap, std::vector<Label> labels)
    : width_(width), height_(height), labels_(std::move(labels)), colormap_(std::move(colormap)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw std::invalid_argument("grid label count does not match dimensions");
    }
    for (Label l : labels_) {
        if (!colormap_.contains(l)) throw std::invalid_argument("grid label " + std::to_string(l) + " not in colormap");
    }
}

void SemanticGrid::set(int x, int y, Label label) {
    if (!colormap_.contains(label)) throw std::invalid_argument("label " + std::to_string(label) + " not in colormap");
    labels_[index(x, y)] = label;
}

std::size_t BoolGrid::count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

PatchMask::PatchMask(int patches_per_side, int patch_size, bool visible) : side_(patches_per_side), patch_(patch_size) {
    if (patches_per_side <= 0 || patch_size <= 0) throw std::invalid_argument("patch mask geometry must be positive");
    visible_.assign(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_), visible ? 1 : 0);
}

int PatchMask::visible_count() const {
    return static_cast<int>(std::count(visible_.begin(), visible_.end(), std::uint8_t{1}));
}

BoolGrid PatchMask::masked_pixels() const {
    const int side = image_side();
    BoolGrid out(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) out.set(x, y, !pixel_visible(x, y));
    }
    return out;
}

RgbImage grid_to_rgb(const SemanticGrid& grid) {
    RgbImage img(grid.width(), grid.height());
    const auto& entries = grid.colormap().entries();
    auto labels = grid.labels();
    auto pixels = img.pixels();
    for (std::size_t i = 0; i < labels.size(); ++i) pixels[i] = entries[labels[i]].color;
    return img;
}

Label nearest_label(Rgb pixel, const Colormap& colormap) {
    if (colormap.empty()) throw std::invalid_argument("empty colormap");
    int best = 0;
    long best_d = -1;
    for (const auto& e : colormap.entries()) {
        const long dr = long{pixel.r} - e.color.r;
        const long dg = long{pixel.g} - e.color.g;
        const long db = long{pixel.b} - e.color.b;
        const long d = dr * dr + dg * dg + db * db;
        if (best_d < 0 || d < best_d) {
            best_d = d;
            best = e.label;
        }
    }
    return static_cast<Label>(best);
}

SemanticGrid rgb_to_grid(const RgbImage& img, const Colormap& colormap) {
    if (colormap.empty()) throw std::invalid_argument("empty colormap");
    std::vector<Rgb> palette;
    palette.reserve(colormap.size());
    for (const auto& e : colormap.entries()) palette.push_back(e.color);
    std::vector<Label> out(img.pixel_count());
    kernels::parallel::match_labels(img.pixels(), palette, out);
    return SemanticGrid(img.width(), img.height(), colormap, std::move(out));
}

PatchMask periphery_mask(int patches_per_side, int k, int patch_size) {
    if (k < 0 || 2 * k >= patches_per_side) {
        throw std::invalid_argument("periphery_mask: k=" + std::to_string(k) + " must satisfy 0 <= k < " +
                                    std::to_string(patches_per_side) + "/2");
    }
    PatchMask mask(patches_per_side, patch_size, false);
    for (int r = k; r < patches_per_side - k; ++r) {
        for (int c = k; c < patches_per_side - k; ++c) mask.set_visible(r, c, true);
    }
    return mask;
}

double expansion_factor(int image_side, int k, int patch_size) {
    const double half = image_side / 2.0;
    const double hidden = static_cast<double>(patch_size) * k;
    if (k < 0 || image_side <= 0 || hidden >= half) {
        throw std::invalid_argument("expansion_factor: degenerate k=" + std::to_string(k) + " for side " +
                                    std::to_string(image_side));
    }
    return half / (half - hidden);
}

PatchMask footprint_mask(const BoolGrid& observed, int patch_size) {
    if (observed.width != observed.height || patch_size <= 0 || observed.width % patch_size != 0) {
        throw std::invalid_argument("footprint_mask: grid must be square and divisible by the patch size");
    }
    const int per_side = observed.width / patch_size;
    PatchMask mask(per_side, patch_size, false);
    for (int pr = 0; pr < per_side; ++pr) {
        for (int pc = 0; pc < per_side; ++pc) {
            bool all = true;
            for (int y = pr * patch_size; all && y < (pr + 1) * patch_size; ++y) {
                for (int x = pc * patch_size; x < (pc + 1) * patch_size; ++x) {
                    if (!observed.at(x, y)) {
                        all = false;
                        break;
                    }
                }
            }
            mask.set_visible(pr, pc, all);
        }
    }
    return mask;
}

RgbImage blank_masked(const RgbImage& img, const PatchMask& mask, Rgb fill) {
    if (img.width() != mask.image_side() || img.height() != mask.image_side()) {
        throw std::invalid_argument("blank_masked: image does not match mask geometry");
    }
    RgbImage out = img;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (!mask.pixel_visible(x, y)) out.at(x, y) = fill;
        }
    }
    return out;
}

void paste_visible(RgbImage& dst, const RgbImage& src, const PatchMask& mask) {
    if (dst.width() != src.width() || dst.height() != src.height() || src.width() != mask.image_side() ||
        src.height() != mask.image_side()) {
        throw std::invalid_argument("paste_visible: geometry mismatch");
    }
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            if (mask.pixel_visible(x, y)) dst.at(x, y) = src.at(x, y);
        }
    }
}

}  // namespace mapsight
