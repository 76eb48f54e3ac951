#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mapsight {

/// Default canonical raster geometry. Configurable everywhere it is consumed.
inline constexpr int kDefaultSide = 224;
inline constexpr int kDefaultPatch = 16;

using Label = std::uint8_t;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Integer pixel coordinate; x is the column, y the row.
struct Cell {
    int x = 0;
    int y = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell& a, const Cell& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

struct ColormapEntry {
    Label label = 0;
    Rgb color;
    std::string name;

    friend bool operator==(const ColormapEntry&, const ColormapEntry&) = default;
};

/// Ordered label -> color table. Labels are contiguous from 0 and colors are
/// pairwise distinct; the constructor enforces both.
class Colormap {
public:
    Colormap() = default;
    explicit Colormap(std::vector<ColormapEntry> entries);

    /// free=(0,255,0), occupied=(255,0,0), out-of-boundary=(0,0,255).
    static Colormap exploration();
    /// Two-class navigable / non-navigable map used for the binary modality.
    static Colormap binary();

    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }
    [[nodiscard]] const std::vector<ColormapEntry>& entries() const { return entries_; }
    [[nodiscard]] Rgb color(Label label) const;
    [[nodiscard]] bool contains(Label label) const { return label < entries_.size(); }

    friend bool operator==(const Colormap&, const Colormap&) = default;

private:
    std::vector<ColormapEntry> entries_;
};

namespace labels {
inline constexpr Label kFree = 0;
inline constexpr Label kOccupied = 1;
inline constexpr Label kOutOfBoundary = 2;
}  // namespace labels

class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] std::size_t pixel_count() const { return pixels_.size(); }

    [[nodiscard]] Rgb at(int x, int y) const { return pixels_[index(x, y)]; }
    Rgb& at(int x, int y) { return pixels_[index(x, y)]; }

    [[nodiscard]] std::span<const Rgb> pixels() const { return pixels_; }
    std::span<Rgb> pixels() { return pixels_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    [[nodiscard]] std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

class SemanticGrid {
public:
    SemanticGrid() = default;
    SemanticGrid(int width, int height, Colormap colormap, Label fill = 0);
    SemanticGrid(int width, int height, Colormap colormap, std::vector<Label> labels);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] std::size_t cell_count() const { return labels_.size(); }
    [[nodiscard]] const Colormap& colormap() const { return colormap_; }

    [[nodiscard]] Label at(int x, int y) const { return labels_[index(x, y)]; }
    void set(int x, int y, Label label);
    [[nodiscard]] bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    [[nodiscard]] std::span<const Label> labels() const { return labels_; }

    friend bool operator==(const SemanticGrid&, const SemanticGrid&) = default;

private:
    [[nodiscard]] std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Label> labels_;
    Colormap colormap_;
};

/// Row-major per-pixel boolean raster (observed flags, region selections).
struct BoolGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> cells;

    BoolGrid() = default;
    BoolGrid(int w, int h, bool fill = false)
        : width(w), height(h), cells(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill ? 1 : 0) {}

    [[nodiscard]] bool at(int x, int y) const { return cells[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { cells[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    [[nodiscard]] std::size_t count() const;

    friend bool operator==(const BoolGrid&, const BoolGrid&) = default;
};

/// Patch-level visibility on a square, patch-aligned image.
class PatchMask {
public:
    PatchMask() = default;
    PatchMask(int patches_per_side, int patch_size, bool visible = true);

    [[nodiscard]] int patches_per_side() const { return side_; }
    [[nodiscard]] int patch_size() const { return patch_; }
    [[nodiscard]] int image_side() const { return side_ * patch_; }

    [[nodiscard]] bool visible(int patch_row, int patch_col) const {
        return visible_[static_cast<std::size_t>(patch_row) * side_ + patch_col] != 0;
    }
    void set_visible(int patch_row, int patch_col, bool v) {
        visible_[static_cast<std::size_t>(patch_row) * side_ + patch_col] = v ? 1 : 0;
    }
    /// Visibility of the patch that contains pixel (x, y).
    [[nodiscard]] bool pixel_visible(int x, int y) const { return visible(y / patch_, x / patch_); }

    [[nodiscard]] int visible_count() const;
    [[nodiscard]] std::span<const std::uint8_t> flags() const { return visible_; }

    /// Pixel raster of masked (not visible) pixels.
    [[nodiscard]] BoolGrid masked_pixels() const;

    friend bool operator==(const PatchMask&, const PatchMask&) = default;

private:
    int side_ = 0;
    int patch_ = kDefaultPatch;
    std::vector<std::uint8_t> visible_;
};

[[nodiscard]] RgbImage grid_to_rgb(const SemanticGrid& grid);

/// Nearest colormap color by squared RGB distance; ties go to the lowest label.
[[nodiscard]] Label nearest_label(Rgb pixel, const Colormap& colormap);
[[nodiscard]] SemanticGrid rgb_to_grid(const RgbImage& img, const Colormap& colormap);

/// Hides k patches on every side. Throws std::invalid_argument unless 0 <= k < P/2.
[[nodiscard]] PatchMask periphery_mask(int patches_per_side, int k, int patch_size = kDefaultPatch);

/// Perceptual-range ratio (side/2) / (side/2 - patch*k) for a centered robot.
[[nodiscard]] double expansion_factor(int image_side, int k, int patch_size = kDefaultPatch);

/// A patch is visible iff all of its pixels are observed.
[[nodiscard]] PatchMask footprint_mask(const BoolGrid& observed, int patch_size = kDefaultPatch);

/// Copy of `img` with every masked patch replaced by `fill`.
[[nodiscard]] RgbImage blank_masked(const RgbImage& img, const PatchMask& mask, Rgb fill);

/// Overwrites pixels of visible patches in `dst` with those of `src`.
void paste_visible(RgbImage& dst, const RgbImage& src, const PatchMask& mask);

}  // namespace mapsight
