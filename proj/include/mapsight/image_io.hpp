#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "mapsight/gridmap.hpp"

namespace mapsight::io {

// PNG codec. All functions throw IoError on failure.
[[nodiscard]] RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& img);
[[nodiscard]] std::vector<std::uint8_t> encode_png(const RgbImage& img);
[[nodiscard]] RgbImage decode_png(std::span<const std::uint8_t> bytes);

struct Gray16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> values;
};
void write_gray16_png(const std::filesystem::path& path, const Gray16& img);
[[nodiscard]] Gray16 read_gray16_png(const std::filesystem::path& path);

// Colormap sidecar: {"labels":[{"id":0,"name":"free","rgb":[0,255,0]},...]}
[[nodiscard]] nlohmann::json colormap_to_json(const Colormap& cmap);
[[nodiscard]] Colormap colormap_from_json(const nlohmann::json& j);
[[nodiscard]] Colormap load_colormap(const std::filesystem::path& path);
void save_colormap(const std::filesystem::path& path, const Colormap& cmap);

/// Grid persisted as a PNG in colormap colors plus the JSON sidecar.
void save_grid(const std::filesystem::path& png_path, const std::filesystem::path& colormap_path,
               const SemanticGrid& grid);
[[nodiscard]] SemanticGrid load_grid(const std::filesystem::path& png_path, const Colormap& cmap);

}  // namespace mapsight::io
