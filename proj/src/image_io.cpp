#include "mapsight/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <string>

#include "mapsight/errors.hpp"

namespace mapsight::io {

namespace {

struct ImageGuard {
    png_image image{};
    ImageGuard() {
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
    }
    ~ImageGuard() { png_image_free(&image); }
    ImageGuard(const ImageGuard&) = delete;
    ImageGuard& operator=(const ImageGuard&) = delete;
};

std::string png_message(const png_image& image) { return std::string(image.message); }

RgbImage finish_rgb_read(ImageGuard& g, const std::string& source) {
    g.image.format = PNG_FORMAT_RGB;
    if (g.image.width == 0 || g.image.height == 0) throw IoError(source + ": empty PNG");
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(g.image));
    if (png_image_finish_read(&g.image, nullptr, buffer.data(), 0, nullptr) == 0) {
        throw IoError(source + ": " + png_message(g.image));
    }
    RgbImage img(static_cast<int>(g.image.width), static_cast<int>(g.image.height));
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
    return img;
}

std::vector<png_byte> interleave(const RgbImage& img) {
    std::vector<png_byte> buffer(img.pixel_count() * 3);
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        buffer[3 * i] = px[i].r;
        buffer[3 * i + 1] = px[i].g;
        buffer[3 * i + 2] = px[i].b;
    }
    return buffer;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
    ImageGuard g;
    if (png_image_begin_read_from_file(&g.image, path.c_str()) == 0) {
        throw IoError(path.string() + ": " + png_message(g.image));
    }
    return finish_rgb_read(g, path.string());
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    ImageGuard g;
    if (bytes.empty() || png_image_begin_read_from_memory(&g.image, bytes.data(), bytes.size()) == 0) {
        throw IoError("png decode: " + (bytes.empty() ? std::string("no data") : png_message(g.image)));
    }
    return finish_rgb_read(g, "png decode");
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(img.width());
    g.image.height = static_cast<png_uint_32>(img.height());
    g.image.format = PNG_FORMAT_RGB;
    const auto buffer = interleave(img);
    if (png_image_write_to_file(&g.image, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
        throw IoError(path.string() + ": " + png_message(g.image));
    }
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(img.width());
    g.image.height = static_cast<png_uint_32>(img.height());
    g.image.format = PNG_FORMAT_RGB;
    const auto buffer = interleave(img);
    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&g.image, nullptr, &size, 0, buffer.data(), 0, nullptr) == 0) {
        throw IoError("png encode: " + png_message(g.image));
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&g.image, out.data(), &size, 0, buffer.data(), 0, nullptr) == 0) {
        throw IoError("png encode: " + png_message(g.image));
    }
    out.resize(size);
    return out;
}

void write_gray16_png(const std::filesystem::path& path, const Gray16& img) {
    if (img.values.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height)) {
        throw IoError(path.string() + ": gray16 size mismatch");
    }
    ImageGuard g;
    g.image.width = static_cast<png_uint_32>(img.width);
    g.image.height = static_cast<png_uint_32>(img.height);
    g.image.format = PNG_FORMAT_LINEAR_Y;
    if (png_image_write_to_file(&g.image, path.c_str(), 0, img.values.data(), 0, nullptr) == 0) {
        throw IoError(path.string() + ": " + png_message(g.image));
    }
}

Gray16 read_gray16_png(const std::filesystem::path& path) {
    ImageGuard g;
    if (png_image_begin_read_from_file(&g.image, path.c_str()) == 0) {
        throw IoError(path.string() + ": " + png_message(g.image));
    }
    g.image.format = PNG_FORMAT_LINEAR_Y;
    Gray16 out;
    out.width = static_cast<int>(g.image.width);
    out.height = static_cast<int>(g.image.height);
    out.values.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height));
    if (png_image_finish_read(&g.image, nullptr, out.values.data(), 0, nullptr) == 0) {
        throw IoError(path.string() + ": " + png_message(g.image));
    }
    return out;
}

nlohmann::json colormap_to_json(const Colormap& cmap) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& e : cmap.entries()) {
        labels.push_back({{"id", e.label}, {"name", e.name}, {"rgb", {e.color.r, e.color.g, e.color.b}}});
    }
    return {{"labels", labels}};
}

Colormap colormap_from_json(const nlohmann::json& j) {
    try {
        std::vector<ColormapEntry> entries;
        for (const auto& item : j.at("labels")) {
            const auto& rgb = item.at("rgb");
            if (!rgb.is_array() || rgb.size() != 3) throw IoError("colormap: rgb must have 3 components");
            ColormapEntry e;
            const int id = item.at("id").get<int>();
            if (id < 0 || id > 255) throw IoError("colormap: label id out of range");
            e.label = static_cast<Label>(id);
            e.name = item.value("name", std::string{});
            int c[3];
            for (int k = 0; k < 3; ++k) {
                c[k] = rgb[k].get<int>();
                if (c[k] < 0 || c[k] > 255) throw IoError("colormap: color component out of range");
            }
            e.color = {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]), static_cast<std::uint8_t>(c[2])};
            entries.push_back(std::move(e));
        }
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
        return Colormap(std::move(entries));
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("colormap: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw IoError(ex.what());
    }
}

Colormap load_colormap(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(path.string() + ": " + ex.what());
    }
    return colormap_from_json(j);
}

void save_colormap(const std::filesystem::path& path, const Colormap& cmap) {
    std::ofstream out(path);
    if (!out) throw IoError(path.string() + ": cannot write");
    out << colormap_to_json(cmap).dump(2) << '\n';
}

void save_grid(const std::filesystem::path& png_path, const std::filesystem::path& colormap_path,
               const SemanticGrid& grid) {
    write_png(png_path, grid_to_rgb(grid));
    save_colormap(colormap_path, grid.colormap());
}

SemanticGrid load_grid(const std::filesystem::path& png_path, const Colormap& cmap) {
    return rgb_to_grid(read_png(png_path), cmap);
}

}  // namespace mapsight::io
