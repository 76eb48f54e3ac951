#include "mapsight/worldgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "mapsight/errors.hpp"
#include "mapsight/image_io.hpp"
#include "mapsight/rng.hpp"

namespace mapsight {

namespace fs = std::filesystem;

void validate(const RoomSpec& s) {
    auto fail = [](const std::string& why) { throw std::invalid_argument("room spec: " + why); };
    if (s.side <= 0) fail("side must be positive");
    if (s.min_obstacles < 0 || s.max_obstacles < s.min_obstacles) fail("bad obstacle count range");
    if (s.min_obstacle_size < 2 || s.max_obstacle_size < s.min_obstacle_size) fail("bad obstacle size range");
    if (s.min_l_arm < 1 || s.max_l_arm < s.min_l_arm) fail("bad L-shape arm range");
    if (s.min_inset < 0 || s.max_inset < s.min_inset) fail("bad inset range");
    if (2 * s.max_inset + s.max_obstacle_size > s.side) fail("insets leave no room for the largest obstacle");
    if (s.l_shape_probability < 0 || s.l_shape_probability > 1 || s.notch_probability < 0 ||
        s.notch_probability > 1) {
        fail("probabilities must lie in [0, 1]");
    }
    if (s.min_obstacle_fraction < 0 || s.max_obstacle_fraction > 1 ||
        s.max_obstacle_fraction < s.min_obstacle_fraction) {
        fail("bad obstacle fraction band");
    }
    if (s.max_attempts <= 0) fail("max_attempts must be positive");
}

nlohmann::json to_json(const RoomSpec& s) {
    return {{"side", s.side},
            {"min_obstacles", s.min_obstacles},
            {"max_obstacles", s.max_obstacles},
            {"min_obstacle_size", s.min_obstacle_size},
            {"max_obstacle_size", s.max_obstacle_size},
            {"l_shape_probability", s.l_shape_probability},
            {"min_l_arm", s.min_l_arm},
            {"max_l_arm", s.max_l_arm},
            {"min_inset", s.min_inset},
            {"max_inset", s.max_inset},
            {"notch_probability", s.notch_probability},
            {"min_obstacle_fraction", s.min_obstacle_fraction},
            {"max_obstacle_fraction", s.max_obstacle_fraction},
            {"max_attempts", s.max_attempts}};
}

RoomSpec room_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("room spec must be a JSON object");
    RoomSpec s;
    const nlohmann::json known = to_json(s);
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw std::invalid_argument("room spec: unknown key '" + key + "'");
    }
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("side", s.side);
    get("min_obstacles", s.min_obstacles);
    get("max_obstacles", s.max_obstacles);
    get("min_obstacle_size", s.min_obstacle_size);
    get("max_obstacle_size", s.max_obstacle_size);
    get("l_shape_probability", s.l_shape_probability);
    get("min_l_arm", s.min_l_arm);
    get("max_l_arm", s.max_l_arm);
    get("min_inset", s.min_inset);
    get("max_inset", s.max_inset);
    get("notch_probability", s.notch_probability);
    get("min_obstacle_fraction", s.min_obstacle_fraction);
    get("max_obstacle_fraction", s.max_obstacle_fraction);
    get("max_attempts", s.max_attempts);
    validate(s);
    return s;
}

bool free_space_connected(const SemanticGrid& grid) {
    const int w = grid.width();
    const int h = grid.height();
    const auto lbl = grid.labels();
    std::vector<std::uint8_t> seen(lbl.size(), 0);
    std::vector<std::size_t> stack;
    std::size_t total = 0;
    for (std::size_t i = 0; i < lbl.size(); ++i) {
        if (lbl[i] != labels::kFree) continue;
        ++total;
        if (stack.empty() && !seen[i] && total == 1) {
            stack.push_back(i);
            seen[i] = 1;
        }
    }
    if (total == 0) return false;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        ++reached;
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        const int nx[4] = {x + 1, x - 1, x, x};
        const int ny[4] = {y, y, y + 1, y - 1};
        for (int k = 0; k < 4; ++k) {
            if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
            const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
            if (!seen[j] && lbl[j] == labels::kFree) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    return reached == total;
}

double obstacle_fraction(const SemanticGrid& grid) {
    std::size_t occupied = 0;
    std::size_t inside = 0;
    for (Label l : grid.labels()) {
        if (l == labels::kOutOfBoundary) continue;
        ++inside;
        if (l == labels::kOccupied) ++occupied;
    }
    return inside == 0 ? 0.0 : static_cast<double>(occupied) / static_cast<double>(inside);
}

SemanticGrid to_binary(const SemanticGrid& grid) {
    std::vector<Label> out(grid.cell_count());
    const auto in = grid.labels();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] == labels::kFree ? 0 : 1;
    return SemanticGrid(grid.width(), grid.height(), Colormap::binary(), std::move(out));
}

namespace {

struct Rect {
    int x0, y0, x1, y1;  // half-open
};

void fill(SemanticGrid& g, Rect r, Label label, bool only_free) {
    r.x0 = std::max(r.x0, 0);
    r.y0 = std::max(r.y0, 0);
    r.x1 = std::min(r.x1, g.width());
    r.y1 = std::min(r.y1, g.height());
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            if (!only_free || g.at(x, y) == labels::kFree) g.set(x, y, label);
        }
    }
}

SemanticGrid draw_room(const RoomSpec& s, Rng& rng) {
    SemanticGrid g(s.side, s.side, Colormap::exploration(), labels::kFree);
    const int left = rng.range(s.min_inset, s.max_inset);
    const int right = rng.range(s.min_inset, s.max_inset);
    const int top = rng.range(s.min_inset, s.max_inset);
    const int bottom = rng.range(s.min_inset, s.max_inset);
    const Rect room{left, top, s.side - right, s.side - bottom};
    fill(g, {0, 0, s.side, room.y0}, labels::kOutOfBoundary, false);
    fill(g, {0, room.y1, s.side, s.side}, labels::kOutOfBoundary, false);
    fill(g, {0, 0, room.x0, s.side}, labels::kOutOfBoundary, false);
    fill(g, {room.x1, 0, s.side, s.side}, labels::kOutOfBoundary, false);

    const int room_w = room.x1 - room.x0;
    const int room_h = room.y1 - room.y0;
    if (rng.bernoulli(s.notch_probability) && room_w >= 48 && room_h >= 48) {
        const int nw = rng.range(16, room_w / 3);
        const int nh = rng.range(16, room_h / 3);
        const int corner = rng.range(0, 3);
        const int nx = (corner & 1) ? room.x1 - nw : room.x0;
        const int ny = (corner & 2) ? room.y1 - nh : room.y0;
        fill(g, {nx, ny, nx + nw, ny + nh}, labels::kOutOfBoundary, false);
    }

    const int count = rng.range(s.min_obstacles, s.max_obstacles);
    for (int i = 0; i < count; ++i) {
        const int w = std::min(rng.range(s.min_obstacle_size, s.max_obstacle_size), room_w);
        const int h = std::min(rng.range(s.min_obstacle_size, s.max_obstacle_size), room_h);
        const int x = rng.range(room.x0, room.x1 - w);
        const int y = rng.range(room.y0, room.y1 - h);
        if (rng.bernoulli(s.l_shape_probability) && w >= 4 && h >= 4) {
            // Keep a vertical and a horizontal arm sharing one corner.
            const int arm_w = rng.range(std::min(s.min_l_arm, w / 2), std::min(s.max_l_arm, w / 2));
            const int arm_h = rng.range(std::min(s.min_l_arm, h / 2), std::min(s.max_l_arm, h / 2));
            const int corner = rng.range(0, 3);
            const int vx = (corner & 1) ? x + w - arm_w : x;
            const int hy = (corner & 2) ? y + h - arm_h : y;
            fill(g, {vx, y, vx + arm_w, y + h}, labels::kOccupied, true);
            fill(g, {x, hy, x + w, hy + arm_h}, labels::kOccupied, true);
        } else {
            fill(g, {x, y, x + w, y + h}, labels::kOccupied, true);
        }
    }
    return g;
}

}  // namespace

SemanticGrid generate_room(const RoomSpec& spec, std::uint64_t seed) {
    validate(spec);
    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, "room", static_cast<std::uint64_t>(attempt)));
        SemanticGrid g = draw_room(spec, rng);
        const double frac = obstacle_fraction(g);
        const bool has_obstacles = std::any_of(g.labels().begin(), g.labels().end(),
                                               [](Label l) { return l == labels::kOccupied; });
        if (has_obstacles && (frac < spec.min_obstacle_fraction || frac > spec.max_obstacle_fraction)) continue;
        if (!free_space_connected(g)) continue;
        return g;
    }
    throw std::runtime_error("generate_room: no valid room after " + std::to_string(spec.max_attempts) +
                             " attempts");
}

// --- resizing ---------------------------------------------------------------

namespace {

struct Crop {
    int x0, y0, side;
};

Crop center_crop(int w, int h) {
    const int s = std::min(w, h);
    return {(w - s) / 2, (h - s) / 2, s};
}

int nearest_source(int i, int src, int dst) {
    return std::min(src - 1, static_cast<int>((2LL * i + 1) * src / (2LL * dst)));
}

}  // namespace

RgbImage resize_nearest(const RgbImage& img, int side) {
    if (side <= 0) throw std::invalid_argument("resize: side must be positive");
    const Crop c = center_crop(img.width(), img.height());
    RgbImage out(side, side);
    for (int y = 0; y < side; ++y) {
        const int sy = c.y0 + nearest_source(y, c.side, side);
        for (int x = 0; x < side; ++x) out.at(x, y) = img.at(c.x0 + nearest_source(x, c.side, side), sy);
    }
    return out;
}

SemanticGrid resize_nearest(const SemanticGrid& grid, int side) {
    if (side <= 0) throw std::invalid_argument("resize: side must be positive");
    const Crop c = center_crop(grid.width(), grid.height());
    std::vector<Label> out(static_cast<std::size_t>(side) * side);
    for (int y = 0; y < side; ++y) {
        const int sy = c.y0 + nearest_source(y, c.side, side);
        for (int x = 0; x < side; ++x) {
            out[static_cast<std::size_t>(y) * side + x] = grid.at(c.x0 + nearest_source(x, c.side, side), sy);
        }
    }
    return SemanticGrid(side, side, grid.colormap(), std::move(out));
}

RgbImage resize_bilinear(const RgbImage& img, int side) {
    if (side <= 0) throw std::invalid_argument("resize: side must be positive");
    const Crop c = center_crop(img.width(), img.height());
    if (c.side == side && img.width() == img.height()) return img;
    const double scale = static_cast<double>(c.side) / side;
    RgbImage out(side, side);
    auto axis = [&](int i, int& i0, int& i1, double& t) {
        const double u = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(c.side - 1));
        i0 = static_cast<int>(std::floor(u));
        i1 = std::min(i0 + 1, c.side - 1);
        t = u - i0;
    };
    for (int y = 0; y < side; ++y) {
        int y0, y1;
        double ty;
        axis(y, y0, y1, ty);
        for (int x = 0; x < side; ++x) {
            int x0, x1;
            double tx;
            axis(x, x0, x1, tx);
            const Rgb p00 = img.at(c.x0 + x0, c.y0 + y0);
            const Rgb p10 = img.at(c.x0 + x1, c.y0 + y0);
            const Rgb p01 = img.at(c.x0 + x0, c.y0 + y1);
            const Rgb p11 = img.at(c.x0 + x1, c.y0 + y1);
            auto blend = [&](auto channel) {
                const double top = channel(p00) * (1 - tx) + channel(p10) * tx;
                const double bot = channel(p01) * (1 - tx) + channel(p11) * tx;
                return static_cast<std::uint8_t>(std::clamp(std::floor(top * (1 - ty) + bot * ty + 0.5), 0.0, 255.0));
            };
            out.at(x, y) = {blend([](Rgb p) { return double(p.r); }), blend([](Rgb p) { return double(p.g); }),
                            blend([](Rgb p) { return double(p.b); })};
        }
    }
    return out;
}

// --- ingestion --------------------------------------------------------------

namespace {

std::map<std::string, fs::path> list_pngs(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png") out.emplace(entry.path().stem().string(), entry.path());
    }
    return out;
}

}  // namespace

Dataset ingest_dataset(const fs::path& dir, int side) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
    Dataset ds;
    auto report = [&ds](const fs::path& file, const std::string& why) { ds.issues.push_back({file.string(), why}); };

    const auto rgb_files = list_pngs(dir / "rgb");
    const auto sem_files = list_pngs(dir / "semantic");
    const auto bin_files = list_pngs(dir / "binary");
    ds.files_seen = rgb_files.size() + sem_files.size() + bin_files.size();

    std::optional<Colormap> cmap;
    std::string cmap_error = "colormap.json missing";
    if (!sem_files.empty() && fs::exists(dir / "colormap.json")) {
        try {
            cmap = io::load_colormap(dir / "colormap.json");
        } catch (const std::exception& e) {
            cmap_error = std::string("colormap.json unusable: ") + e.what();
        }
    }

    std::map<std::string, DatasetItem> items;
    std::map<std::string, std::pair<int, int>> native_size;
    for (const auto& [stem, path] : rgb_files) {
        try {
            RgbImage img = io::read_png(path);
            native_size[stem] = {img.width(), img.height()};
            items[stem] = DatasetItem{stem, resize_bilinear(img, side), std::nullopt, std::nullopt};
            ++ds.files_ok;
        } catch (const std::exception& e) {
            report(path, e.what());
        }
    }

    auto attach = [&](const std::map<std::string, fs::path>& files, bool semantic) {
        for (const auto& [stem, path] : files) {
            if (!rgb_files.contains(stem)) {
                report(path, "missing pair: no rgb/" + stem + ".png");
                continue;
            }
            auto it = items.find(stem);
            if (it == items.end()) {
                report(path, "paired rgb image could not be read");
                continue;
            }
            if (semantic && !cmap) {
                report(path, cmap_error);
                continue;
            }
            try {
                RgbImage raw = io::read_png(path);
                if (std::pair{raw.width(), raw.height()} != native_size[stem]) {
                    report(path, "size differs from rgb/" + stem + ".png");
                    continue;
                }
                SemanticGrid grid = rgb_to_grid(raw, semantic ? *cmap : Colormap::binary());
                (semantic ? it->second.semantic : it->second.binary) = resize_nearest(grid, side);
                ++ds.files_ok;
            } catch (const std::exception& e) {
                report(path, e.what());
            }
        }
    };
    attach(sem_files, true);
    attach(bin_files, false);

    for (auto& [stem, item] : items) ds.items.push_back(std::move(item));
    return ds;
}

}  // namespace mapsight
