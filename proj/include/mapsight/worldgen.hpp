#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapsight/gridmap.hpp"

namespace mapsight {

/// Parameters of the synthetic room generator. Obstacles are axis-aligned
/// rectangles or L-shapes inside a free room whose outer margin is
/// out-of-boundary.
struct RoomSpec {
    int side = kDefaultSide;
    int min_obstacles = 5;
    int max_obstacles = 9;
    int min_obstacle_size = 40;
    int max_obstacle_size = 110;
    double l_shape_probability = 0.9;
    /// Thickness range of each L-shape arm.
    int min_l_arm = 8;
    int max_l_arm = 16;
    /// Out-of-boundary margin drawn independently for each side.
    int min_inset = 0;
    int max_inset = 16;
    /// Chance of cutting one extra out-of-boundary rectangle into a room corner.
    double notch_probability = 0.5;
    /// Accepted band for occupied cells over in-room cells, when obstacles exist.
    double min_obstacle_fraction = 0.05;
    double max_obstacle_fraction = 0.35;
    int max_attempts = 1000;

    friend bool operator==(const RoomSpec&, const RoomSpec&) = default;
};

/// Throws std::invalid_argument on inconsistent ranges.
void validate(const RoomSpec& spec);

[[nodiscard]] nlohmann::json to_json(const RoomSpec& spec);
/// Missing keys keep their defaults; unknown keys throw std::invalid_argument.
[[nodiscard]] RoomSpec room_spec_from_json(const nlohmann::json& j);

/// Deterministic three-class room. The free cells form one 4-connected
/// component. Throws std::runtime_error when no valid room is found within
/// `max_attempts` draws.
[[nodiscard]] SemanticGrid generate_room(const RoomSpec& spec, std::uint64_t seed);

/// True iff the free cells of `grid` form a single non-empty 4-connected component.
[[nodiscard]] bool free_space_connected(const SemanticGrid& grid);

/// Occupied cells divided by cells that are not out-of-boundary.
[[nodiscard]] double obstacle_fraction(const SemanticGrid& grid);

/// Navigable (free) vs non-navigable (everything else) two-class view.
[[nodiscard]] SemanticGrid to_binary(const SemanticGrid& grid);

// --- external datasets ------------------------------------------------------

struct DatasetItem {
    std::string name;
    RgbImage rgb;
    std::optional<SemanticGrid> semantic;
    std::optional<SemanticGrid> binary;
};

struct DatasetIssue {
    std::string file;
    std::string reason;
};

struct Dataset {
    std::vector<DatasetItem> items;
    std::vector<DatasetIssue> issues;
    /// Image files found under rgb/, semantic/ and binary/.
    std::size_t files_seen = 0;
    std::size_t files_ok = 0;
};

/// Center-crop to a square, then resize to side x side.
[[nodiscard]] RgbImage resize_bilinear(const RgbImage& img, int side);
[[nodiscard]] SemanticGrid resize_nearest(const SemanticGrid& grid, int side);
[[nodiscard]] RgbImage resize_nearest(const RgbImage& img, int side);

/// Reads rgb/*.png with optional semantic/<same name> and binary/<same name>,
/// plus colormap.json for the semantic images. Problems are recorded per file
/// and never abort the scan; files_seen == files_ok + issues.size().
/// Throws IoError only when `dir` itself is missing.
[[nodiscard]] Dataset ingest_dataset(const std::filesystem::path& dir, int side = kDefaultSide);

}  // namespace mapsight
