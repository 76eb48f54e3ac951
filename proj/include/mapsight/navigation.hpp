#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapsight/exploration.hpp"
#include "mapsight/gridmap.hpp"
#include "mapsight/predictor.hpp"

namespace mapsight {

struct Costmap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> traversable;

    [[nodiscard]] bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    [[nodiscard]] bool free(int x, int y) const { return traversable[static_cast<std::size_t>(y) * width + x] != 0; }
};

/// Free cells are traversable; occupied and out-of-boundary cells are not.
[[nodiscard]] Costmap build_costmap(const SemanticGrid& grid);

enum class UnknownCells { impassable, traversable };

/// As above for known cells; cells not flagged in `known` follow `unknown`.
[[nodiscard]] Costmap build_costmap(const SemanticGrid& grid, const BoolGrid& known, UnknownCells unknown);

struct Path {
    std::vector<Cell> cells;
    double cost = 0.0;
};

/// 8-connected A* with unit straight and sqrt(2) diagonal steps, octile
/// heuristic, no corner cutting between two blocked orthogonal neighbours.
/// Throws std::invalid_argument when start or goal lies outside the grid or
/// the start is blocked; returns nullopt when the goal is unreachable.
[[nodiscard]] std::optional<Path> astar(const Costmap& costmap, Cell start, Cell goal);

enum class NavMode { predictive, baseline };

[[nodiscard]] const char* to_string(NavMode mode);

struct NavOptions {
    int step_cap = 200;
    int patch_size = kDefaultPatch;
};

struct NavState {
    NavMode mode = NavMode::baseline;
    Cell goal;
    Cell position;
    BeliefState belief;
    std::uint64_t seed = 0;
    int steps = 0;
    int fallbacks = 0;
    bool reached = false;
    bool failed = false;
    std::vector<Cell> trajectory;
    std::vector<Path> plans;
};

[[nodiscard]] NavState start_episode(const World& world, Cell start, Cell goal, NavMode mode, std::uint64_t seed);

struct NavStepResult {
    Cell moved_to;
    bool reached = false;
    bool failed = false;
    bool used_fallback = false;
};

/// One observe-plan-move cycle. The robot only moves along the planned path
/// through cells it has already observed and stops at the last such cell.
NavStepResult nav_step(NavState& state, const World& world, const Predictor& endpoint, const NavOptions& options = {});

struct NavEpisode {
    Cell start;
    Cell goal;
    NavMode mode = NavMode::baseline;
    int steps = 0;
    int fallbacks = 0;
    bool reached = false;
    std::vector<Cell> trajectory;
    std::vector<Path> plans;
};

/// Runs nav_step until the goal is reached or the step cap is hit. Throws
/// std::invalid_argument unless start != goal and both are free in the truth.
[[nodiscard]] NavEpisode run_episode(const World& world, Cell start, Cell goal, NavMode mode, const Predictor& endpoint,
                                     const NavOptions& options = {}, std::uint64_t seed = 0);

[[nodiscard]] nlohmann::json episode_path_json(const NavEpisode& episode);

}  // namespace mapsight
