#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mapsight/gridmap.hpp"
#include "mapsight/predictor.hpp"
#include "mapsight/uncertainty.hpp"

namespace mapsight {

/// Color the predictor sees for pixels nobody has observed yet.
inline constexpr Rgb kUnobservedColor{128, 128, 128};

struct World {
    SemanticGrid truth;
    RgbImage truth_rgb;
    int footprint = 48;
    int n_robots = 3;
};

/// Throws std::invalid_argument if the footprint exceeds the grid or the map
/// does not use the free/occupied/out-of-boundary colormap.
[[nodiscard]] World make_world(SemanticGrid truth, int footprint = 48, int n_robots = 3);

struct BeliefState {
    BoolGrid observed;
    RgbImage fused_rgb;
    std::vector<Cell> robots;

    [[nodiscard]] double coverage() const;
};

[[nodiscard]] BeliefState initial_belief(const World& world);

/// Marks the footprint square [p - f/2, p + f/2) (clipped to the grid) as
/// observed and copies truth colors. Returns the number of newly observed cells.
std::size_t observe(const World& world, BeliefState& belief, Cell position);

// --- clustering and assignment ---------------------------------------------

struct KMeansOptions {
    int max_iterations = 100;
    double tolerance = 1e-3;
};

struct KMeansResult {
    std::vector<Point2> centers;
    std::vector<int> labels;
    /// Sum of squared distances after every assignment step.
    std::vector<double> objective;
    int iterations = 0;
};

/// Lloyd's algorithm from k distinct points drawn uniformly with `seed`.
/// Fewer than k distinct points yield one center per distinct point; an empty
/// cluster is re-seeded at the point farthest from its current center.
[[nodiscard]] KMeansResult kmeans(std::span<const Point2> points, int k, std::uint64_t seed,
                                  const KMeansOptions& options = {});

/// Injective assignment minimizing total Euclidean distance. Entry i is the
/// center index for robot i, or -1 when there are more robots than centers.
[[nodiscard]] std::vector<int> assign_robots(std::span<const Point2> positions, std::span<const Point2> centers);

[[nodiscard]] double assignment_cost(std::span<const Point2> positions, std::span<const Point2> centers,
                                     std::span<const int> assignment);

// --- policies ----------------------------------------------------------------

enum class Policy { lawnmower, kmeans_u, kmeans_r, kmeans_u2 };

[[nodiscard]] const char* to_string(Policy policy);
/// Throws std::invalid_argument on an unknown name.
[[nodiscard]] Policy parse_policy(std::string_view name);

struct ExploreOptions {
    int step_len = 16;
    int step_cap = 500;
    double accuracy_target = 0.95;
    /// Centers count as stable when each moves less than this between re-clusterings...
    double stable_shift = 2.0;
    /// ...for this many consecutive steps.
    int stable_steps = 2;
    BootstrapOptions bootstrap;
    int patch_size = kDefaultPatch;
};

struct ClusterPlan {
    std::vector<Point2> centers;
    std::vector<int> assignment;
};

struct ExplorationState {
    Policy policy = Policy::lawnmower;
    std::uint64_t seed = 0;
    int step = 0;
    BeliefState belief;
    bool done = false;
    std::string stop_reason;

    // lawnmower
    std::vector<std::vector<Cell>> routes;
    std::vector<std::size_t> next_waypoint;

    // kmeans family
    bool reconnaissance = false;
    int stable_count = 0;
    std::vector<Point2> previous_centers;
    std::optional<ClusterPlan> last_plan;
};

/// Boustrophedon waypoints for each robot: vertical strips of width
/// ceil(W/n), rows spaced by the footprint.
[[nodiscard]] std::vector<std::vector<Cell>> lawnmower_routes(int width, int height, int n_robots, int footprint);

/// Places robots (strip starts for the lawnmower, random free cells otherwise)
/// and records their first observation.
[[nodiscard]] ExplorationState start_mission(Policy policy, const World& world, std::uint64_t seed);

/// Advances every robot by one step. Returns the cluster plan used, if any.
std::optional<ClusterPlan> step_policy(ExplorationState& state, const World& world, const Predictor& endpoint,
                                       const ExploreOptions& options);

struct MissionRow {
    int step = 0;
    double coverage = 0.0;
    double accuracy = 0.0;
    std::vector<Cell> robots;
    std::vector<Point2> centers;
    std::string stop_reason;
};

struct MissionLog {
    Policy policy = Policy::lawnmower;
    std::uint64_t seed = 0;
    std::vector<MissionRow> rows;
    std::optional<double> coverage_at_target;
    std::optional<int> step_at_target;
    std::string stop_reason;

    [[nodiscard]] int steps() const { return rows.empty() ? 0 : rows.back().step; }
    [[nodiscard]] double final_accuracy() const { return rows.empty() ? 0.0 : rows.back().accuracy; }
    [[nodiscard]] double final_coverage() const { return rows.empty() ? 0.0 : rows.back().coverage; }
};

/// Full-map accuracy of the prediction made from the current belief.
[[nodiscard]] double belief_accuracy(const World& world, const BeliefState& belief, const Predictor& endpoint,
                                     std::uint64_t seed, int patch_size = kDefaultPatch);

[[nodiscard]] MissionLog run_mission(Policy policy, const World& world, const Predictor& endpoint,
                                     const ExploreOptions& options, std::uint64_t seed);

/// One row per step; the policy lives in the summary, not in the rows.
void write_mission_csv(std::ostream& out, const MissionLog& log);
[[nodiscard]] nlohmann::json mission_summary(const MissionLog& log);

}  // namespace mapsight
