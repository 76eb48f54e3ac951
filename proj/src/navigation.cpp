#include "mapsight/navigation.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "mapsight/rng.hpp"

namespace mapsight {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double octile(Cell a, Cell b) {
    const int dx = std::abs(a.x - b.x);
    const int dy = std::abs(a.y - b.y);
    return (dx + dy) + (kSqrt2 - 2.0) * std::min(dx, dy);
}

}  // namespace

Costmap build_costmap(const SemanticGrid& grid) {
    Costmap c{grid.width(), grid.height(), {}};
    c.traversable.reserve(grid.cell_count());
    for (Label l : grid.labels()) c.traversable.push_back(l == labels::kFree ? 1 : 0);
    return c;
}

Costmap build_costmap(const SemanticGrid& grid, const BoolGrid& known, UnknownCells unknown) {
    if (known.width != grid.width() || known.height != grid.height()) {
        throw std::invalid_argument("build_costmap: known grid does not match");
    }
    Costmap c = build_costmap(grid);
    for (std::size_t i = 0; i < c.traversable.size(); ++i) {
        if (!known.cells[i]) c.traversable[i] = unknown == UnknownCells::traversable ? 1 : 0;
    }
    return c;
}

std::optional<Path> astar(const Costmap& costmap, Cell start, Cell goal) {
    if (!costmap.in_bounds(start.x, start.y) || !costmap.in_bounds(goal.x, goal.y)) {
        throw std::invalid_argument("astar: start or goal outside grid");
    }
    if (!costmap.free(start.x, start.y)) throw std::invalid_argument("astar: start is not traversable");
    if (!costmap.free(goal.x, goal.y)) return std::nullopt;

    const int w = costmap.width;
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(costmap.height);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> g(n, inf);
    std::vector<std::int32_t> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    // (f, h, insertion order, cell index): a fixed total order keeps plans reproducible.
    using Entry = std::tuple<double, double, std::uint64_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::uint64_t order = 0;
    g[idx(start.x, start.y)] = 0.0;
    open.emplace(octile(start, goal), octile(start, goal), order++, idx(start.x, start.y));

    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const std::size_t goal_idx = idx(goal.x, goal.y);
    while (!open.empty()) {
        const auto [f, h, ord, cur] = open.top();
        open.pop();
        if (closed[cur]) continue;
        closed[cur] = 1;
        if (cur == goal_idx) break;
        const int cx = static_cast<int>(cur % w);
        const int cy = static_cast<int>(cur / w);
        for (int k = 0; k < 8; ++k) {
            const int nx = cx + kDx[k];
            const int ny = cy + kDy[k];
            if (!costmap.in_bounds(nx, ny) || !costmap.free(nx, ny)) continue;
            const bool diagonal = kDx[k] != 0 && kDy[k] != 0;
            if (diagonal && (!costmap.free(nx, cy) || !costmap.free(cx, ny))) continue;
            const std::size_t ni = idx(nx, ny);
            if (closed[ni]) continue;
            const double ng = g[cur] + (diagonal ? kSqrt2 : 1.0);
            if (ng < g[ni]) {
                g[ni] = ng;
                parent[ni] = static_cast<std::int32_t>(cur);
                const double nh = octile({nx, ny}, goal);
                open.emplace(ng + nh, nh, order++, ni);
            }
        }
    }
    if (!closed[goal_idx]) return std::nullopt;

    Path path;
    path.cost = g[goal_idx];
    for (auto at = static_cast<std::int32_t>(goal_idx); at >= 0; at = parent[static_cast<std::size_t>(at)]) {
        path.cells.push_back({at % w, at / w});
    }
    std::reverse(path.cells.begin(), path.cells.end());
    return path;
}

const char* to_string(NavMode mode) { return mode == NavMode::predictive ? "predictive" : "baseline"; }

NavState start_episode(const World& world, Cell start, Cell goal, NavMode mode, std::uint64_t seed) {
    if (start == goal) throw std::invalid_argument("episode: start equals goal");
    if (!world.truth.in_bounds(start.x, start.y) || !world.truth.in_bounds(goal.x, goal.y)) {
        throw std::invalid_argument("episode: start or goal outside grid");
    }
    if (world.truth.at(start.x, start.y) != labels::kFree || world.truth.at(goal.x, goal.y) != labels::kFree) {
        throw std::invalid_argument("episode: start and goal must be free cells");
    }
    NavState s;
    s.mode = mode;
    s.goal = goal;
    s.position = start;
    s.belief = initial_belief(world);
    s.belief.robots = {start};
    s.seed = seed;
    s.trajectory = {start};
    return s;
}

NavStepResult nav_step(NavState& s, const World& world, const Predictor& endpoint, const NavOptions& options) {
    NavStepResult res{s.position};
    if (s.reached || s.failed) {
        res.reached = s.reached;
        res.failed = s.failed;
        return res;
    }
    ++s.steps;
    observe(world, s.belief, s.position);
    const Colormap& cmap = world.truth.colormap();

    std::optional<Path> plan;
    if (s.mode == NavMode::predictive) {
        PredictRequest req{s.belief.fused_rgb, footprint_mask(s.belief.observed, options.patch_size), 0.0,
                           derive_seed(s.seed, "noise", static_cast<std::uint64_t>(s.steps))};
        if (req.mask.visible_count() > 0) {
            const SemanticGrid predicted = predict_to_grid(endpoint, req, cmap, s.belief.observed);
            plan = astar(build_costmap(predicted), s.position, s.goal);
        }
    }
    if (!plan) {
        // Baseline planning, and the predictive fallback: unknown space is assumed free.
        const SemanticGrid known = rgb_to_grid(s.belief.fused_rgb, cmap);
        plan = astar(build_costmap(known, s.belief.observed, UnknownCells::traversable), s.position, s.goal);
        if (s.mode == NavMode::predictive) {
            res.used_fallback = true;
            ++s.fallbacks;
        }
    }
    if (!plan) {
        s.failed = true;
        res.failed = true;
        return res;
    }

    std::size_t stop = 0;
    while (stop + 1 < plan->cells.size() && s.belief.observed.at(plan->cells[stop + 1].x, plan->cells[stop + 1].y)) {
        ++stop;
    }
    for (std::size_t i = 1; i <= stop; ++i) s.trajectory.push_back(plan->cells[i]);
    s.position = plan->cells[stop];
    s.belief.robots = {s.position};
    s.plans.push_back(std::move(*plan));
    res.moved_to = s.position;
    if (s.position == s.goal) {
        s.reached = true;
        res.reached = true;
    }
    return res;
}

NavEpisode run_episode(const World& world, Cell start, Cell goal, NavMode mode, const Predictor& endpoint,
                       const NavOptions& options, std::uint64_t seed) {
    NavState s = start_episode(world, start, goal, mode, seed);
    while (!s.reached && !s.failed && s.steps < options.step_cap) nav_step(s, world, endpoint, options);
    NavEpisode ep;
    ep.start = start;
    ep.goal = goal;
    ep.mode = mode;
    ep.steps = s.steps;
    ep.fallbacks = s.fallbacks;
    ep.reached = s.reached;
    ep.trajectory = std::move(s.trajectory);
    ep.plans = std::move(s.plans);
    return ep;
}

nlohmann::json episode_path_json(const NavEpisode& ep) {
    auto cells = [](const std::vector<Cell>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (Cell c : v) a.push_back({c.x, c.y});
        return a;
    };
    nlohmann::json plans = nlohmann::json::array();
    for (const auto& p : ep.plans) plans.push_back(cells(p.cells));
    return {{"mode", to_string(ep.mode)},
            {"start", {ep.start.x, ep.start.y}},
            {"goal", {ep.goal.x, ep.goal.y}},
            {"steps", ep.steps},
            {"status", ep.reached ? "reached" : "failed"},
            {"trajectory", cells(ep.trajectory)},
            {"plans", plans}};
}

}  // namespace mapsight
