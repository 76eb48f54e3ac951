#include "mapsight/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mapsight/csv.hpp"
#include "mapsight/kernels.hpp"
#include "mapsight/metrics.hpp"
#include "mapsight/rng.hpp"

namespace mapsight {

// --- world and belief ---------------------------------------------------------

World make_world(SemanticGrid truth, int footprint, int n_robots) {
    if (footprint <= 0 || footprint > truth.width() || footprint > truth.height()) {
        throw std::invalid_argument("world: footprint must be positive and fit inside the grid");
    }
    if (n_robots <= 0) throw std::invalid_argument("world: need at least one robot");
    if (!(truth.colormap() == Colormap::exploration())) {
        throw std::invalid_argument("world: truth must use the free/occupied/out-of-boundary colormap");
    }
    World w;
    w.truth_rgb = grid_to_rgb(truth);
    w.truth = std::move(truth);
    w.footprint = footprint;
    w.n_robots = n_robots;
    return w;
}

double BeliefState::coverage() const {
    return static_cast<double>(observed.count()) / static_cast<double>(observed.cells.size());
}

BeliefState initial_belief(const World& world) {
    BeliefState b;
    b.observed = BoolGrid(world.truth.width(), world.truth.height());
    b.fused_rgb = RgbImage(world.truth.width(), world.truth.height(), kUnobservedColor);
    return b;
}

std::size_t observe(const World& world, BeliefState& belief, Cell p) {
    if (!world.truth.in_bounds(p.x, p.y)) {
        throw std::invalid_argument("observe: position (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                                    ") outside grid");
    }
    const int half = world.footprint / 2;
    const int x0 = std::max(0, p.x - half);
    const int y0 = std::max(0, p.y - half);
    const int x1 = std::min(world.truth.width(), p.x - half + world.footprint);
    const int y1 = std::min(world.truth.height(), p.y - half + world.footprint);
    std::size_t fresh = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (belief.observed.at(x, y)) continue;
            belief.observed.set(x, y, true);
            belief.fused_rgb.at(x, y) = world.truth_rgb.at(x, y);
            ++fresh;
        }
    }
    return fresh;
}

// --- kmeans ---------------------------------------------------------------------

namespace {

double dist2(Point2 a, Point2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

bool point_less(Point2 a, Point2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); }

}  // namespace

KMeansResult kmeans(std::span<const Point2> points, int k, std::uint64_t seed, const KMeansOptions& options) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    KMeansResult res;
    if (points.empty()) return res;

    std::vector<Point2> distinct(points.begin(), points.end());
    // Candidate lists usually arrive as two row-major runs (unobserved cells,
    // then uncertain ones); merging those is linear. Anything else is sorted.
    const auto first_run = std::is_sorted_until(distinct.begin(), distinct.end(), point_less);
    if (std::is_sorted(first_run, distinct.end(), point_less)) {
        std::inplace_merge(distinct.begin(), first_run, distinct.end(), point_less);
    } else {
        std::sort(distinct.begin(), distinct.end(), point_less);
    }
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    res.labels.assign(points.size(), 0);
    if (distinct.size() <= static_cast<std::size_t>(k)) {
        res.centers = distinct;
        res.objective.push_back(kernels::parallel::assign_to_centers(points, res.centers, res.labels));
        return res;
    }

    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.below(distinct.size() - static_cast<std::size_t>(i));
        std::swap(distinct[static_cast<std::size_t>(i)], distinct[j]);
    }
    res.centers.assign(distinct.begin(), distinct.begin() + k);

    std::vector<double> sx(static_cast<std::size_t>(k)), sy(static_cast<std::size_t>(k));
    std::vector<std::size_t> count(static_cast<std::size_t>(k));
    for (int it = 0; it < options.max_iterations; ++it) {
        res.objective.push_back(kernels::parallel::assign_to_centers(points, res.centers, res.labels));
        res.iterations = it + 1;

        std::fill(sx.begin(), sx.end(), 0.0);
        std::fill(sy.begin(), sy.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(res.labels[i]);
            sx[c] += points[i].x;
            sy[c] += points[i].y;
            ++count[c];
        }
        std::vector<Point2> next(res.centers.size());
        std::vector<std::uint8_t> taken(points.size(), 0);
        for (std::size_t c = 0; c < next.size(); ++c) {
            if (count[c] > 0) {
                next[c] = {sx[c] / static_cast<double>(count[c]), sy[c] / static_cast<double>(count[c])};
                continue;
            }
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (taken[i]) continue;
                const double d = dist2(points[i], res.centers[static_cast<std::size_t>(res.labels[i])]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            taken[far] = 1;
            next[c] = points[far];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < next.size(); ++c) shift = std::max(shift, std::sqrt(dist2(next[c], res.centers[c])));
        res.centers = std::move(next);
        if (shift < options.tolerance) break;
    }
    kernels::parallel::assign_to_centers(points, res.centers, res.labels);
    return res;
}

// --- assignment -----------------------------------------------------------------

namespace {

/// Rectangular Hungarian method; rows <= cols. Returns the column for each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const int m = n ? static_cast<int>(cost[0].size()) : 0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace

std::vector<int> assign_robots(std::span<const Point2> positions, std::span<const Point2> centers) {
    std::vector<int> out(positions.size(), -1);
    if (positions.empty() || centers.empty()) return out;
    const bool robots_are_rows = positions.size() <= centers.size();
    const auto& rows = robots_are_rows ? positions : centers;
    const auto& cols = robots_are_rows ? centers : positions;
    std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) cost[i][j] = std::sqrt(dist2(rows[i], cols[j]));
    }
    const auto match = hungarian(cost);
    for (std::size_t i = 0; i < match.size(); ++i) {
        if (robots_are_rows) {
            out[i] = match[i];
        } else if (match[i] >= 0) {
            out[static_cast<std::size_t>(match[i])] = static_cast<int>(i);
        }
    }
    return out;
}

double assignment_cost(std::span<const Point2> positions, std::span<const Point2> centers,
                       std::span<const int> assignment) {
    double total = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] >= 0) total += std::sqrt(dist2(positions[i], centers[static_cast<std::size_t>(assignment[i])]));
    }
    return total;
}

// --- policies -------------------------------------------------------------------

const char* to_string(Policy policy) {
    switch (policy) {
        case Policy::lawnmower: return "lawnmower";
        case Policy::kmeans_u: return "kmeans_u";
        case Policy::kmeans_r: return "kmeans_r";
        case Policy::kmeans_u2: return "kmeans_u2";
    }
    return "?";
}

Policy parse_policy(std::string_view name) {
    for (Policy p : {Policy::lawnmower, Policy::kmeans_u, Policy::kmeans_r, Policy::kmeans_u2}) {
        if (name == to_string(p)) return p;
    }
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

namespace {

Point2 to_point(Cell c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }

std::vector<Point2> to_points(std::span<const Cell> cells) {
    std::vector<Point2> out;
    out.reserve(cells.size());
    for (Cell c : cells) out.push_back(to_point(c));
    return out;
}

Cell move_toward(Cell from, Point2 target, int step_len, int width, int height) {
    const double dx = target.x - from.x;
    const double dy = target.y - from.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    Point2 to = target;
    if (d > step_len) to = {from.x + dx * step_len / d, from.y + dy * step_len / d};
    return {std::clamp(static_cast<int>(std::lround(to.x)), 0, width - 1),
            std::clamp(static_cast<int>(std::lround(to.y)), 0, height - 1)};
}

std::vector<int> sweep_positions(int lo, int hi, int footprint) {
    // Centers c whose windows [c - f/2, c - f/2 + f) tile [lo, hi).
    const int half = footprint / 2;
    std::vector<int> out;
    if (hi - lo <= footprint) {
        out.push_back(std::clamp(lo + half, lo, hi - 1));
        return out;
    }
    for (int c = lo + half;; c += footprint) {
        const int clamped = std::min(c, hi - footprint + half);
        out.push_back(clamped);
        if (clamped - half + footprint >= hi) break;
    }
    return out;
}

}  // namespace

std::vector<std::vector<Cell>> lawnmower_routes(int width, int height, int n_robots, int footprint) {
    const int strip = (width + n_robots - 1) / n_robots;
    const auto rows = sweep_positions(0, height, footprint);
    std::vector<std::vector<Cell>> routes(static_cast<std::size_t>(n_robots));
    for (int i = 0; i < n_robots; ++i) {
        const int x0 = i * strip;
        const int x1 = std::min(width, x0 + strip);
        if (x0 >= width) continue;
        const auto cols = sweep_positions(x0, x1, footprint);
        auto& route = routes[static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r % 2 == 0) {
                for (int x : cols) route.push_back({x, rows[r]});
            } else {
                for (auto it = cols.rbegin(); it != cols.rend(); ++it) route.push_back({*it, rows[r]});
            }
        }
    }
    return routes;
}

ExplorationState start_mission(Policy policy, const World& world, std::uint64_t seed) {
    ExplorationState s;
    s.policy = policy;
    s.seed = seed;
    s.belief = initial_belief(world);
    const int w = world.truth.width();
    const int h = world.truth.height();
    if (policy == Policy::lawnmower) {
        s.routes = lawnmower_routes(w, h, world.n_robots, world.footprint);
        s.next_waypoint.assign(s.routes.size(), 0);
        for (const auto& route : s.routes) s.belief.robots.push_back(route.empty() ? Cell{w - 1, 0} : route.front());
        for (std::size_t i = 0; i < s.routes.size(); ++i) {
            if (!s.routes[i].empty()) s.next_waypoint[i] = 1;
        }
    } else {
        std::vector<Cell> free_cells;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (world.truth.at(x, y) == labels::kFree) free_cells.push_back({x, y});
            }
        }
        if (free_cells.empty()) throw std::invalid_argument("start_mission: map has no free cell");
        Rng rng(derive_seed(seed, "placement"));
        for (int i = 0; i < world.n_robots; ++i) s.belief.robots.push_back(free_cells[rng.below(free_cells.size())]);
    }
    for (Cell r : s.belief.robots) observe(world, s.belief, r);
    return s;
}

namespace {

void finish(ExplorationState& s, std::string reason) {
    s.done = true;
    s.stop_reason = std::move(reason);
}

void step_lawnmower(ExplorationState& s, const World& world, const ExploreOptions& options) {
    bool all_done = true;
    for (std::size_t i = 0; i < s.routes.size(); ++i) {
        const auto& route = s.routes[i];
        if (s.next_waypoint[i] >= route.size()) continue;
        const Cell target = route[s.next_waypoint[i]];
        Cell& robot = s.belief.robots[i];
        robot = move_toward(robot, to_point(target), options.step_len, world.truth.width(), world.truth.height());
        observe(world, s.belief, robot);
        if (robot == target) ++s.next_waypoint[i];
        if (s.next_waypoint[i] < route.size()) all_done = false;
    }
    if (all_done) finish(s, "sweep_complete");
}

std::vector<Point2> clustering_candidates(ExplorationState& s, const World& world, const Predictor& endpoint,
                                          const ExploreOptions& options) {
    std::vector<Point2> points;
    const int w = world.truth.width();
    const int h = world.truth.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!s.belief.observed.at(x, y)) points.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    }
    if (s.policy != Policy::kmeans_u2 || points.empty()) return points;
    const PatchMask mask = footprint_mask(s.belief.observed, options.patch_size);
    if (mask.visible_count() == 0) return points;
    const auto boot = bootstrap_uncertainty(endpoint, s.belief.fused_rgb, mask, options.bootstrap,
                                            derive_seed(s.seed, "noise", static_cast<std::uint64_t>(s.step)),
                                            &s.belief.observed);
    // Uncertain cells join the unexplored ones a second time, weighting them.
    for (Cell c : uncertain_cells(boot.field, options.bootstrap.tau)) points.push_back(to_point(c));
    return points;
}

std::optional<ClusterPlan> step_kmeans(ExplorationState& s, const World& world, const Predictor& endpoint,
                                       const ExploreOptions& options) {
    const int w = world.truth.width();
    const int h = world.truth.height();
    auto robot_points = to_points(s.belief.robots);

    if (s.reconnaissance) {
        const Point2 center{static_cast<double>(w / 2), static_cast<double>(h / 2)};
        bool arrived = true;
        for (Cell& r : s.belief.robots) {
            r = move_toward(r, center, options.step_len, w, h);
            observe(world, s.belief, r);
            if (to_point(r) != center) arrived = false;
        }
        s.last_plan.reset();
        if (arrived) finish(s, "recon_complete");
        return std::nullopt;
    }

    const auto points = clustering_candidates(s, world, endpoint, options);
    if (points.empty()) {
        finish(s, "covered");
        return std::nullopt;
    }
    const auto km = kmeans(points, world.n_robots,
                           derive_seed(s.seed, "kmeans-init", static_cast<std::uint64_t>(s.step)));
    ClusterPlan plan{km.centers, assign_robots(robot_points, km.centers)};

    bool stable = !s.previous_centers.empty() && s.previous_centers.size() == plan.centers.size();
    if (stable) {
        const auto match = assign_robots(s.previous_centers, plan.centers);
        for (std::size_t i = 0; i < match.size() && stable; ++i) {
            if (match[i] < 0 || std::sqrt(dist2(s.previous_centers[i], plan.centers[static_cast<std::size_t>(match[i])])) >=
                                    options.stable_shift) {
                stable = false;
            }
        }
        // Centers can drift slowly while robots are still en route; stability
        // is only meaningful once every robot sits on its center.
        for (std::size_t i = 0; i < plan.assignment.size() && stable; ++i) {
            const int c = plan.assignment[i];
            if (c >= 0 && std::sqrt(dist2(robot_points[i], plan.centers[static_cast<std::size_t>(c)])) > options.step_len) {
                stable = false;
            }
        }
    }
    s.stable_count = stable ? s.stable_count + 1 : 0;
    s.previous_centers = plan.centers;
    s.last_plan = plan;

    if (s.stable_count >= options.stable_steps) {
        if (s.policy == Policy::kmeans_r) {
            s.reconnaissance = true;
            return step_kmeans(s, world, endpoint, options);
        }
        finish(s, "stabilized");
        return plan;
    }

    for (std::size_t i = 0; i < s.belief.robots.size(); ++i) {
        const int c = plan.assignment[i];
        if (c < 0) continue;
        Cell& r = s.belief.robots[i];
        r = move_toward(r, plan.centers[static_cast<std::size_t>(c)], options.step_len, w, h);
        observe(world, s.belief, r);
    }
    return plan;
}

}  // namespace

std::optional<ClusterPlan> step_policy(ExplorationState& state, const World& world, const Predictor& endpoint,
                                       const ExploreOptions& options) {
    if (state.done) return std::nullopt;
    ++state.step;
    if (state.policy == Policy::lawnmower) {
        step_lawnmower(state, world, options);
        return std::nullopt;
    }
    return step_kmeans(state, world, endpoint, options);
}

double belief_accuracy(const World& world, const BeliefState& belief, const Predictor& endpoint, std::uint64_t seed,
                       int patch_size) {
    PredictRequest req{belief.fused_rgb, footprint_mask(belief.observed, patch_size), 0.0, seed};
    if (req.mask.visible_count() == 0) {
        // Nothing patch-aligned to show the predictor yet; score the belief as is.
        const SemanticGrid raw = rgb_to_grid(belief.fused_rgb, world.truth.colormap());
        return metrics::label_accuracy(raw, world.truth);
    }
    const SemanticGrid pred = predict_to_grid(endpoint, req, world.truth.colormap(), belief.observed);
    return metrics::label_accuracy(pred, world.truth);
}

MissionLog run_mission(Policy policy, const World& world, const Predictor& endpoint, const ExploreOptions& options,
                       std::uint64_t seed) {
    MissionLog log;
    log.policy = policy;
    log.seed = seed;
    ExplorationState state = start_mission(policy, world, seed);

    auto record = [&](const std::optional<ClusterPlan>& plan) {
        MissionRow row;
        row.step = state.step;
        row.coverage = state.belief.coverage();
        row.accuracy = belief_accuracy(world, state.belief, endpoint,
                                       derive_seed(seed, "predict", static_cast<std::uint64_t>(state.step)),
                                       options.patch_size);
        row.robots = state.belief.robots;
        if (plan) row.centers = plan->centers;
        if (!log.coverage_at_target && row.accuracy >= options.accuracy_target) {
            log.coverage_at_target = row.coverage;
            log.step_at_target = row.step;
        }
        log.rows.push_back(std::move(row));
    };

    record(std::nullopt);
    while (!state.done && state.step < options.step_cap) record(step_policy(state, world, endpoint, options));
    if (!state.done) finish(state, "step_cap");
    log.stop_reason = state.stop_reason;
    log.rows.back().stop_reason = state.stop_reason;
    return log;
}

void write_mission_csv(std::ostream& out, const MissionLog& log) {
    out << "step,coverage,accuracy,robots,centers,stop_reason\n";
    for (const auto& row : log.rows) {
        out << row.step << ',' << fixed(row.coverage) << ',' << fixed(row.accuracy) << ',';
        for (std::size_t i = 0; i < row.robots.size(); ++i) {
            out << (i ? ";" : "") << row.robots[i].x << ':' << row.robots[i].y;
        }
        out << ',';
        for (std::size_t i = 0; i < row.centers.size(); ++i) {
            out << (i ? ";" : "") << fixed(row.centers[i].x, 3) << ':' << fixed(row.centers[i].y, 3);
        }
        out << ',' << row.stop_reason << '\n';
    }
}

nlohmann::json mission_summary(const MissionLog& log) {
    nlohmann::json j;
    j["policy"] = to_string(log.policy);
    j["seed"] = log.seed;
    j["coverage_at_95"] = log.coverage_at_target ? nlohmann::json(std::stod(fixed(*log.coverage_at_target))) : nlohmann::json();
    j["step_at_95"] = log.step_at_target ? nlohmann::json(*log.step_at_target) : nlohmann::json();
    j["steps"] = log.steps();
    j["final_accuracy"] = std::stod(fixed(log.final_accuracy()));
    j["final_coverage"] = std::stod(fixed(log.final_coverage()));
    j["stop_reason"] = log.stop_reason;
    return j;
}

}  // namespace mapsight
