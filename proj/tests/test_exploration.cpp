#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "mapsight/exploration.hpp"
#include "mapsight/worldgen.hpp"
#include "support.hpp"

namespace mapsight {
namespace {

World room_world(std::uint64_t seed, int n_robots = 3) {
    return make_world(generate_room(RoomSpec{}, seed), 48, n_robots);
}

TEST(Observe, CornerFootprintIsClipped) {
    const World w = make_world(SemanticGrid(224, 224, Colormap::exploration()));
    BeliefState b = initial_belief(w);
    EXPECT_EQ(observe(w, b, {0, 0}), 576u);
    EXPECT_EQ(observe(w, b, {0, 0}), 0u);
    EXPECT_EQ(observe(w, b, {100, 100}), 48u * 48u);
    EXPECT_TRUE(b.observed.at(23, 23));
    EXPECT_FALSE(b.observed.at(24, 0));
    EXPECT_EQ(b.fused_rgb.at(5, 5), (Rgb{0, 255, 0}));
    EXPECT_EQ(b.fused_rgb.at(50, 5), kUnobservedColor);
    EXPECT_THROW((void)observe(w, b, {224, 0}), std::invalid_argument);
}

TEST(World, RejectsBadGeometry) {
    EXPECT_THROW((void)make_world(SemanticGrid(32, 32, Colormap::exploration()), 48), std::invalid_argument);
    EXPECT_THROW((void)make_world(SemanticGrid(64, 64, Colormap::binary()), 16), std::invalid_argument);
    EXPECT_THROW((void)make_world(SemanticGrid(64, 64, Colormap::exploration()), 16, 0), std::invalid_argument);
}

TEST(KMeans, SeparatedBlobsAreRecovered) {
    Rng rng(5);
    std::vector<Point2> pts;
    const Point2 truth[3] = {{20, 20}, {150, 40}, {80, 180}};
    for (const Point2 c : truth) {
        for (int i = 0; i < 200; ++i) pts.push_back({c.x + rng.normal() * 3, c.y + rng.normal() * 3});
    }
    // Lloyd iterations only find a local optimum, so keep the best of a few starts.
    KMeansResult res = kmeans(pts, 3, 0);
    for (std::uint64_t seed = 1; seed < 10; ++seed) {
        KMeansResult other = kmeans(pts, 3, seed);
        if (other.objective.back() < res.objective.back()) res = std::move(other);
    }
    ASSERT_EQ(res.centers.size(), 3u);
    for (const Point2 c : truth) {
        double best = std::numeric_limits<double>::infinity();
        for (const Point2 m : res.centers) best = std::min(best, std::hypot(m.x - c.x, m.y - c.y));
        EXPECT_LT(best, 1.0);
    }
}

TEST(KMeans, ObjectiveNeverIncreases) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point2> pts(300);
        for (auto& p : pts) p = {rng.uniform() * 224, rng.uniform() * 224};
        const auto res = kmeans(pts, 1 + static_cast<int>(rng.below(5)), trial);
        for (std::size_t i = 1; i < res.objective.size(); ++i) {
            ASSERT_LE(res.objective[i], res.objective[i - 1] + 1e-9) << "trial " << trial;
        }
    }
}

TEST(KMeans, FewDistinctPointsGiveOneCenterEach) {
    const std::vector<Point2> pts = {{1, 1}, {1, 1}, {5, 5}};
    const auto res = kmeans(pts, 3, 0);
    EXPECT_EQ(res.centers.size(), 2u);
    EXPECT_EQ(res.objective.back(), 0.0);
    EXPECT_TRUE(kmeans({}, 3, 0).centers.empty());
    EXPECT_THROW((void)kmeans(pts, 0, 0), std::invalid_argument);
}

TEST(Assignment, MatchesExhaustiveSearch) {
    Rng rng(12);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int m = 1 + static_cast<int>(rng.below(4));
        std::vector<Point2> robots(n), centers(m);
        for (auto& p : robots) p = {rng.uniform() * 100, rng.uniform() * 100};
        for (auto& p : centers) p = {rng.uniform() * 100, rng.uniform() * 100};
        const auto got = assign_robots(robots, centers);
        ASSERT_EQ(got.size(), static_cast<std::size_t>(n));

        // Enumerate injective maps via permutations of center slots padded with -1.
        std::vector<int> slots(std::max(n, m));
        std::iota(slots.begin(), slots.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            std::vector<int> cand(n);
            for (int i = 0; i < n; ++i) cand[i] = slots[i] < m ? slots[i] : -1;
            best = std::min(best, assignment_cost(robots, centers, cand));
        } while (std::next_permutation(slots.begin(), slots.end()));
        ASSERT_NEAR(assignment_cost(robots, centers, got), best, 1e-9) << "trial " << trial;
        const int assigned = static_cast<int>(std::count_if(got.begin(), got.end(), [](int c) { return c >= 0; }));
        ASSERT_EQ(assigned, std::min(n, m));
    }
}

TEST(Assignment, CrossingIsAvoided) {
    const std::vector<Point2> robots = {{0, 0}, {0, 10}};
    const std::vector<Point2> centers = {{0, 10}, {0, 0}};
    EXPECT_EQ(assign_robots(robots, centers), (std::vector<int>{1, 0}));
}

TEST(Policies, NamesRoundTrip) {
    for (Policy p : {Policy::lawnmower, Policy::kmeans_u, Policy::kmeans_r, Policy::kmeans_u2}) {
        EXPECT_EQ(parse_policy(to_string(p)), p);
    }
    EXPECT_THROW((void)parse_policy("spiral"), std::invalid_argument);
}

TEST(Lawnmower, SweepCoversEveryCell) {
    for (int robots : {1, 2, 3, 5}) {
        const World w = room_world(3, robots);
        const OraclePredictor oracle(w.truth_rgb);
        const auto log = run_mission(Policy::lawnmower, w, oracle, {}, 1);
        EXPECT_EQ(log.stop_reason, "sweep_complete") << robots;
        EXPECT_DOUBLE_EQ(log.final_coverage(), 1.0) << robots;
    }
}

TEST(Lawnmower, RoutesStayInsideTheirStrips) {
    const auto routes = lawnmower_routes(224, 224, 3, 48);
    ASSERT_EQ(routes.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        for (const Cell c : routes[i]) {
            EXPECT_GE(c.x, i * 75);
            EXPECT_LT(c.x, std::min(224, (i + 1) * 75));
        }
    }
}

TEST(Missions, OracleIsPerfectFromTheFirstStep) {
    const World w = room_world(4);
    const OraclePredictor oracle(w.truth_rgb);
    for (Policy p : {Policy::lawnmower, Policy::kmeans_u}) {
        const auto log = run_mission(p, w, oracle, {}, 2);
        EXPECT_DOUBLE_EQ(log.rows.front().accuracy, 1.0);
        ASSERT_TRUE(log.step_at_target.has_value());
        EXPECT_EQ(*log.step_at_target, 0);
    }
}

TEST(Missions, UncertaintyTermVanishesUnderTheOracle) {
    const World w = room_world(6);
    const OraclePredictor oracle(w.truth_rgb);
    const auto u = run_mission(Policy::kmeans_u, w, oracle, {}, 9);
    const auto u2 = run_mission(Policy::kmeans_u2, w, oracle, {}, 9);
    std::ostringstream a, b;
    write_mission_csv(a, u);
    write_mission_csv(b, u2);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Missions, DeterministicAndCapped) {
    const World w = room_world(7);
    const NearestFillPredictor model;
    ExploreOptions opts;
    opts.step_cap = 5;
    for (Policy p : {Policy::kmeans_r, Policy::kmeans_u2}) {
        const auto a = run_mission(p, w, model, opts, 3);
        const auto b = run_mission(p, w, model, opts, 3);
        std::ostringstream sa, sb;
        write_mission_csv(sa, a);
        write_mission_csv(sb, b);
        EXPECT_EQ(sa.str(), sb.str());
        EXPECT_LE(a.steps(), 5);
        for (std::size_t i = 1; i < a.rows.size(); ++i) EXPECT_GE(a.rows[i].coverage, a.rows[i - 1].coverage);
    }
}

TEST(Missions, KMeansRobotsMoveAtMostOneStepLength) {
    const World w = room_world(8);
    const NearestFillPredictor model;
    ExploreOptions opts;
    ExplorationState s = start_mission(Policy::kmeans_u, w, 4);
    for (int i = 0; i < 30 && !s.done; ++i) {
        const auto before = s.belief.robots;
        (void)step_policy(s, w, model, opts);
        for (std::size_t r = 0; r < before.size(); ++r) {
            const double d = std::hypot(s.belief.robots[r].x - before[r].x, s.belief.robots[r].y - before[r].y);
            // Rounding to the pixel grid may add up to half a diagonal.
            ASSERT_LE(d, opts.step_len + std::sqrt(0.5) + 1e-9);
        }
    }
}

TEST(Missions, SummaryUsesNullWhenTargetMissed) {
    MissionLog log;
    log.rows.push_back({0, 0.1, 0.5, {}, {}, "step_cap"});
    log.stop_reason = "step_cap";
    const auto j = mission_summary(log);
    EXPECT_TRUE(j["coverage_at_95"].is_null());
    EXPECT_EQ(j["stop_reason"], "step_cap");
}

}  // namespace
}  // namespace mapsight
