// Acceptance runner. Prints one PASS/FAIL line per criterion; the exit code
// is the number of failed criteria. `--only <name>` runs a single criterion
// and `--list` prints the names.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "mapsight/config.hpp"
#include "mapsight/exploration.hpp"
#include "mapsight/gridmap.hpp"
#include "mapsight/harness.hpp"
#include "mapsight/metrics.hpp"
#include "mapsight/navigation.hpp"
#include "mapsight/predictor.hpp"
#include "mapsight/uncertainty.hpp"
#include "mapsight/worldgen.hpp"
#include "support.hpp"

namespace {

using namespace mapsight;
namespace fs = std::filesystem;

struct Verdict {
    bool pass = true;
    std::string detail;
};

/// Collects the first few failures of a criterion without stopping it.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (failures_++ < 3) detail_ += (detail_.empty() ? "" : "; ") + what;
    }
    void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
    [[nodiscard]] Verdict verdict() const {
        if (failures_ == 0) return {true, notes_};
        return {false, std::to_string(failures_) + " failure(s): " + detail_ + (notes_.empty() ? "" : " | " + notes_)};
    }

private:
    int failures_ = 0;
    std::string detail_;
    std::string notes_;
};

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// --- metrics -----------------------------------------------------------------

Verdict metric_correctness() {
    Check c;
    Rng rng(101);
    const Colormap cmap = Colormap::exploration();
    for (int i = 0; i < 1000; ++i) {
        const RgbImage a = testing::random_image(rng, 32, 32);
        const SemanticGrid g = testing::random_grid(rng, 32, 32, cmap);
        c.expect(std::abs(metrics::ssim(a, a) - 1.0) < 1e-12, "ssim(a,a) != 1 at image " + std::to_string(i));
        c.expect(metrics::mse(a, a) == 0.0, "mse(a,a) != 0 at image " + std::to_string(i));
        c.expect(metrics::miou(g, g) == 1.0, "miou(a,a) != 1 at grid " + std::to_string(i));
    }
    const RgbImage base = testing::random_image(rng, 64, 64);
    double worst = 0.0;
    for (double sigma : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        const RgbImage noisy = perturb(base, sigma, static_cast<std::uint64_t>(sigma * 10));
        const double m = metrics::mse(noisy, base);
        if (m == 0.0) continue;
        worst = std::max(worst, std::abs(metrics::psnr(noisy, base) - 10.0 * std::log10(255.0 * 255.0 / m)));
    }
    c.expect(worst < 1e-9, "psnr/mse inconsistency " + std::to_string(worst));
    const Colormap bin = Colormap::binary();
    const SemanticGrid t(2, 2, bin, std::vector<Label>{0, 0, 1, 1});
    c.expect(metrics::miou(SemanticGrid(2, 2, bin, std::vector<Label>{0, 0, 0, 0}), t) == 0.25, "2x2 case A");
    c.expect(metrics::miou(SemanticGrid(2, 2, bin, std::vector<Label>{0, 1, 0, 1}), t) == 1.0 / 3.0, "2x2 case B");
    c.expect(metrics::miou(SemanticGrid(2, 2, cmap, std::vector<Label>{0, 0, 0, 1}),
                           SemanticGrid(2, 2, cmap, std::vector<Label>{0, 0, 1, 1})) == (2.0 / 3.0 + 0.5) / 2.0,
             "2x2 case C");
    c.note("max psnr deviation " + std::to_string(worst));
    return c.verdict();
}

// --- geometry ------------------------------------------------------------------

Verdict geometry() {
    Check c;
    const double want[3] = {1.1667, 1.40, 1.75};
    std::string got;
    for (int k = 1; k <= 3; ++k) {
        const double e = expansion_factor(224, k);
        c.expect(std::abs(e - want[k - 1]) <= 1e-4, "k=" + std::to_string(k) + " gives " + num(e, 6));
        got += (k > 1 ? "/" : "") + num(e, 4);
    }
    c.note("expansion " + got);
    return c.verdict();
}

// --- predictor contract ---------------------------------------------------------------

bool visible_matches(const RgbImage& got, const RgbImage& want, const PatchMask& mask) {
    for (int y = 0; y < want.height(); ++y) {
        for (int x = 0; x < want.width(); ++x) {
            if (mask.pixel_visible(x, y) && got.at(x, y) != want.at(x, y)) return false;
        }
    }
    return true;
}

Verdict predictor_contract() {
    Check c;
    Rng rng(202);
    const Colormap cmap = Colormap::exploration();
    for (int i = 0; i < 500; ++i) {
        const SemanticGrid truth = testing::random_grid(rng, 224, 224, cmap);
        const RgbImage truth_rgb = grid_to_rgb(truth);
        // The visible content comes from a different image than the oracle's
        // truth, so passthrough cannot succeed by accident.
        const RgbImage input = testing::random_image(rng, 224, 224);
        const PatchMask mask = testing::random_mask(rng, 14);
        const PredictRequest req{blank_masked(input, mask, kUnobservedColor), mask, 0.0, rng.next_u64()};
        const OraclePredictor oracle(truth_rgb);
        const NearestFillPredictor nearest;
        const NoisyOraclePredictor noisy(truth, 0.3);
        for (const Predictor* p : std::initializer_list<const Predictor*>{&oracle, &nearest, &noisy}) {
            c.expect(visible_matches(predict(*p, req), input, mask), p->kind() + " pair " + std::to_string(i));
        }
        c.expect(rgb_to_grid(grid_to_rgb(truth), cmap) == truth, "grid round trip " + std::to_string(i));
    }
    c.note("500 pairs x 3 mocks, 500 grids");
    return c.verdict();
}

// --- uncertainty ---------------------------------------------------------------

Verdict uncertainty() {
    Check c;
    Rng rng(303);
    const RoomSpec spec;
    for (int i = 0; i < 5; ++i) {
        const SemanticGrid truth = generate_room(spec, 900 + i);
        const RgbImage rgb = grid_to_rgb(truth);
        const PatchMask mask = testing::random_mask(rng, 14);
        const auto res = bootstrap_uncertainty(OraclePredictor(rgb), blank_masked(rgb, mask, kUnobservedColor), mask,
                                               {}, rng.next_u64());
        c.expect(std::all_of(res.field.variance.begin(), res.field.variance.end(), [](double v) { return v == 0.0; }),
                 "oracle variance not zero in room " + std::to_string(i));
    }

    const SemanticGrid truth = generate_room(spec, 42);
    const RgbImage rgb = grid_to_rgb(truth);
    const PatchMask mask = periphery_mask(14, 3);
    const NoisyOraclePredictor flip(truth, 0.5);
    const auto res = bootstrap_uncertainty(flip, blank_masked(rgb, mask, kUnobservedColor), mask, {64, 2.0, 25.0}, 7);
    double sum = 0.0;
    std::size_t cells = 0;
    for (int y = 0; y < 224; ++y) {
        for (int x = 0; x < 224; ++x) {
            if (!mask.pixel_visible(x, y)) {
                sum += res.field.at(x, y);
                ++cells;
            }
        }
    }
    const double mean = sum / static_cast<double>(cells);
    const double want = 2.0 * 127.5 * 127.5;
    c.expect(std::abs(mean - want) <= 0.05 * want, "flip variance " + num(mean, 1) + " vs " + num(want, 1));
    c.note("flip variance " + num(mean, 1) + " (target " + num(want, 1) + ")");

    for (int trial = 0; trial < 200; ++trial) {
        UncertaintyField f{16, 16, std::vector<double>(256), 8, 2.0, 25.0};
        for (auto& v : f.variance) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform() * 1000.0;
        const double t1 = rng.uniform() * 1000.0;
        const double t2 = t1 + rng.uniform() * 500.0;
        const auto a = uncertain_cells(f, t1);
        const auto b = uncertain_cells(f, t2);
        c.expect(b.size() <= a.size() && std::includes(a.begin(), a.end(), b.begin(), b.end()),
                 "tau monotonicity trial " + std::to_string(trial));
    }
    return c.verdict();
}

// --- exploration -----------------------------------------------------------------

Verdict exploration() {
    Check c;
    ExperimentConfig cfg;
    int complete = 0;
    for (int r = 0; r < 100; ++r) {
        const World w = make_world(suite_room(cfg, r));
        const auto log = run_mission(Policy::lawnmower, w, NearestFillPredictor{}, {}, r);
        c.expect(log.final_coverage() == 1.0, "lawnmower room " + std::to_string(r) + " coverage " +
                                                   num(log.final_coverage()));
        complete += log.final_coverage() == 1.0;
    }
    c.note("lawnmower full coverage " + std::to_string(complete) + "/100");

    Rng rng(404);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int m = 1 + static_cast<int>(rng.below(4));
        std::vector<Point2> robots(static_cast<std::size_t>(n)), centers(static_cast<std::size_t>(m));
        for (auto& p : robots) p = {rng.uniform() * 224, rng.uniform() * 224};
        for (auto& p : centers) p = {rng.uniform() * 224, rng.uniform() * 224};
        const auto got = assign_robots(robots, centers);
        std::vector<int> slots(static_cast<std::size_t>(std::max(n, m)));
        std::iota(slots.begin(), slots.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            std::vector<int> cand(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) cand[static_cast<std::size_t>(i)] = slots[static_cast<std::size_t>(i)] < m ? slots[static_cast<std::size_t>(i)] : -1;
            best = std::min(best, assignment_cost(robots, centers, cand));
        } while (std::next_permutation(slots.begin(), slots.end()));
        c.expect(std::abs(assignment_cost(robots, centers, got) - best) < 1e-9, "assignment trial " + std::to_string(trial));
    }

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Point2> pts(200 + rng.below(800));
        for (auto& p : pts) p = {static_cast<double>(rng.below(224)), static_cast<double>(rng.below(224))};
        const auto km = kmeans(pts, 1 + static_cast<int>(rng.below(6)), rng.next_u64());
        for (std::size_t i = 1; i < km.objective.size(); ++i) {
            c.expect(km.objective[i] <= km.objective[i - 1] + 1e-9 * km.objective[i - 1],
                     "kmeans objective rose in trial " + std::to_string(trial));
        }
    }

    for (int r = 0; r < 3; ++r) {
        const World w = make_world(suite_room(cfg, r));
        const OraclePredictor oracle(w.truth_rgb);
        std::ostringstream u, u2;
        write_mission_csv(u, run_mission(Policy::kmeans_u, w, oracle, {}, 77 + r));
        write_mission_csv(u2, run_mission(Policy::kmeans_u2, w, oracle, {}, 77 + r));
        c.expect(u.str() == u2.str(), "kmeans_u2 log differs from kmeans_u in room " + std::to_string(r));
    }
    return c.verdict();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mapsight_accept_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

Verdict exploration_trend() {
    ExperimentConfig cfg;
    cfg.task = "explore";
    cfg.output_dir = scratch("trend").string();
    cfg.predictor = parse_predictor_flag("mock:nearest");
    cfg.explore.rooms = 20;
    cfg.explore.repeats = 5;
    cfg.explore.policies = {"lawnmower", "kmeans_u2"};
    cfg.explore.run_logs = false;
    const auto s = run_explore(cfg);
    fs::remove_all(cfg.output_dir);
    const auto& lm = s["policies"]["lawnmower"];
    const auto& u2 = s["policies"]["kmeans_u2"];
    const double m_lm = lm["median_coverage_at_target"].get<double>();
    const double m_u2 = u2["median_coverage_at_target"].get<double>();
    std::string detail = "median coverage at 95% accuracy: kmeans_u2 " + num(m_u2) + " (unreached " +
                         std::to_string(u2["unreached"].get<int>()) + "/100) vs lawnmower " + num(m_lm) +
                         " (unreached " + std::to_string(lm["unreached"].get<int>()) + "/100)";
    const bool ok = m_u2 < m_lm && lm["failed"] == 0 && u2["failed"] == 0;
    return {ok, detail};
}

// --- navigation -----------------------------------------------------------------

std::optional<double> dijkstra(const Costmap& cm, Cell s, Cell t) {
    if (!cm.free(t.x, t.y)) return std::nullopt;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(cm.traversable.size(), inf);
    using E = std::pair<double, int>;
    std::priority_queue<E, std::vector<E>, std::greater<>> pq;
    d[static_cast<std::size_t>(s.y * cm.width + s.x)] = 0;
    pq.push({0, s.y * cm.width + s.x});
    while (!pq.empty()) {
        const auto [dist, i] = pq.top();
        pq.pop();
        if (dist > d[static_cast<std::size_t>(i)]) continue;
        const int x = i % cm.width, y = i / cm.width;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if ((!dx && !dy) || !cm.in_bounds(nx, ny) || !cm.free(nx, ny)) continue;
                if (dx && dy && (!cm.free(nx, y) || !cm.free(x, ny))) continue;
                const double nd = dist + (dx && dy ? std::sqrt(2.0) : 1.0);
                auto& slot = d[static_cast<std::size_t>(ny * cm.width + nx)];
                if (nd < slot) {
                    slot = nd;
                    pq.push({nd, ny * cm.width + nx});
                }
            }
        }
    }
    const double r = d[static_cast<std::size_t>(t.y * cm.width + t.x)];
    if (r == inf) return std::nullopt;
    return r;
}

Verdict navigation() {
    Check c;
    Rng rng(505);
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = 1 + static_cast<int>(rng.below(32));
        const int h = 1 + static_cast<int>(rng.below(32));
        Costmap cm{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
        const double density = rng.uniform() * 0.45;
        for (auto& v : cm.traversable) v = rng.bernoulli(density) ? 0 : 1;
        const Cell s{static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h))};
        const Cell t{static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h))};
        cm.traversable[static_cast<std::size_t>(s.y * w + s.x)] = 1;
        const auto got = astar(cm, s, t);
        const auto want = dijkstra(cm, s, t);
        c.expect(got.has_value() == want.has_value() && (!got || std::abs(got->cost - *want) < 1e-9),
                 "astar differs from dijkstra on grid " + std::to_string(trial));
    }

    ExperimentConfig cfg;
    cfg.task = "navigate";
    cfg.output_dir = scratch("nav").string();
    cfg.predictor = parse_predictor_flag("mock:oracle");
    const auto s = run_navigate(cfg);
    fs::remove_all(cfg.output_dir);
    const double ratio = s["ratio"].get<double>();
    c.expect(s["paired"] == 20, "only " + s["paired"].dump() + " of 20 episodes paired");
    c.expect(s["predictive_never_worse"].get<bool>(), "a predictive episode took more steps than its baseline");
    c.expect(1.0 - ratio >= 0.20, "mean reduction " + num(100 * (1.0 - ratio), 1) + "% < 20%");
    c.note("mean steps predictive " + s["mean_steps_predictive"].dump() + " vs baseline " +
           s["mean_steps_baseline"].dump() + ", reduction " + num(100 * (1.0 - ratio), 1) + "%");
    return c.verdict();
}

// --- determinism -----------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        out[fs::relative(e.path(), root).string()] = s.str();
    }
    return out;
}

Verdict determinism() {
    Check c;
    ExperimentConfig base;
    base.seed = 2024;
    base.gen_maps.count = 4;
    base.fov.synthetic_count = 4;
    base.explore.rooms = 2;
    base.explore.repeats = 2;
    base.explore.step_cap = 40;
    base.navigate.rooms = 4;
    base.navigate.dump_paths = true;
    std::size_t files = 0;
    for (const std::string task : {"gen-maps", "fov", "explore", "navigate"}) {
        for (const std::string pred : {"mock:nearest", "mock:noisy:0.2"}) {
            std::map<std::string, std::string> first;
            for (int run = 0; run < 2; ++run) {
                ExperimentConfig cfg = base;
                cfg.task = task;
                cfg.predictor = parse_predictor_flag(pred);
                cfg.workers = run == 0 ? 1 : 4;
                cfg.output_dir = scratch(task + std::to_string(run)).string();
                if (task == "gen-maps") (void)run_gen_maps(cfg);
                else if (task == "fov") (void)run_fov(cfg);
                else if (task == "explore") (void)run_explore(cfg);
                else (void)run_navigate(cfg);
                auto snap = snapshot(cfg.output_dir);
                fs::remove_all(cfg.output_dir);
                if (run == 0) {
                    first = std::move(snap);
                    files += first.size();
                } else {
                    c.expect(!first.empty() && snap == first, task + " with " + pred + " differs between runs");
                }
            }
            if (task == "gen-maps") break;
        }
    }
    c.note(std::to_string(files) + " files compared across reruns");
    return c.verdict();
}

struct Criterion {
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {"metrics", 10.0, metric_correctness},
        {"geometry", 1.0, geometry},
        {"predictor_contract", 30.0, predictor_contract},
        {"uncertainty", 60.0, uncertainty},
        {"exploration", 120.0, exploration},
        {"exploration_trend", 600.0, exploration_trend},
        {"navigation", 300.0, navigation},
        {"determinism", 300.0, determinism},
    };
    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--list") {
            for (const auto& c : criteria) std::printf("%s\n", c.name);
            return 0;
        }
        if (a == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::fprintf(stderr, "usage: %s [--list] [--only <criterion>]\n", argv[0]);
            return 2;
        }
    }
    int failed = 0;
    int ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && only != c.name) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            v.pass = false;
            v.detail += (v.detail.empty() ? "" : "; ") + std::string("over runtime budget");
        }
        failed += v.pass ? 0 : 1;
        std::printf("%s %s: %s [%.2f s, budget %.0f s]\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs,
                    c.budget_s);
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    return failed;
}
