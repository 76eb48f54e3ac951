#include "mapsight/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include <omp.h>

#include "mapsight/csv.hpp"
#include "mapsight/errors.hpp"
#include "mapsight/exploration.hpp"
#include "mapsight/image_io.hpp"
#include "mapsight/metrics.hpp"
#include "mapsight/navigation.hpp"
#include "mapsight/rng.hpp"
#include "mapsight/wire.hpp"
#include "mapsight/worldgen.hpp"

namespace mapsight {

namespace fs = std::filesystem;
using nlohmann::json;

// --- plumbing ----------------------------------------------------------------

std::shared_ptr<const Predictor> PredictorFactory::make(const RgbImage& truth_rgb, const SemanticGrid* labels) const {
    if (config_.kind == "oracle") return std::make_shared<OraclePredictor>(truth_rgb);
    if (config_.kind == "nearest") return std::make_shared<NearestFillPredictor>();
    if (config_.kind == "noisy") {
        if (labels == nullptr) throw std::invalid_argument("noisy oracle needs a label map for this item");
        return std::make_shared<NoisyOraclePredictor>(*labels, config_.flip_rate);
    }
    if (config_.kind == "wire") {
        std::lock_guard lock(mutex_);
        if (!wire_) {
            WirePredictor::Options opts;
            opts.timeout = std::chrono::milliseconds(config_.timeout_ms);
            opts.max_in_flight = config_.max_in_flight;
            wire_ = WirePredictor::connect(config_.addr, opts);
        }
        return wire_;
    }
    throw std::invalid_argument("unknown predictor kind '" + config_.kind + "'");
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    std::exception_ptr first;
    std::mutex m;
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
    for (int i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard lock(m);
            if (!first) first = std::current_exception();
        }
    }
    if (first) std::rethrow_exception(first);
}

SemanticGrid suite_room(const ExperimentConfig& cfg, int index) {
    return generate_room(cfg.worldgen, derive_seed(cfg.seed, "worldgen", static_cast<std::uint64_t>(index)));
}

namespace {

fs::path prepare_output(const ExperimentConfig& cfg) {
    const fs::path out(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string room_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "room_%03d", index);
    return buf;
}

std::string cell_text(Cell c) { return std::to_string(c.x) + ";" + std::to_string(c.y); }

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Rounded through the CSV formatter so JSON and CSV agree digit for digit.
json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(fixed(v));
}

std::string describe(const std::exception& e) {
    if (const auto* pe = dynamic_cast<const PredictorError*>(&e)) {
        return std::string("predictor ") + to_string(pe->kind()) + ": " + pe->what();
    }
    return e.what();
}

}  // namespace

// --- gen-maps ------------------------------------------------------------------

json run_gen_maps(const ExperimentConfig& cfg) {
    const fs::path out = prepare_output(cfg);
    for (const char* sub : {"rgb", "semantic", "binary"}) fs::create_directories(out / sub);
    io::save_colormap(out / "colormap.json", Colormap::exploration());

    const int n = cfg.gen_maps.count;
    std::vector<double> fractions(static_cast<std::size_t>(n));
    parallel_for(n, effective_workers(cfg), [&](int i) {
        const SemanticGrid room = suite_room(cfg, i);
        const std::string file = room_name(i) + ".png";
        const RgbImage colors = grid_to_rgb(room);
        io::write_png(out / "rgb" / file, colors);
        io::write_png(out / "semantic" / file, colors);
        io::write_png(out / "binary" / file, grid_to_rgb(to_binary(room)));
        fractions[static_cast<std::size_t>(i)] = obstacle_fraction(room);
    });

    json rooms = json::array();
    for (int i = 0; i < n; ++i) {
        rooms.push_back({{"name", room_name(i)}, {"obstacle_fraction", number(fractions[static_cast<std::size_t>(i)])}});
    }
    json summary = {{"task", "gen-maps"},
                    {"seed", cfg.seed},
                    {"count", n},
                    {"worldgen", to_json(cfg.worldgen)},
                    {"rooms", rooms}};
    write_json(out / "summary.json", summary);
    return summary;
}

// --- fov-eval -----------------------------------------------------------------

namespace {

struct FovUnit {
    std::size_t item = 0;
    std::string modality;
};

struct FovRow {
    std::string item;
    int k = 0;
    metrics::MetricRow row;
};

}  // namespace

json run_fov(const ExperimentConfig& cfg) {
    const fs::path out = prepare_output(cfg);
    const FovConfig& fc = cfg.fov;

    std::vector<DatasetItem> items;
    json dataset_issues = json::array();
    std::string dataset_name = "synthetic";
    bool synthetic = fc.dataset.empty();
    if (synthetic) {
        items.resize(static_cast<std::size_t>(fc.synthetic_count));
        parallel_for(fc.synthetic_count, effective_workers(cfg), [&](int i) {
            SemanticGrid room = suite_room(cfg, i);
            items[static_cast<std::size_t>(i)] = DatasetItem{room_name(i), grid_to_rgb(room), room, to_binary(room)};
        });
    } else {
        Dataset ds = ingest_dataset(fc.dataset, cfg.worldgen.side);
        dataset_name = fs::path(fc.dataset).filename().string();
        if (dataset_name.empty()) dataset_name = fs::path(fc.dataset).parent_path().filename().string();
        for (const auto& issue : ds.issues) dataset_issues.push_back({{"file", issue.file}, {"reason", issue.reason}});
        items = std::move(ds.items);
    }

    // The synthetic rgb view is the semantic rendering, so it is not repeated.
    std::vector<FovUnit> units;
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (const auto& m : fc.modalities) {
            const bool present = m == "rgb"        ? !synthetic
                                 : m == "semantic" ? items[i].semantic.has_value()
                                                   : items[i].binary.has_value();
            if (present) units.push_back({i, m});
        }
    }

    PredictorFactory factory(cfg.predictor);
    std::vector<std::vector<FovRow>> unit_rows(units.size());
    std::vector<std::vector<json>> unit_errors(units.size());
    const int side = cfg.worldgen.side;
    const int per_side = side / fc.patch_size;
    parallel_for(static_cast<int>(units.size()), effective_workers(cfg), [&](int u) {
        const FovUnit& unit = units[static_cast<std::size_t>(u)];
        const DatasetItem& item = items[unit.item];
        const SemanticGrid* labels = unit.modality == "semantic" ? &*item.semantic
                                     : unit.modality == "binary" ? &*item.binary
                                                                 : nullptr;
        const RgbImage truth = labels ? grid_to_rgb(*labels) : item.rgb;
        for (int k : fc.k) {
            try {
                if (truth.width() != side || truth.height() != side) {
                    throw std::invalid_argument("item is not " + std::to_string(side) + "x" + std::to_string(side));
                }
                const auto endpoint = factory.make(truth, labels);
                const PatchMask mask = periphery_mask(per_side, k, fc.patch_size);
                PredictRequest req{blank_masked(truth, mask, kUnobservedColor), mask, 0.0,
                                   derive_seed(cfg.seed, "noise", unit.item * 64 + static_cast<std::size_t>(k))};
                const RgbImage pred = predict(*endpoint, req);
                std::optional<SemanticGrid> pred_labels;
                if (labels) pred_labels = rgb_to_grid(pred, labels->colormap());
                const double expansion = expansion_factor(side, k, fc.patch_size);
                for (auto region : {metrics::Region::full_image, metrics::Region::masked_only}) {
                    metrics::MetricReport rep = metrics::evaluate(pred, truth, region, mask,
                                                                  pred_labels ? &*pred_labels : nullptr, labels);
                    unit_rows[static_cast<std::size_t>(u)].push_back(
                        {item.name, k, {dataset_name, unit.modality, expansion, rep}});
                }
            } catch (const std::exception& e) {
                unit_errors[static_cast<std::size_t>(u)].push_back(
                    {{"item", item.name}, {"modality", unit.modality}, {"k", k}, {"error", describe(e)}});
            }
        }
    });

    std::ostringstream per_item;
    per_item << "item,k,dataset,modality,expansion,region,ssim,psnr,mse,miou\n";
    json skipped = json::array();
    struct Acc {
        std::vector<double> ssim, psnr, mse, miou;
        double expansion = 1.0;
    };
    std::map<std::tuple<std::size_t, int, int>, Acc> groups;
    auto modality_rank = [&fc](const std::string& m) {
        return static_cast<std::size_t>(std::find(fc.modalities.begin(), fc.modalities.end(), m) - fc.modalities.begin());
    };
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (const auto& r : unit_rows[u]) {
            per_item << r.item << ',' << r.k << ',';
            metrics::write_csv_row(per_item, r.row);
            Acc& acc = groups[{modality_rank(r.row.modality), r.k, static_cast<int>(r.row.report.region)}];
            acc.expansion = r.row.expansion;
            acc.ssim.push_back(r.row.report.ssim);
            acc.psnr.push_back(r.row.report.psnr);
            acc.mse.push_back(r.row.report.mse);
            if (r.row.report.miou) acc.miou.push_back(*r.row.report.miou);
        }
        for (const auto& e : unit_errors[u]) skipped.push_back(e);
    }

    std::ostringstream grouped;
    metrics::write_csv_header(grouped);
    json means = json::array();
    for (const auto& [key, acc] : groups) {
        const auto& [rank, k, region] = key;
        metrics::MetricRow row{dataset_name, fc.modalities[rank], acc.expansion,
                               {static_cast<metrics::Region>(region), mean(acc.ssim), mean(acc.psnr), mean(acc.mse),
                                acc.miou.empty() ? std::nullopt : std::optional<double>(mean(acc.miou))}};
        metrics::write_csv_row(grouped, row);
        means.push_back({{"modality", row.modality},
                         {"k", k},
                         {"expansion", std::stod(fixed(row.expansion, 4))},
                         {"region", metrics::to_string(row.report.region)},
                         {"n", acc.ssim.size()},
                         {"ssim", number(row.report.ssim)},
                         {"psnr", number(row.report.psnr)},
                         {"mse", number(row.report.mse)},
                         {"miou", row.report.miou ? number(*row.report.miou) : json()}});
    }
    write_text(out / "metrics.csv", grouped.str());
    write_text(out / "items.csv", per_item.str());

    json summary = {{"task", "fov"},
                    {"seed", cfg.seed},
                    {"dataset", dataset_name},
                    {"predictor", predictor_flag(cfg.predictor)},
                    {"items", items.size()},
                    {"means", means},
                    {"skipped", skipped},
                    {"dataset_issues", dataset_issues}};
    write_json(out / "summary.json", summary);
    return summary;
}

// --- explore ----------------------------------------------------------------

json run_explore(const ExperimentConfig& cfg) {
    const fs::path out = prepare_output(cfg);
    const ExploreConfig& ec = cfg.explore;
    std::vector<Policy> policies;
    for (const auto& p : ec.policies) policies.push_back(parse_policy(p));
    if (ec.run_logs) fs::create_directories(out / "runs");

    ExploreOptions opts;
    opts.step_len = ec.step_len;
    opts.step_cap = ec.step_cap;
    opts.accuracy_target = ec.accuracy_target;
    opts.bootstrap.n_samples = ec.n_samples;
    opts.bootstrap.sigma = ec.sigma;
    opts.bootstrap.tau = ec.tau;

    const int workers = effective_workers(cfg);
    std::vector<std::optional<World>> worlds(static_cast<std::size_t>(ec.rooms));
    std::vector<std::string> world_errors(static_cast<std::size_t>(ec.rooms));
    parallel_for(ec.rooms, workers, [&](int r) {
        try {
            worlds[static_cast<std::size_t>(r)] = make_world(suite_room(cfg, r), ec.footprint, ec.n_robots);
        } catch (const std::exception& e) {
            world_errors[static_cast<std::size_t>(r)] = describe(e);
        }
    });

    PredictorFactory factory(cfg.predictor);
    const int per_room = ec.repeats * static_cast<int>(policies.size());
    const int total = ec.rooms * per_room;
    std::vector<std::optional<MissionLog>> logs(static_cast<std::size_t>(total));
    std::vector<std::string> errors(static_cast<std::size_t>(total));
    parallel_for(total, workers, [&](int idx) {
        const int room = idx / per_room;
        const int repeat = (idx % per_room) / static_cast<int>(policies.size());
        const Policy policy = policies[static_cast<std::size_t>(idx % static_cast<int>(policies.size()))];
        const auto slot = static_cast<std::size_t>(idx);
        try {
            const auto& world = worlds[static_cast<std::size_t>(room)];
            if (!world) throw std::runtime_error("world generation failed: " + world_errors[static_cast<std::size_t>(room)]);
            const auto endpoint = factory.make(world->truth_rgb, &world->truth);
            // Policies share the mission seed so arms are paired per (room, repeat).
            const std::uint64_t seed =
                derive_seed(cfg.seed, "mission", static_cast<std::uint64_t>(room) * 100003ULL + repeat);
            logs[slot] = run_mission(policy, *world, *endpoint, opts, seed);
            if (ec.run_logs) {
                std::ostringstream csv;
                write_mission_csv(csv, *logs[slot]);
                write_text(out / "runs" /
                               (std::string(to_string(policy)) + "_" + room_name(room) + "_rep" +
                                std::to_string(repeat) + ".csv"),
                           csv.str());
            }
        } catch (const std::exception& e) {
            errors[slot] = describe(e);
        }
    });

    std::ostringstream runs;
    runs << "room,repeat,policy,coverage_at_target,step_at_target,steps,final_coverage,final_accuracy,stop_reason\n";
    std::map<std::size_t, std::vector<double>> coverage_by_policy, steps_by_policy;
    std::map<std::size_t, int> unreached, failed;
    json error_list = json::array();
    for (int idx = 0; idx < total; ++idx) {
        const int room = idx / per_room;
        const int repeat = (idx % per_room) / static_cast<int>(policies.size());
        const auto pi = static_cast<std::size_t>(idx % static_cast<int>(policies.size()));
        const auto& log = logs[static_cast<std::size_t>(idx)];
        if (!log) {
            ++failed[pi];
            error_list.push_back({{"room", room},
                                  {"repeat", repeat},
                                  {"policy", to_string(policies[pi])},
                                  {"error", errors[static_cast<std::size_t>(idx)]}});
            continue;
        }
        runs << room_name(room) << ',' << repeat << ',' << to_string(policies[pi]) << ','
             << (log->coverage_at_target ? fixed(*log->coverage_at_target) : std::string{}) << ','
             << (log->step_at_target ? std::to_string(*log->step_at_target) : std::string{}) << ',' << log->steps()
             << ',' << fixed(log->final_coverage()) << ',' << fixed(log->final_accuracy()) << ',' << log->stop_reason
             << '\n';
        // A run that never reaches the target needed (at least) everything.
        coverage_by_policy[pi].push_back(log->coverage_at_target.value_or(1.0));
        if (log->step_at_target) steps_by_policy[pi].push_back(*log->step_at_target);
        if (!log->coverage_at_target) ++unreached[pi];
    }
    write_text(out / "runs.csv", runs.str());

    constexpr int kBins = 20;
    std::ostringstream hist;
    hist << "policy,bin_lo,bin_hi,count\n";
    json per_policy = json::object();
    for (std::size_t pi = 0; pi < policies.size(); ++pi) {
        std::vector<int> counts(kBins, 0);
        int reached = 0;
        for (std::size_t idx = pi; idx < logs.size(); idx += policies.size()) {
            if (!logs[idx] || !logs[idx]->coverage_at_target) continue;
            const int b = std::clamp(static_cast<int>(std::floor(*logs[idx]->coverage_at_target * kBins)), 0, kBins - 1);
            ++counts[static_cast<std::size_t>(b)];
            ++reached;
        }
        for (int b = 0; b < kBins; ++b) {
            hist << to_string(policies[pi]) << ',' << fixed(static_cast<double>(b) / kBins, 2) << ','
                 << fixed(static_cast<double>(b + 1) / kBins, 2) << ',' << counts[static_cast<std::size_t>(b)] << '\n';
        }
        per_policy[to_string(policies[pi])] = {
            {"runs", coverage_by_policy[pi].size()},
            {"failed", failed[pi]},
            {"reached_target", reached},
            {"unreached", unreached[pi]},
            {"median_coverage_at_target", number(median(coverage_by_policy[pi]))},
            {"mean_coverage_at_target", number(mean(coverage_by_policy[pi]))},
            {"median_step_at_target", number(median(steps_by_policy[pi]))},
        };
    }
    write_text(out / "histogram.csv", hist.str());

    json summary = {{"task", "explore"},
                    {"seed", cfg.seed},
                    {"predictor", predictor_flag(cfg.predictor)},
                    {"rooms", ec.rooms},
                    {"repeats", ec.repeats},
                    {"accuracy_target", ec.accuracy_target},
                    {"policies", per_policy},
                    {"errors", error_list}};
    write_json(out / "summary.json", summary);
    return summary;
}

// --- navigate -----------------------------------------------------------------

namespace {

std::vector<EpisodeConfig> sample_episodes(const ExperimentConfig& cfg, const std::vector<SemanticGrid>& rooms) {
    const NavigateConfig& nc = cfg.navigate;
    std::vector<EpisodeConfig> out;
    for (int r = 0; r < static_cast<int>(rooms.size()); ++r) {
        const SemanticGrid& truth = rooms[static_cast<std::size_t>(r)];
        const Costmap cm = build_costmap(truth);
        std::vector<Cell> free_cells;
        for (int y = 0; y < truth.height(); ++y) {
            for (int x = 0; x < truth.width(); ++x) {
                if (truth.at(x, y) == labels::kFree) free_cells.push_back({x, y});
            }
        }
        Rng rng(derive_seed(cfg.seed, "episodes", static_cast<std::uint64_t>(r)));
        int made = 0;
        for (int attempt = 0; made < nc.episodes_per_room; ++attempt) {
            if (attempt >= 10000) {
                throw std::runtime_error("navigate: cannot sample episodes in " + room_name(r) +
                                         " with min_separation " + std::to_string(nc.min_separation));
            }
            const Cell s = free_cells[rng.below(free_cells.size())];
            const Cell g = free_cells[rng.below(free_cells.size())];
            if (std::hypot(s.x - g.x, s.y - g.y) < nc.min_separation) continue;
            // Rooms are connected by construction, so this holds unless the spec changes.
            if (!astar(cm, s, g)) continue;
            out.push_back({r, s, g});
            ++made;
        }
    }
    return out;
}

}  // namespace

json run_navigate(const ExperimentConfig& cfg) {
    const fs::path out = prepare_output(cfg);
    const NavigateConfig& nc = cfg.navigate;
    const int workers = effective_workers(cfg);

    int room_count = nc.rooms;
    for (const auto& e : nc.episodes) room_count = std::max(room_count, e.room + 1);
    std::vector<SemanticGrid> rooms(static_cast<std::size_t>(room_count));
    parallel_for(room_count, workers, [&](int r) { rooms[static_cast<std::size_t>(r)] = suite_room(cfg, r); });

    const std::vector<EpisodeConfig> episodes = nc.episodes.empty() ? sample_episodes(cfg, rooms) : nc.episodes;
    std::vector<World> worlds;
    worlds.reserve(rooms.size());
    for (auto& r : rooms) worlds.push_back(make_world(r, nc.footprint, 1));

    PredictorFactory factory(cfg.predictor);
    NavOptions opts;
    opts.step_cap = nc.step_cap;
    opts.patch_size = kDefaultPatch;
    const int n = static_cast<int>(episodes.size());
    std::vector<std::optional<NavEpisode>> results(static_cast<std::size_t>(2 * n));
    std::vector<std::string> errors(static_cast<std::size_t>(2 * n));
    parallel_for(2 * n, workers, [&](int idx) {
        const EpisodeConfig& e = episodes[static_cast<std::size_t>(idx / 2)];
        const NavMode mode = idx % 2 == 0 ? NavMode::predictive : NavMode::baseline;
        try {
            const World& world = worlds[static_cast<std::size_t>(e.room)];
            const auto endpoint = factory.make(world.truth_rgb, &world.truth);
            results[static_cast<std::size_t>(idx)] =
                run_episode(world, e.start, e.goal, mode, *endpoint, opts,
                            derive_seed(cfg.seed, "noise", static_cast<std::uint64_t>(idx / 2)));
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(idx)] = describe(ex);
        }
    });

    std::ostringstream csv;
    csv << "world,start,goal,mode,steps,status\n";
    std::vector<double> pred_steps, base_steps;
    int failed = 0;
    int fallbacks = 0;
    bool predictive_never_worse = true;
    json error_list = json::array();
    json paths = json::array();
    for (int i = 0; i < n; ++i) {
        const EpisodeConfig& e = episodes[static_cast<std::size_t>(i)];
        const auto& pred = results[static_cast<std::size_t>(2 * i)];
        const auto& base = results[static_cast<std::size_t>(2 * i + 1)];
        for (int m = 0; m < 2; ++m) {
            const auto& r = m == 0 ? pred : base;
            const char* mode = m == 0 ? "predictive" : "baseline";
            csv << room_name(e.room) << ',' << cell_text(e.start) << ',' << cell_text(e.goal) << ',' << mode << ','
                << (r ? r->steps : 0) << ',' << (r && r->reached ? "reached" : "failed") << '\n';
            if (!r || !r->reached) ++failed;
            if (!r) {
                error_list.push_back({{"episode", i}, {"mode", mode}, {"error", errors[static_cast<std::size_t>(2 * i + m)]}});
            }
            if (r && nc.dump_paths) {
                json p = episode_path_json(*r);
                p["world"] = room_name(e.room);
                paths.push_back(p);
            }
        }
        if (pred) fallbacks += pred->fallbacks;
        if (pred && base && pred->reached && base->reached) {
            pred_steps.push_back(pred->steps);
            base_steps.push_back(base->steps);
            if (pred->steps > base->steps) predictive_never_worse = false;
        }
    }
    write_text(out / "episodes.csv", csv.str());
    if (nc.dump_paths) write_json(out / "paths.json", paths);

    const double mp = mean(pred_steps);
    const double mb = mean(base_steps);
    const double ratio = pred_steps.empty() ? std::nan("") : mp / mb;
    json summary = {{"task", "navigate"},
                    {"seed", cfg.seed},
                    {"predictor", predictor_flag(cfg.predictor)},
                    {"episodes", n},
                    {"paired", pred_steps.size()},
                    {"failed", failed},
                    {"fallbacks", fallbacks},
                    {"mean_steps_predictive", number(mp)},
                    {"mean_steps_baseline", number(mb)},
                    {"ratio", number(ratio)},
                    {"reduction", number(1.0 - ratio)},
                    {"predictive_never_worse", predictive_never_worse},
                    {"errors", error_list}};
    write_json(out / "summary.json", summary);
    return summary;
}

// --- serve-check ----------------------------------------------------------------

json run_serve_check(const ExperimentConfig& cfg) {
    if (cfg.predictor.kind != "wire") {
        throw std::invalid_argument("serve-check needs a wire predictor (--predictor wire:<addr> or " +
                                    std::string(kPredictorAddrEnv) + ")");
    }
    WirePredictor::Options opts;
    opts.timeout = std::chrono::milliseconds(cfg.predictor.timeout_ms);
    opts.max_in_flight = std::max(2, cfg.predictor.max_in_flight);
    auto client = WirePredictor::connect(cfg.predictor.addr, opts);

    json checks = json::object();
    bool ok = true;
    auto check = [&](const char* name, const std::function<bool()>& fn) {
        try {
            const bool passed = fn();
            checks[name] = {{"ok", passed}};
            ok = ok && passed;
        } catch (const std::exception& e) {
            checks[name] = {{"ok", false}, {"error", describe(e)}};
            ok = false;
        }
    };

    const SemanticGrid room_a = suite_room(cfg, 0);
    const SemanticGrid room_b = suite_room(cfg, 1);
    const RgbImage img_a = grid_to_rgb(room_a);
    const RgbImage img_b = grid_to_rgb(room_b);
    const int per_side = cfg.worldgen.side / kDefaultPatch;

    check("ping", [&] {
        client->ping();
        return true;
    });
    check("passthrough", [&] {
        const PredictRequest req{img_a, PatchMask(per_side, kDefaultPatch, true), 0.0, 1};
        return client->reconstruct(req) == img_a;
    });
    check("deterministic_repeat", [&] {
        const PatchMask mask = periphery_mask(per_side, 1);
        const PredictRequest req{blank_masked(img_a, mask, kUnobservedColor), mask, 0.0, 7};
        return client->reconstruct(req) == client->reconstruct(req);
    });
    check("id_correlation", [&] {
        const PatchMask mask = periphery_mask(per_side, 2);
        const PredictRequest ra{blank_masked(img_a, mask, kUnobservedColor), mask, 0.0, 3};
        const PredictRequest rb{blank_masked(img_b, mask, kUnobservedColor), mask, 0.0, 3};
        // Raw responses, issued concurrently, must carry their own request's visible content.
        auto fa = std::async(std::launch::async, [&] { return client->reconstruct(ra); });
        auto fb = std::async(std::launch::async, [&] { return client->reconstruct(rb); });
        const RgbImage a = fa.get();
        const RgbImage b = fb.get();
        auto matches = [&](const RgbImage& got, const RgbImage& want) {
            for (int y = 0; y < want.height(); ++y) {
                for (int x = 0; x < want.width(); ++x) {
                    if (mask.pixel_visible(x, y) && got.at(x, y) != want.at(x, y)) return false;
                }
            }
            return true;
        };
        return matches(a, img_a) && matches(b, img_b);
    });

    json summary = {{"task", "serve-check"}, {"addr", cfg.predictor.addr}, {"ok", ok}, {"checks", checks}};
    const fs::path out = prepare_output(cfg);
    write_json(out / "serve_check.json", summary);
    return summary;
}

}  // namespace mapsight
