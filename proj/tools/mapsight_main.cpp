#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mapsight/config.hpp"
#include "mapsight/errors.hpp"
#include "mapsight/harness.hpp"

namespace {

using mapsight::ExperimentConfig;

/// Flag values are optional so that only flags actually given override the file.
struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<std::string> predictor;
    std::optional<int> timeout_ms;
    bool dump_config = false;

    std::optional<int> count;
    std::optional<std::string> dataset;
    std::optional<int> synthetic_count;
    std::optional<std::vector<int>> k;
    std::optional<std::vector<std::string>> modalities;
    std::optional<int> rooms;
    std::optional<int> repeats;
    std::optional<std::vector<std::string>> policies;
    std::optional<int> n_robots;
    std::optional<int> footprint;
    std::optional<double> tau;
    std::optional<int> samples;
    std::optional<double> sigma;
    std::optional<int> step_cap;
    bool no_run_logs = false;
    std::optional<int> episodes_per_room;
    bool dump_paths = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file");
    cmd->add_option("--seed", o.seed, "Root seed");
    cmd->add_option("-o,--out", o.out, "Output directory");
    cmd->add_option("-j,--workers", o.workers, "Worker threads (0 = CPU count)");
    cmd->add_option("--predictor", o.predictor, "mock:oracle | mock:nearest | mock:noisy:<rate> | wire:<addr>");
    cmd->add_option("--timeout-ms", o.timeout_ms, "Wire predictor request timeout");
    cmd->add_flag("--dump-config", o.dump_config, "Print the effective config and exit");
}

template <typename T, typename U>
void set_if(const std::optional<T>& v, U& field) {
    if (v) field = *v;
}

ExperimentConfig resolve(const std::string& task, const Overrides& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = mapsight::load_config(o.config_path);
    cfg.task = task;
    mapsight::apply_environment(cfg);
    set_if(o.seed, cfg.seed);
    set_if(o.out, cfg.output_dir);
    set_if(o.workers, cfg.workers);
    if (o.predictor) cfg.predictor = mapsight::parse_predictor_flag(*o.predictor, cfg.predictor);
    set_if(o.timeout_ms, cfg.predictor.timeout_ms);
    set_if(o.count, cfg.gen_maps.count);
    set_if(o.dataset, cfg.fov.dataset);
    set_if(o.synthetic_count, cfg.fov.synthetic_count);
    set_if(o.k, cfg.fov.k);
    set_if(o.modalities, cfg.fov.modalities);
    if (task == "explore") {
        set_if(o.rooms, cfg.explore.rooms);
        set_if(o.footprint, cfg.explore.footprint);
        set_if(o.step_cap, cfg.explore.step_cap);
    } else if (task == "navigate") {
        set_if(o.rooms, cfg.navigate.rooms);
        set_if(o.footprint, cfg.navigate.footprint);
        set_if(o.step_cap, cfg.navigate.step_cap);
    }
    set_if(o.repeats, cfg.explore.repeats);
    set_if(o.policies, cfg.explore.policies);
    set_if(o.n_robots, cfg.explore.n_robots);
    set_if(o.tau, cfg.explore.tau);
    set_if(o.samples, cfg.explore.n_samples);
    set_if(o.sigma, cfg.explore.sigma);
    if (o.no_run_logs) cfg.explore.run_logs = false;
    set_if(o.episodes_per_room, cfg.navigate.episodes_per_room);
    if (o.dump_paths) cfg.navigate.dump_paths = true;
    mapsight::validate(cfg);
    return cfg;
}

int fail(const char* category, const std::string& message, int code) {
    std::string one_line = message;
    for (char& ch : one_line) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    std::fprintf(stderr, "mapsight: error: %s: %s\n", category, one_line.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mapsight: map prediction simulator and evaluation harness"};
    app.require_subcommand(1);
    Overrides o;

    auto* gen = app.add_subcommand("gen-maps", "Write a synthetic room suite in dataset layout");
    add_common(gen, o);
    gen->add_option("--count", o.count, "Number of rooms");

    auto* fov = app.add_subcommand("fov-eval", "Field-of-view expansion metrics");
    add_common(fov, o);
    fov->add_option("--dataset", o.dataset, "Dataset directory (default: synthetic suite)");
    fov->add_option("--synthetic-count", o.synthetic_count, "Synthetic rooms when no dataset is given");
    fov->add_option("--k", o.k, "Hidden patches per side")->delimiter(',');
    fov->add_option("--modalities", o.modalities, "rgb, semantic, binary")->delimiter(',');

    auto* explore = app.add_subcommand("explore", "Multi-robot exploration missions");
    add_common(explore, o);
    explore->add_option("--rooms", o.rooms, "Synthetic rooms");
    explore->add_option("--repeats", o.repeats, "Seeds per room");
    explore->add_option("--policies", o.policies, "lawnmower, kmeans_u, kmeans_r, kmeans_u2")->delimiter(',');
    explore->add_option("--n-robots", o.n_robots, "Robots per mission");
    explore->add_option("--footprint", o.footprint, "Observation square side in pixels");
    explore->add_option("--tau", o.tau, "Uncertainty threshold");
    explore->add_option("--samples", o.samples, "Bootstrap samples");
    explore->add_option("--sigma", o.sigma, "Bootstrap noise sigma");
    explore->add_option("--step-cap", o.step_cap, "Step cap per mission");
    explore->add_flag("--no-run-logs", o.no_run_logs, "Skip per-mission CSV files");

    auto* nav = app.add_subcommand("navigate", "Predictive vs baseline goal navigation");
    add_common(nav, o);
    nav->add_option("--rooms", o.rooms, "Synthetic rooms");
    nav->add_option("--episodes-per-room", o.episodes_per_room, "Sampled start-goal pairs per room");
    nav->add_option("--footprint", o.footprint, "Observation square side in pixels");
    nav->add_option("--step-cap", o.step_cap, "Step cap per episode");
    nav->add_flag("--dump-paths", o.dump_paths, "Write paths.json");

    auto* serve = app.add_subcommand("serve-check", "Ping and probe the predictor service");
    add_common(serve, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    const std::string name = app.get_subcommands().front()->get_name();
    const std::string task = name == "fov-eval" ? "fov" : name;
    try {
        const ExperimentConfig cfg = resolve(task, o);
        if (o.dump_config) {
            std::cout << mapsight::to_json(cfg).dump(2) << "\n";
            return 0;
        }
        nlohmann::json summary;
        if (task == "gen-maps") summary = mapsight::run_gen_maps(cfg);
        else if (task == "fov") summary = mapsight::run_fov(cfg);
        else if (task == "explore") summary = mapsight::run_explore(cfg);
        else if (task == "navigate") summary = mapsight::run_navigate(cfg);
        else summary = mapsight::run_serve_check(cfg);
        std::cout << summary.dump() << "\n";
        if (task == "serve-check" && !summary.value("ok", false)) return fail("serve-check", "one or more checks failed", 5);
        return 0;
    } catch (const mapsight::PredictorError& e) {
        return fail((std::string("predictor-") + mapsight::to_string(e.kind())).c_str(), e.what(), 4);
    } catch (const mapsight::IoError& e) {
        return fail("io", e.what(), 3);
    } catch (const std::invalid_argument& e) {
        return fail("config", e.what(), 2);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
