#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mapsight/config.hpp"
#include "mapsight/errors.hpp"
#include "mapsight/harness.hpp"

namespace mapsight {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mapsight_harness_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

ExperimentConfig small(const std::string& task, const fs::path& out) {
    ExperimentConfig c;
    c.task = task;
    c.seed = 11;
    c.output_dir = out.string();
    c.workers = 2;
    return c;
}

TEST(Config, DefaultsSurviveJsonRoundTrip) {
    const ExperimentConfig d;
    EXPECT_EQ(config_from_json(to_json(d)), d);
    ExperimentConfig c;
    c.navigate.episodes = {{2, {3, 4}, {50, 60}}};
    c.predictor = parse_predictor_flag("mock:noisy:0.25");
    c.worldgen.min_obstacles = 1;
    c.worldgen.max_obstacles = 3;
    EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(Config, RejectsUnknownKeysWithTheirPath) {
    try {
        (void)config_from_json(json::parse(R"({"explore":{"room":3}})"));
        FAIL() << "accepted an unknown key";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("explore.room"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)config_from_json(json::parse(R"({"colour":1})")), std::invalid_argument);
    EXPECT_THROW((void)config_from_json(json::parse(R"({"worldgen":{"sides":3}})")), std::invalid_argument);
    EXPECT_THROW((void)config_from_json(json::parse(R"({"seed":"x"})")), std::invalid_argument);
    EXPECT_THROW((void)config_from_json(json::parse(R"({"fov":{"k":[7]}})")), std::invalid_argument);
    EXPECT_THROW((void)config_from_json(json::parse(R"({"explore":{"policies":["spiral"]}})")), std::invalid_argument);
    EXPECT_THROW((void)config_from_json(json::parse(R"({"predictor":{"kind":"wire"}})")), std::invalid_argument);
}

TEST(Config, FileValuesLayerOverDefaults) {
    const fs::path dir = scratch("cfg");
    std::ofstream(dir / "c.json") << R"({"seed": 5, "explore": {"rooms": 2}})";
    const ExperimentConfig c = load_config(dir / "c.json");
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.explore.rooms, 2);
    EXPECT_EQ(c.explore.repeats, ExploreConfig{}.repeats);
    EXPECT_THROW((void)load_config(dir / "missing.json"), IoError);
    std::ofstream(dir / "bad.json") << "{nope";
    EXPECT_THROW((void)load_config(dir / "bad.json"), std::invalid_argument);
    fs::remove_all(dir);
}

TEST(Config, PredictorFlags) {
    EXPECT_EQ(parse_predictor_flag("mock:oracle").kind, "oracle");
    EXPECT_EQ(parse_predictor_flag("mock:nearest").kind, "nearest");
    const auto noisy = parse_predictor_flag("mock:noisy:0.3");
    EXPECT_EQ(noisy.kind, "noisy");
    EXPECT_DOUBLE_EQ(noisy.flip_rate, 0.3);
    PredictorConfig base;
    base.timeout_ms = 77;
    const auto wire = parse_predictor_flag("wire:tcp:localhost:9000", base);
    EXPECT_EQ(wire.kind, "wire");
    EXPECT_EQ(wire.addr, "tcp:localhost:9000");
    EXPECT_EQ(wire.timeout_ms, 77);
    EXPECT_EQ(predictor_flag(wire), "wire:tcp:localhost:9000");
    for (const char* bad : {"oracle", "mock:noisy:", "mock:noisy:1.5", "mock:noisy:0.2x", "wire:", "mock:magic"}) {
        EXPECT_THROW((void)parse_predictor_flag(bad), std::invalid_argument) << bad;
    }
}

TEST(Config, EnvironmentSelectsTheWirePredictor) {
    ExperimentConfig c;
    ::unsetenv(kPredictorAddrEnv);
    apply_environment(c);
    EXPECT_EQ(c.predictor.kind, "nearest");
    ::setenv(kPredictorAddrEnv, "tcp:127.0.0.1:7000", 1);
    apply_environment(c);
    ::unsetenv(kPredictorAddrEnv);
    EXPECT_EQ(c.predictor.kind, "wire");
    EXPECT_EQ(c.predictor.addr, "tcp:127.0.0.1:7000");
}

TEST(Harness, ParallelForRethrowsAfterFinishing) {
    std::vector<int> hit(50, 0);
    EXPECT_THROW(parallel_for(50, 4,
                              [&](int i) {
                                  hit[static_cast<std::size_t>(i)] = 1;
                                  if (i == 7) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 50);
}

TEST(Harness, OracleFovIsPerfect) {
    const fs::path out = scratch("fov");
    ExperimentConfig c = small("fov", out);
    c.fov.synthetic_count = 3;
    c.predictor = parse_predictor_flag("mock:oracle");
    const json s = run_fov(c);
    ASSERT_FALSE(s["means"].empty());
    for (const auto& m : s["means"]) {
        EXPECT_DOUBLE_EQ(m["ssim"].get<double>(), 1.0);
        EXPECT_DOUBLE_EQ(m["psnr"].get<double>(), 100.0);
        EXPECT_DOUBLE_EQ(m["mse"].get<double>(), 0.0);
        EXPECT_DOUBLE_EQ(m["miou"].get<double>(), 1.0);
    }
    EXPECT_TRUE(fs::exists(out / "metrics.csv"));
    EXPECT_TRUE(fs::exists(out / "items.csv"));
    fs::remove_all(out);
}

TEST(Harness, EmptyDatasetWritesHeaderOnly) {
    const fs::path out = scratch("fov_empty");
    const fs::path data = scratch("empty_data");
    ExperimentConfig c = small("fov", out);
    c.fov.dataset = data.string();
    const json s = run_fov(c);
    EXPECT_EQ(s["items"], 0);
    const std::string metrics = slurp(out / "metrics.csv");
    EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 1);
    fs::remove_all(out);
    fs::remove_all(data);
}

TEST(Harness, GenMapsRoundTripsThroughFov) {
    const fs::path maps = scratch("maps");
    ExperimentConfig g = small("gen-maps", maps);
    g.gen_maps.count = 2;
    (void)run_gen_maps(g);
    const fs::path out = scratch("fov_maps");
    ExperimentConfig c = small("fov", out);
    c.fov.dataset = maps.string();
    c.predictor = parse_predictor_flag("mock:oracle");
    const json s = run_fov(c);
    EXPECT_EQ(s["items"], 2);
    EXPECT_TRUE(s["dataset_issues"].empty());
    EXPECT_EQ(s["means"].size(), 3u * 3u * 2u);
    fs::remove_all(maps);
    fs::remove_all(out);
}

TEST(Harness, RerunsAreByteIdentical) {
    for (const std::string task : {"fov", "explore", "navigate"}) {
        const fs::path a = scratch(task + "_a");
        const fs::path b = scratch(task + "_b");
        ExperimentConfig ca = small(task, a);
        ca.fov.synthetic_count = 2;
        ca.explore.rooms = 1;
        ca.explore.repeats = 1;
        ca.explore.step_cap = 6;
        ca.navigate.rooms = 2;
        ca.navigate.dump_paths = true;
        ExperimentConfig cb = ca;
        cb.output_dir = b.string();
        cb.workers = 1;
        auto run = [&task](const ExperimentConfig& c) {
            if (task == "fov") return run_fov(c);
            if (task == "explore") return run_explore(c);
            return run_navigate(c);
        };
        (void)run(ca);
        (void)run(cb);
        const auto ta = tree(a), tb = tree(b);
        EXPECT_FALSE(ta.empty());
        EXPECT_EQ(ta, tb) << task;
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(Harness, GoalInSightGivesEqualSteps) {
    const fs::path out = scratch("nav_adjacent");
    ExperimentConfig c = small("navigate", out);
    c.predictor = parse_predictor_flag("mock:oracle");
    const SemanticGrid room = suite_room(c, 0);
    Cell start{-1, -1};
    for (int y = 0; y < room.height() && start.x < 0; ++y) {
        for (int x = 0; x + 1 < room.width(); ++x) {
            if (room.at(x, y) == labels::kFree && room.at(x + 1, y) == labels::kFree) {
                start = {x, y};
                break;
            }
        }
    }
    c.navigate.episodes = {{0, start, {start.x + 1, start.y}}};
    const json s = run_navigate(c);
    EXPECT_EQ(s["paired"], 1);
    EXPECT_DOUBLE_EQ(s["ratio"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(s["mean_steps_baseline"].get<double>(), 1.0);
    fs::remove_all(out);
}

TEST(Harness, ExploreSummaryCountsRuns) {
    const fs::path out = scratch("explore");
    ExperimentConfig c = small("explore", out);
    c.explore.rooms = 2;
    c.explore.repeats = 1;
    c.explore.policies = {"lawnmower", "kmeans_r"};
    c.explore.step_cap = 8;
    c.predictor = parse_predictor_flag("mock:oracle");
    const json s = run_explore(c);
    EXPECT_EQ(s["policies"]["lawnmower"]["runs"], 2);
    EXPECT_EQ(s["policies"]["kmeans_r"]["reached_target"], 2);
    EXPECT_TRUE(fs::exists(out / "runs" / "lawnmower_room_000_rep0.csv"));
    const std::string hist = slurp(out / "histogram.csv");
    EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 1 + 2 * 20);
    fs::remove_all(out);
}

// --- command line ---------------------------------------------------------------

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(const std::string& args, const std::string& env = {}) {
    const fs::path dir = scratch("cli_io");
    const std::string cmd = env + " " + MAPSIGHT_CLI + " " + args + " >" + (dir / "o").string() + " 2>" +
                            (dir / "e").string();
    const int status = std::system(cmd.c_str());
    Result r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "o"), slurp(dir / "e")};
    fs::remove_all(dir);
    return r;
}

TEST(Cli, ExitCodesAndErrorLine) {
    const fs::path dir = scratch("cli");
    std::ofstream(dir / "bad.json") << R"({"navigate":{"stepcap":3}})";
    Result r = cli("navigate -c " + (dir / "bad.json").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("mapsight: error: config: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

    EXPECT_EQ(cli("explore --bogus-flag").code, 2);
    EXPECT_EQ(cli("fov-eval -c " + (dir / "none.json").string()).code, 3);
    r = cli("serve-check --predictor wire:127.0.0.1:1 -o " + (dir / "sc").string());
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("predictor-unavailable"), std::string::npos) << r.err;
    fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideFileAndEnvironment) {
    const fs::path dir = scratch("cli_layers");
    std::ofstream(dir / "c.json") << R"({"seed": 3, "fov": {"synthetic_count": 4}})";
    Result r = cli("fov-eval --dump-config -c " + (dir / "c.json").string() + " --seed 9");
    ASSERT_EQ(r.code, 0) << r.err;
    json j = json::parse(r.out);
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(j["fov"]["synthetic_count"], 4);
    EXPECT_EQ(j["task"], "fov");

    r = cli("fov-eval --dump-config", std::string(kPredictorAddrEnv) + "=stdio:somewhere");
    j = json::parse(r.out);
    EXPECT_EQ(j["predictor"]["kind"], "wire");
    EXPECT_EQ(j["predictor"]["addr"], "stdio:somewhere");

    r = cli("fov-eval --dump-config --predictor mock:oracle", std::string(kPredictorAddrEnv) + "=stdio:somewhere");
    EXPECT_EQ(json::parse(r.out)["predictor"]["kind"], "oracle");
    fs::remove_all(dir);
}

TEST(Cli, ServeCheckAgainstTheMockService) {
    const fs::path dir = scratch("cli_serve");
    const std::string mock = fs::path(MAPSIGHT_CLI).parent_path() / "mapsight-mock-service";
    Result r = cli("serve-check -o " + dir.string() + " --predictor 'wire:stdio:" + mock + "'");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json::parse(slurp(dir / "serve_check.json"))["ok"].get<bool>());
    r = cli("serve-check -o " + dir.string() + " --predictor 'wire:stdio:" + mock + " --fault error'");
    EXPECT_EQ(r.code, 5);
    fs::remove_all(dir);
}

}  // namespace
}  // namespace mapsight
