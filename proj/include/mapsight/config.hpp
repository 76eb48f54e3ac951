#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mapsight/gridmap.hpp"
#include "mapsight/worldgen.hpp"

namespace mapsight {

inline constexpr const char* kPredictorAddrEnv = "MAPSIGHT_PREDICTOR_ADDR";

struct PredictorConfig {
    /// "oracle", "nearest", "noisy" or "wire".
    std::string kind = "nearest";
    double flip_rate = 0.1;
    std::string addr;
    int timeout_ms = 30000;
    int max_in_flight = 4;

    friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

/// Parses mock:oracle | mock:nearest | mock:noisy:<rate> | wire:<addr> into
/// `base`, keeping its timeout and concurrency settings.
[[nodiscard]] PredictorConfig parse_predictor_flag(std::string_view text, PredictorConfig base = {});
[[nodiscard]] std::string predictor_flag(const PredictorConfig& cfg);

struct GenMapsConfig {
    int count = 20;
    friend bool operator==(const GenMapsConfig&, const GenMapsConfig&) = default;
};

struct FovConfig {
    /// Dataset directory; empty means the synthetic suite.
    std::string dataset;
    int synthetic_count = 20;
    std::vector<int> k = {1, 2, 3};
    std::vector<std::string> modalities = {"rgb", "semantic", "binary"};
    int patch_size = kDefaultPatch;
    friend bool operator==(const FovConfig&, const FovConfig&) = default;
};

struct ExploreConfig {
    int rooms = 50;
    int repeats = 10;
    std::vector<std::string> policies = {"lawnmower", "kmeans_u", "kmeans_r", "kmeans_u2"};
    int n_robots = 3;
    int footprint = 48;
    double tau = 25.0;
    int n_samples = 8;
    double sigma = 2.0;
    int step_len = 16;
    int step_cap = 500;
    double accuracy_target = 0.95;
    /// Write one CSV per mission under runs/.
    bool run_logs = true;
    friend bool operator==(const ExploreConfig&, const ExploreConfig&) = default;
};

struct EpisodeConfig {
    int room = 0;
    Cell start;
    Cell goal;
    friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

struct NavigateConfig {
    int rooms = 20;
    int episodes_per_room = 1;
    /// Explicit episodes; when non-empty they replace the sampled ones.
    std::vector<EpisodeConfig> episodes;
    int footprint = 48;
    int step_cap = 200;
    /// Minimum Euclidean start-goal distance for sampled episodes.
    int min_separation = 96;
    bool dump_paths = false;
    friend bool operator==(const NavigateConfig&, const NavigateConfig&) = default;
};

struct ExperimentConfig {
    std::string task = "fov";
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    /// 0 means one worker per available CPU.
    int workers = 0;
    PredictorConfig predictor;
    RoomSpec worldgen;
    GenMapsConfig gen_maps;
    FovConfig fov;
    ExploreConfig explore;
    NavigateConfig navigate;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

[[nodiscard]] nlohmann::json to_json(const ExperimentConfig& cfg);
/// Starts from `base` and applies the keys present in `j`. Unknown keys and
/// ill-typed values throw std::invalid_argument.
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
void validate(const ExperimentConfig& cfg);

/// Applies MAPSIGHT_PREDICTOR_ADDR when set: the predictor becomes wire:<value>.
void apply_environment(ExperimentConfig& cfg);

[[nodiscard]] int effective_workers(const ExperimentConfig& cfg);

}  // namespace mapsight
