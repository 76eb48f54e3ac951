#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>

#include <json.hpp>

#include "mapsight/config.hpp"
#include "mapsight/gridmap.hpp"
#include "mapsight/predictor.hpp"

namespace mapsight {

/// Builds endpoints from configuration. Mock endpoints are tied to one world's
/// ground truth; the wire endpoint is created once and shared.
class PredictorFactory {
public:
    explicit PredictorFactory(PredictorConfig config) : config_(std::move(config)) {}

    /// `labels` is needed by the noisy oracle only; passing null for it
    /// throws std::invalid_argument.
    [[nodiscard]] std::shared_ptr<const Predictor> make(const RgbImage& truth_rgb, const SemanticGrid* labels) const;

    [[nodiscard]] const PredictorConfig& config() const { return config_; }

private:
    PredictorConfig config_;
    mutable std::mutex mutex_;
    mutable std::shared_ptr<const Predictor> wire_;
};

/// Synthetic room `index` of the configured suite.
[[nodiscard]] SemanticGrid suite_room(const ExperimentConfig& cfg, int index);

// Each task writes its files under cfg.output_dir, and returns the JSON it
// stored in summary.json.
nlohmann::json run_gen_maps(const ExperimentConfig& cfg);
nlohmann::json run_fov(const ExperimentConfig& cfg);
nlohmann::json run_explore(const ExperimentConfig& cfg);
nlohmann::json run_navigate(const ExperimentConfig& cfg);

/// Pings the wire predictor and checks its protocol behaviour. The "ok" field
/// of the result tells whether every check passed.
nlohmann::json run_serve_check(const ExperimentConfig& cfg);

/// Runs fn(i) for i in [0, n) on `workers` threads. The first exception thrown
/// by any item is rethrown after all items finish.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace mapsight
