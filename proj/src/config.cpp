#include "mapsight/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include <omp.h>

#include "mapsight/errors.hpp"
#include "mapsight/exploration.hpp"

namespace mapsight {

using nlohmann::json;

PredictorConfig parse_predictor_flag(std::string_view text, PredictorConfig base) {
    auto bad = [&text](const std::string& why) {
        return std::invalid_argument("predictor '" + std::string(text) + "': " + why);
    };
    if (text == "mock:oracle") {
        base.kind = "oracle";
    } else if (text == "mock:nearest") {
        base.kind = "nearest";
    } else if (text.starts_with("mock:noisy:")) {
        const std::string rate(text.substr(11));
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(rate, &used);
        } catch (const std::exception&) {
            throw bad("flip rate is not a number");
        }
        if (used != rate.size() || !(value >= 0.0 && value <= 1.0)) throw bad("flip rate must lie in [0, 1]");
        base.kind = "noisy";
        base.flip_rate = value;
    } else if (text.starts_with("wire:")) {
        if (text.size() == 5) throw bad("missing address");
        base.kind = "wire";
        base.addr = std::string(text.substr(5));
    } else {
        throw bad("expected mock:oracle, mock:nearest, mock:noisy:<rate> or wire:<addr>");
    }
    return base;
}

std::string predictor_flag(const PredictorConfig& cfg) {
    if (cfg.kind == "wire") return "wire:" + cfg.addr;
    if (cfg.kind == "noisy") return "mock:noisy:" + std::to_string(cfg.flip_rate);
    return "mock:" + cfg.kind;
}

namespace {

json cell_json(Cell c) { return json::array({c.x, c.y}); }

/// Reads keys of one JSON object into fields and rejects leftovers.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw std::invalid_argument("config: " + where() + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& field) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            field = convert<T>(j_.at(key));
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception& e) {
            throw std::invalid_argument("config: bad value for " + where(key) + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    [[nodiscard]] std::string where(const std::string& key = {}) const {
        if (key.empty()) return path_.empty() ? "top level" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) throw std::invalid_argument("config: unknown key " + where(key));
        }
    }

private:
    template <typename T>
    static T convert(const json& v) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw std::runtime_error("expected a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) throw std::runtime_error("expected a non-negative integer");
            return v.get<std::uint64_t>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw std::runtime_error("expected a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw std::runtime_error("expected a string");
            return v.get<std::string>();
        } else {
            if (!v.is_array()) throw std::runtime_error("expected an array");
            T out;
            for (const auto& e : v) out.push_back(convert<typename T::value_type>(e));
            return out;
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Cell parse_cell(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        throw std::invalid_argument("config: " + where + " must be [x, y]");
    }
    return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

json to_json(const ExperimentConfig& c) {
    json episodes = json::array();
    for (const auto& e : c.navigate.episodes) {
        episodes.push_back({{"room", e.room}, {"start", cell_json(e.start)}, {"goal", cell_json(e.goal)}});
    }
    return {
        {"task", c.task},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"workers", c.workers},
        {"predictor",
         {{"kind", c.predictor.kind},
          {"flip_rate", c.predictor.flip_rate},
          {"addr", c.predictor.addr},
          {"timeout_ms", c.predictor.timeout_ms},
          {"max_in_flight", c.predictor.max_in_flight}}},
        {"worldgen", to_json(c.worldgen)},
        {"gen_maps", {{"count", c.gen_maps.count}}},
        {"fov",
         {{"dataset", c.fov.dataset},
          {"synthetic_count", c.fov.synthetic_count},
          {"k", c.fov.k},
          {"modalities", c.fov.modalities},
          {"patch_size", c.fov.patch_size}}},
        {"explore",
         {{"rooms", c.explore.rooms},
          {"repeats", c.explore.repeats},
          {"policies", c.explore.policies},
          {"n_robots", c.explore.n_robots},
          {"footprint", c.explore.footprint},
          {"tau", c.explore.tau},
          {"n_samples", c.explore.n_samples},
          {"sigma", c.explore.sigma},
          {"step_len", c.explore.step_len},
          {"step_cap", c.explore.step_cap},
          {"accuracy_target", c.explore.accuracy_target},
          {"run_logs", c.explore.run_logs}}},
        {"navigate",
         {{"rooms", c.navigate.rooms},
          {"episodes_per_room", c.navigate.episodes_per_room},
          {"episodes", episodes},
          {"footprint", c.navigate.footprint},
          {"step_cap", c.navigate.step_cap},
          {"min_separation", c.navigate.min_separation},
          {"dump_paths", c.navigate.dump_paths}}},
    };
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
    Reader top(j, "");
    top.get("task", c.task);
    top.get("seed", c.seed);
    top.get("output_dir", c.output_dir);
    top.get("workers", c.workers);
    if (const json* p = top.child("predictor")) {
        Reader r(*p, "predictor");
        r.get("kind", c.predictor.kind);
        r.get("flip_rate", c.predictor.flip_rate);
        r.get("addr", c.predictor.addr);
        r.get("timeout_ms", c.predictor.timeout_ms);
        r.get("max_in_flight", c.predictor.max_in_flight);
        r.finish();
    }
    if (const json* p = top.child("worldgen")) {
        // Merge over the current spec so partial objects keep earlier values.
        json merged = to_json(c.worldgen);
        if (!p->is_object()) throw std::invalid_argument("config: worldgen must be an object");
        for (const auto& [key, value] : p->items()) {
            if (!merged.contains(key)) throw std::invalid_argument("config: unknown key worldgen." + key);
            merged[key] = value;
        }
        try {
            c.worldgen = room_spec_from_json(merged);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("config: bad value in worldgen: ") + e.what());
        }
    }
    if (const json* p = top.child("gen_maps")) {
        Reader r(*p, "gen_maps");
        r.get("count", c.gen_maps.count);
        r.finish();
    }
    if (const json* p = top.child("fov")) {
        Reader r(*p, "fov");
        r.get("dataset", c.fov.dataset);
        r.get("synthetic_count", c.fov.synthetic_count);
        r.get("k", c.fov.k);
        r.get("modalities", c.fov.modalities);
        r.get("patch_size", c.fov.patch_size);
        r.finish();
    }
    if (const json* p = top.child("explore")) {
        Reader r(*p, "explore");
        r.get("rooms", c.explore.rooms);
        r.get("repeats", c.explore.repeats);
        r.get("policies", c.explore.policies);
        r.get("n_robots", c.explore.n_robots);
        r.get("footprint", c.explore.footprint);
        r.get("tau", c.explore.tau);
        r.get("n_samples", c.explore.n_samples);
        r.get("sigma", c.explore.sigma);
        r.get("step_len", c.explore.step_len);
        r.get("step_cap", c.explore.step_cap);
        r.get("accuracy_target", c.explore.accuracy_target);
        r.get("run_logs", c.explore.run_logs);
        r.finish();
    }
    if (const json* p = top.child("navigate")) {
        Reader r(*p, "navigate");
        r.get("rooms", c.navigate.rooms);
        r.get("episodes_per_room", c.navigate.episodes_per_room);
        if (const json* eps = r.child("episodes")) {
            if (!eps->is_array()) throw std::invalid_argument("config: navigate.episodes must be an array");
            c.navigate.episodes.clear();
            for (std::size_t i = 0; i < eps->size(); ++i) {
                const std::string where = "navigate.episodes[" + std::to_string(i) + "]";
                Reader er((*eps)[i], where);
                EpisodeConfig e;
                er.get("room", e.room);
                if (const json* s = er.child("start")) e.start = parse_cell(*s, where + ".start");
                else throw std::invalid_argument("config: " + where + ".start is required");
                if (const json* g = er.child("goal")) e.goal = parse_cell(*g, where + ".goal");
                else throw std::invalid_argument("config: " + where + ".goal is required");
                er.finish();
                c.navigate.episodes.push_back(e);
            }
        }
        r.get("footprint", c.navigate.footprint);
        r.get("step_cap", c.navigate.step_cap);
        r.get("min_separation", c.navigate.min_separation);
        r.get("dump_paths", c.navigate.dump_paths);
        r.finish();
    }
    top.finish();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::move(base));
}

void validate(const ExperimentConfig& c) {
    auto fail = [](const std::string& why) { throw std::invalid_argument("config: " + why); };
    static const std::set<std::string> tasks = {"fov", "explore", "navigate", "gen-maps", "serve-check"};
    if (!tasks.contains(c.task)) fail("unknown task '" + c.task + "'");
    if (c.workers < 0) fail("workers must be >= 0");
    static const std::set<std::string> kinds = {"oracle", "nearest", "noisy", "wire"};
    if (!kinds.contains(c.predictor.kind)) fail("unknown predictor kind '" + c.predictor.kind + "'");
    if (!(c.predictor.flip_rate >= 0.0 && c.predictor.flip_rate <= 1.0)) fail("predictor.flip_rate must lie in [0, 1]");
    if (c.predictor.kind == "wire" && c.predictor.addr.empty()) fail("wire predictor needs predictor.addr");
    if (c.predictor.timeout_ms <= 0) fail("predictor.timeout_ms must be positive");
    if (c.predictor.max_in_flight <= 0) fail("predictor.max_in_flight must be positive");
    validate(c.worldgen);
    if (c.gen_maps.count < 0) fail("gen_maps.count must be >= 0");
    if (c.fov.synthetic_count < 0) fail("fov.synthetic_count must be >= 0");
    if (c.fov.patch_size <= 0 || c.worldgen.side % c.fov.patch_size != 0) fail("fov.patch_size must divide the side");
    for (int k : c.fov.k) {
        if (k < 0 || 2 * k * c.fov.patch_size >= c.worldgen.side) fail("fov.k value " + std::to_string(k) + " out of range");
    }
    for (const auto& m : c.fov.modalities) {
        if (m != "rgb" && m != "semantic" && m != "binary") fail("unknown fov modality '" + m + "'");
    }
    const auto& e = c.explore;
    if (e.rooms < 0 || e.repeats < 0) fail("explore.rooms and explore.repeats must be >= 0");
    for (const auto& p : e.policies) (void)parse_policy(p);
    if (e.n_robots <= 0) fail("explore.n_robots must be positive");
    if (e.footprint <= 0 || e.footprint > c.worldgen.side) fail("explore.footprint out of range");
    if (e.tau < 0) fail("explore.tau must be >= 0");
    if (e.n_samples < 2) fail("explore.n_samples must be >= 2");
    if (e.sigma < 0) fail("explore.sigma must be >= 0");
    if (e.step_len <= 0 || e.step_cap <= 0) fail("explore.step_len and explore.step_cap must be positive");
    if (!(e.accuracy_target > 0.0 && e.accuracy_target <= 1.0)) fail("explore.accuracy_target must lie in (0, 1]");
    const auto& n = c.navigate;
    if (n.rooms < 0 || n.episodes_per_room < 0) fail("navigate.rooms and navigate.episodes_per_room must be >= 0");
    if (n.footprint <= 0 || n.footprint > c.worldgen.side) fail("navigate.footprint out of range");
    if (n.step_cap <= 0) fail("navigate.step_cap must be positive");
    if (n.min_separation < 1) fail("navigate.min_separation must be >= 1");
    for (const auto& ep : n.episodes) {
        if (ep.room < 0) fail("navigate.episodes room index must be >= 0");
    }
}

void apply_environment(ExperimentConfig& cfg) {
    if (const char* addr = std::getenv(kPredictorAddrEnv); addr != nullptr && *addr != '\0') {
        cfg.predictor.kind = "wire";
        cfg.predictor.addr = addr;
    }
}

int effective_workers(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    return std::max(1, omp_get_num_procs());
}

}  // namespace mapsight
