#pragma once

// Newline-delimited JSON protocol to an external inpainting service.
//
//   request : {"id":N,"op":"inpaint","png_b64":"...","mask":[196 x 0|1],"noise_sigma":S,"seed":N}
//   response: {"id":N,"png_b64":"..."}  or  {"id":N,"error":"..."}
//   ping    : {"id":0,"op":"ping"} -> {"id":0,"pong":true}
//
// One object per line. Responses are correlated by id, not by order.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mapsight/errors.hpp"
#include "mapsight/predictor.hpp"

namespace mapsight::wire {

[[nodiscard]] std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
[[nodiscard]] std::vector<std::uint8_t> base64_decode(std::string_view text);

[[nodiscard]] nlohmann::json make_inpaint_request(std::uint64_t id, const PredictRequest& req);
/// Server side. Throws std::invalid_argument on a malformed request.
[[nodiscard]] PredictRequest parse_inpaint_request(const nlohmann::json& j, int patch_size = kDefaultPatch);

struct Response {
    std::int64_t id = -1;
    std::optional<RgbImage> image;
    std::optional<std::string> error;
    bool pong = false;
};

/// Client side. Throws PredictorError(malformed_response) when the line is not
/// a valid response object.
[[nodiscard]] Response parse_response(std::string_view line);

/// Reference server step: one request line in, one response line out (no
/// trailing newline). Never throws.
[[nodiscard]] std::string handle_request_line(std::string_view line, const Predictor& model);

}  // namespace mapsight::wire

namespace mapsight {

/// Predictor backed by the wire protocol. Thread-safe; several requests may be
/// in flight at once, up to `max_in_flight`.
class WirePredictor final : public Predictor {
public:
    struct Options {
        std::chrono::milliseconds timeout{30000};
        int max_in_flight = 4;
    };

    /// `addr` is "host:port", "tcp:host:port" or "stdio:<shell command>".
    /// Throws PredictorError(unavailable) when the endpoint cannot be reached.
    static std::unique_ptr<WirePredictor> connect(const std::string& addr, Options options);
    static std::unique_ptr<WirePredictor> connect(const std::string& addr) { return connect(addr, Options{}); }

    /// Takes ownership of an already connected stream (socket pair, pipes).
    static std::unique_ptr<WirePredictor> from_fds(int read_fd, int write_fd, Options options);

    ~WirePredictor() override;
    WirePredictor(const WirePredictor&) = delete;
    WirePredictor& operator=(const WirePredictor&) = delete;

    [[nodiscard]] std::string kind() const override { return "wire"; }
    [[nodiscard]] RgbImage reconstruct(const PredictRequest& req) const override;

    /// Health check; throws PredictorError on failure.
    void ping() const;

private:
    WirePredictor(int read_fd, int write_fd, int child_pid, Options options);

    wire::Response roundtrip(std::uint64_t id, const std::string& line) const;
    void send_line(const std::string& line) const;
    void reader_loop();
    void fail_all(PredictorError::Kind kind, const std::string& why);

    int read_fd_;
    int write_fd_;
    int child_pid_;
    Options options_;

    mutable std::counting_semaphore<1024> slots_;
    mutable std::mutex write_mutex_;
    mutable std::mutex pending_mutex_;
    mutable std::mutex ping_mutex_;
    mutable std::map<std::uint64_t, std::promise<wire::Response>> pending_;
    mutable std::atomic<std::uint64_t> next_id_{1};
    std::atomic<bool> stopping_{false};
    std::atomic<bool> closed_{false};
    std::string close_reason_;
    std::thread reader_;
};

}  // namespace mapsight
