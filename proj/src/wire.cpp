#include "mapsight/wire.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <openssl/evp.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "mapsight/errors.hpp"
#include "mapsight/image_io.hpp"

extern char** environ;

namespace mapsight::wire {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
    if (text.empty()) return {};
    std::vector<std::uint8_t> out(text.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw std::invalid_argument("base64: invalid character");
    std::size_t padding = 0;
    if (text.back() == '=') ++padding;
    if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

nlohmann::json make_inpaint_request(std::uint64_t id, const PredictRequest& req) {
    std::vector<int> mask(req.mask.flags().begin(), req.mask.flags().end());
    return {{"id", id},
            {"op", "inpaint"},
            {"png_b64", base64_encode(io::encode_png(req.image))},
            {"mask", mask},
            {"noise_sigma", req.noise_sigma},
            {"seed", req.seed}};
}

PredictRequest parse_inpaint_request(const nlohmann::json& j, int patch_size) {
    try {
        PredictRequest req;
        req.image = io::decode_png(base64_decode(j.at("png_b64").get<std::string>()));
        const auto& mask = j.at("mask");
        if (!mask.is_array()) throw std::invalid_argument("mask must be an array");
        const auto per = static_cast<int>(std::lround(std::sqrt(static_cast<double>(mask.size()))));
        if (per <= 0 || static_cast<std::size_t>(per) * per != mask.size()) {
            throw std::invalid_argument("mask length is not a square");
        }
        req.mask = PatchMask(per, patch_size, false);
        for (int i = 0; i < per * per; ++i) {
            const int v = mask[static_cast<std::size_t>(i)].get<int>();
            if (v != 0 && v != 1) throw std::invalid_argument("mask entries must be 0 or 1");
            req.mask.set_visible(i / per, i % per, v == 1);
        }
        req.noise_sigma = j.value("noise_sigma", 0.0);
        req.seed = j.value("seed", std::uint64_t{0});
        validate(req);
        return req;
    } catch (const nlohmann::json::exception& ex) {
        throw std::invalid_argument(std::string("request: ") + ex.what());
    } catch (const IoError& ex) {
        throw std::invalid_argument(std::string("request: ") + ex.what());
    }
}

Response parse_response(std::string_view line) {
    using Kind = PredictorError::Kind;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw PredictorError(Kind::malformed_response, "response is not JSON");
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
        throw PredictorError(Kind::malformed_response, "response has no integer id");
    }
    Response r;
    r.id = j["id"].get<std::int64_t>();
    if (j.contains("error")) {
        r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
        return r;
    }
    if (j.contains("pong")) {
        r.pong = j["pong"].is_boolean() && j["pong"].get<bool>();
        return r;
    }
    if (!j.contains("png_b64") || !j["png_b64"].is_string()) {
        throw PredictorError(Kind::malformed_response, "response has neither png_b64 nor error");
    }
    try {
        r.image = io::decode_png(base64_decode(j["png_b64"].get<std::string>()));
    } catch (const std::exception& ex) {
        throw PredictorError(Kind::malformed_response, std::string("response image: ") + ex.what());
    }
    return r;
}

std::string handle_request_line(std::string_view line, const Predictor& model) {
    nlohmann::json req;
    try {
        req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        return nlohmann::json{{"id", -1}, {"error", "unparseable request"}}.dump();
    }
    const nlohmann::json id = req.is_object() && req.contains("id") && req["id"].is_number_integer() ? req["id"]
                                                                                                   : nlohmann::json(-1);
    try {
        const std::string op = req.value("op", std::string{});
        if (op == "ping") return nlohmann::json{{"id", id}, {"pong", true}}.dump();
        if (op != "inpaint") return nlohmann::json{{"id", id}, {"error", "unknown op '" + op + "'"}}.dump();
        const PredictRequest parsed = parse_inpaint_request(req);
        const RgbImage out = predict(model, parsed);
        return nlohmann::json{{"id", id}, {"png_b64", base64_encode(io::encode_png(out))}}.dump();
    } catch (const std::exception& ex) {
        return nlohmann::json{{"id", id}, {"error", ex.what()}}.dump();
    }
}

}  // namespace mapsight::wire

namespace mapsight {

namespace {

using Kind = PredictorError::Kind;

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int connect_tcp(const std::string& hostport) {
    const auto colon = hostport.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == hostport.size()) {
        throw PredictorError(Kind::unavailable, "bad address '" + hostport + "', expected host:port");
    }
    std::string host = hostport.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    const std::string port = hostport.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw PredictorError(Kind::unavailable, "resolve " + hostport + ": " + ::gai_strerror(rc));
    }
    int fd = -1;
    std::string last_error = "no addresses";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        last_error = std::strerror(errno);
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw PredictorError(Kind::unavailable, "connect " + hostport + ": " + last_error);
    return fd;
}

struct Child {
    int pid;
    int read_fd;
    int write_fd;
};

Child spawn_stdio(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw PredictorError(Kind::unavailable, "pipe failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw PredictorError(Kind::unavailable, "pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    pid_t pid = 0;
    const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
        ::close(to_child[1]);
        ::close(from_child[0]);
        throw PredictorError(Kind::unavailable, "spawn '" + command + "': " + std::strerror(rc));
    }
    return {pid, from_child[0], to_child[1]};
}

}  // namespace

std::unique_ptr<WirePredictor> WirePredictor::connect(const std::string& addr, Options options) {
    ignore_sigpipe();
    if (addr.rfind("stdio:", 0) == 0) {
        const Child child = spawn_stdio(addr.substr(6));
        return std::unique_ptr<WirePredictor>(new WirePredictor(child.read_fd, child.write_fd, child.pid, options));
    }
    const std::string hostport = addr.rfind("tcp:", 0) == 0 ? addr.substr(4) : addr;
    const int fd = connect_tcp(hostport);
    const int wfd = ::dup(fd);
    if (wfd < 0) {
        ::close(fd);
        throw PredictorError(Kind::unavailable, "dup failed");
    }
    return std::unique_ptr<WirePredictor>(new WirePredictor(fd, wfd, -1, options));
}

std::unique_ptr<WirePredictor> WirePredictor::from_fds(int read_fd, int write_fd, Options options) {
    ignore_sigpipe();
    return std::unique_ptr<WirePredictor>(new WirePredictor(read_fd, write_fd, -1, options));
}

WirePredictor::WirePredictor(int read_fd, int write_fd, int child_pid, Options options)
    : read_fd_(read_fd),
      write_fd_(write_fd),
      child_pid_(child_pid),
      options_(options),
      slots_(std::max(1, std::min(options.max_in_flight, 1024))) {
    reader_ = std::thread([this] { reader_loop(); });
}

WirePredictor::~WirePredictor() {
    stopping_ = true;
    ::shutdown(write_fd_, SHUT_WR);
    ::close(write_fd_);
    if (child_pid_ > 0) {
        // Give a well-behaved child a moment to exit on EOF before signalling it.
        for (int i = 0; i < 20; ++i) {
            if (::waitpid(child_pid_, nullptr, WNOHANG) == child_pid_) {
                child_pid_ = -1;
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (child_pid_ > 0) {
            ::kill(child_pid_, SIGTERM);
            ::waitpid(child_pid_, nullptr, 0);
        }
    }
    if (reader_.joinable()) reader_.join();
    ::close(read_fd_);
}

void WirePredictor::fail_all(PredictorError::Kind kind, const std::string& why) {
    std::lock_guard lock(pending_mutex_);
    for (auto& [id, promise] : pending_) {
        promise.set_exception(std::make_exception_ptr(PredictorError(kind, why)));
    }
    pending_.clear();
}

void WirePredictor::reader_loop() {
    std::string buffer;
    char chunk[65536];
    while (!stopping_) {
        pollfd p{read_fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, 100);
        if (rc < 0 && errno == EINTR) continue;
        if (rc < 0) break;
        if (rc == 0) continue;
        const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
        if (n < 0 && (errno == EINTR || errno == EAGAIN)) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
            const std::string_view line(buffer.data() + start, nl - start);
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            try {
                wire::Response r = wire::parse_response(line);
                std::lock_guard lock(pending_mutex_);
                if (r.id < 0) {
                    // The service could not read one of our lines; nothing to correlate with.
                    for (auto& [id, promise] : pending_) {
                        promise.set_exception(std::make_exception_ptr(PredictorError(
                            Kind::malformed_response, "service rejected a request: " + r.error.value_or("?"))));
                    }
                    pending_.clear();
                    continue;
                }
                auto it = pending_.find(static_cast<std::uint64_t>(r.id));
                if (it == pending_.end()) continue;
                it->second.set_value(std::move(r));
                pending_.erase(it);
            } catch (const PredictorError& ex) {
                fail_all(Kind::malformed_response, ex.what());
            }
        }
        buffer.erase(0, start);
    }
    {
        std::lock_guard lock(pending_mutex_);
        close_reason_ = stopping_ ? "client closed" : "service closed the connection";
        closed_ = true;
    }
    fail_all(Kind::unavailable, "wire: service closed the connection");
}

void WirePredictor::send_line(const std::string& line) const {
    std::lock_guard lock(write_mutex_);
    std::size_t off = 0;
    while (off < line.size()) {
        const ssize_t n = ::write(write_fd_, line.data() + off, line.size() - off);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw PredictorError(Kind::unavailable, std::string("wire: write failed: ") + std::strerror(errno));
        off += static_cast<std::size_t>(n);
    }
}

wire::Response WirePredictor::roundtrip(std::uint64_t id, const std::string& line) const {
    std::future<wire::Response> fut;
    {
        std::lock_guard lock(pending_mutex_);
        if (closed_) throw PredictorError(Kind::unavailable, "wire: " + close_reason_);
        auto [it, inserted] = pending_.emplace(id, std::promise<wire::Response>{});
        if (!inserted) throw PredictorError(Kind::service_error, "wire: duplicate request id");
        fut = it->second.get_future();
    }
    try {
        send_line(line);
    } catch (...) {
        std::lock_guard lock(pending_mutex_);
        pending_.erase(id);
        throw;
    }
    if (fut.wait_for(options_.timeout) != std::future_status::ready) {
        std::lock_guard lock(pending_mutex_);
        if (pending_.erase(id) == 1) {
            throw PredictorError(Kind::timeout, "wire: no response to request " + std::to_string(id) + " within " +
                                                    std::to_string(options_.timeout.count()) + " ms");
        }
    }
    return fut.get();
}

RgbImage WirePredictor::reconstruct(const PredictRequest& req) const {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{slots_};
    const std::uint64_t id = next_id_.fetch_add(1);
    const wire::Response r = roundtrip(id, wire::make_inpaint_request(id, req).dump() + "\n");
    if (r.error) throw PredictorError(Kind::service_error, "wire: service error: " + *r.error);
    if (!r.image) throw PredictorError(Kind::malformed_response, "wire: response carries no image");
    if (r.image->width() != req.image.width() || r.image->height() != req.image.height()) {
        throw PredictorError(Kind::malformed_response, "wire: response image has wrong dimensions");
    }
    return *r.image;
}

void WirePredictor::ping() const {
    std::lock_guard lock(ping_mutex_);
    const wire::Response r = roundtrip(0, R"({"id":0,"op":"ping"})" "\n");
    if (r.error) throw PredictorError(Kind::service_error, "wire: ping failed: " + *r.error);
    if (!r.pong) throw PredictorError(Kind::malformed_response, "wire: ping response lacks pong:true");
}

}  // namespace mapsight
