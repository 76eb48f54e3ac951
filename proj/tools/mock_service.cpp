// Reference inpainting service speaking the line protocol, backed by the
// nearest-fill mock. Used by tests and for trying the wire client without a
// real model. Fault modes exercise client error handling.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mapsight/predictor.hpp"
#include "mapsight/wire.hpp"

namespace {

struct Faults {
    std::string mode = "none";
    int exit_after = -1;
};

/// Returns the response line for `line`, or nothing when the fault mode swallows it.
std::optional<std::string> respond(const std::string& line, const mapsight::Predictor& model, const Faults& f) {
    if (f.mode == "none") return mapsight::wire::handle_request_line(line, model);
    nlohmann::json req = nlohmann::json::parse(line, nullptr, false);
    const bool ping = req.is_object() && req.value("op", "") == "ping";
    if (ping) return mapsight::wire::handle_request_line(line, model);
    const auto id = req.is_object() && req.contains("id") && req["id"].is_number_integer() ? req["id"].get<std::int64_t>() : -1;
    if (f.mode == "garbage") return std::string("this is not json");
    if (f.mode == "silent") return std::nullopt;
    if (f.mode == "error") return nlohmann::json{{"id", id}, {"error", "injected failure"}}.dump();
    return mapsight::wire::handle_request_line(line, model);
}

int serve_stream(FILE* in, FILE* out, const mapsight::Predictor& model, const Faults& f, int& answered) {
    char* buf = nullptr;
    std::size_t cap = 0;
    ssize_t len;
    while ((len = getline(&buf, &cap, in)) > 0) {
        std::string line(buf, static_cast<std::size_t>(len));
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        if (line.empty()) continue;
        if (auto reply = respond(line, model, f)) {
            std::fputs(reply->c_str(), out);
            std::fputc('\n', out);
            std::fflush(out);
        }
        if (f.exit_after >= 0 && ++answered >= f.exit_after) {
            std::free(buf);
            return 1;
        }
    }
    std::free(buf);
    return 0;
}

int serve_tcp(const std::string& addr, const mapsight::Predictor& model, const Faults& f) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        std::fprintf(stderr, "mock-service: error: usage: --tcp host:port\n");
        return 2;
    }
    const std::string host = addr.substr(0, colon);
    const int port = std::stoi(addr.substr(colon + 1));
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.empty() ? "127.0.0.1" : host.c_str(), &sa.sin_addr) != 1 ||
        ::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0 || ::listen(fd, 4) != 0) {
        std::fprintf(stderr, "mock-service: error: cannot listen on %s: %s\n", addr.c_str(), std::strerror(errno));
        return 1;
    }
    std::fprintf(stderr, "mock-service: listening on %s\n", addr.c_str());
    int answered = 0;
    for (;;) {
        const int conn = ::accept(fd, nullptr, nullptr);
        if (conn < 0) continue;
        FILE* in = ::fdopen(conn, "r");
        FILE* out = ::fdopen(::dup(conn), "w");
        const int stop = serve_stream(in, out, model, f, answered);
        std::fclose(in);
        std::fclose(out);
        if (stop) return 0;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nearest-fill inpainting service over the mapsight line protocol"};
    std::string tcp;
    Faults faults;
    app.add_flag("--stdio", "Serve on stdin/stdout (default)");
    app.add_option("--tcp", tcp, "Listen on host:port instead of stdio");
    app.add_option("--fault", faults.mode, "none | garbage | silent | error")
        ->check(CLI::IsMember({"none", "garbage", "silent", "error"}));
    app.add_option("--exit-after", faults.exit_after, "Exit after answering this many lines");
    CLI11_PARSE(app, argc, argv);

    const mapsight::NearestFillPredictor model;
    if (!tcp.empty()) return serve_tcp(tcp, model, faults);
    int answered = 0;
    serve_stream(stdin, stdout, model, faults, answered);
    return 0;
}
