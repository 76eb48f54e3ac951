#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <future>
#include <string>
#include <thread>

#include "mapsight/errors.hpp"
#include "mapsight/wire.hpp"
#include "support.hpp"

namespace mapsight {
namespace {

using nlohmann::json;
using Kind = PredictorError::Kind;

std::string read_line(int fd) {
    std::string line;
    char ch;
    while (::read(fd, &ch, 1) == 1) {
        if (ch == '\n') return line;
        line.push_back(ch);
    }
    return line;
}

void write_line(int fd, const std::string& s) {
    const std::string l = s + "\n";
    ASSERT_EQ(::write(fd, l.data(), l.size()), static_cast<ssize_t>(l.size()));
}

/// Client over one end of a socket pair; the test drives the other end.
struct Pair {
    int server = -1;
    std::unique_ptr<WirePredictor> client;

    explicit Pair(std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) {
        int fds[2];
        EXPECT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
        server = fds[0];
        client = WirePredictor::from_fds(fds[1], ::dup(fds[1]), {timeout, 4});
    }
    ~Pair() {
        client.reset();
        if (server >= 0) ::close(server);
    }
};

PredictRequest sample_request(std::uint64_t seed) {
    Rng rng(seed);
    const RgbImage img = testing::random_image(rng, 224, 224);
    const PatchMask m = periphery_mask(14, 1);
    return {img, m, 1.5, seed};
}

Kind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const PredictorError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no PredictorError thrown";
    return Kind::service_error;
}

TEST(Base64, KnownVectorsAndErrors) {
    const std::string foo = "foo";
    EXPECT_EQ(wire::base64_encode({reinterpret_cast<const std::uint8_t*>(foo.data()), foo.size()}), "Zm9v");
    const std::vector<std::uint8_t> two = {'h', 'i'};
    EXPECT_EQ(wire::base64_encode(two), "aGk=");
    EXPECT_EQ(wire::base64_decode("aGk="), two);
    EXPECT_TRUE(wire::base64_decode("").empty());
    EXPECT_THROW((void)wire::base64_decode("a*b="), std::invalid_argument);
    EXPECT_THROW((void)wire::base64_decode("abc"), std::invalid_argument);
}

TEST(WireSchema, RequestFieldsAndServerParse) {
    const PredictRequest req = sample_request(1);
    const json j = wire::make_inpaint_request(17, req);
    EXPECT_EQ(j["id"], 17);
    EXPECT_EQ(j["op"], "inpaint");
    ASSERT_EQ(j["mask"].size(), 196u);
    EXPECT_EQ(j["mask"][0], 0);
    EXPECT_EQ(j["mask"][15], 1);
    EXPECT_DOUBLE_EQ(j["noise_sigma"].get<double>(), 1.5);
    EXPECT_EQ(j["seed"], 1);
    const PredictRequest back = wire::parse_inpaint_request(j);
    EXPECT_EQ(back.image, req.image);
    EXPECT_EQ(back.mask, req.mask);
    EXPECT_EQ(back.seed, req.seed);
}

TEST(WireSchema, ResponseParsing) {
    EXPECT_EQ(wire::parse_response(R"({"id":3,"error":"boom"})").error.value(), "boom");
    EXPECT_TRUE(wire::parse_response(R"({"id":0,"pong":true})").pong);
    EXPECT_EQ(kind_of([] { (void)wire::parse_response("not json"); }), Kind::malformed_response);
    EXPECT_EQ(kind_of([] { (void)wire::parse_response(R"({"id":3})"); }), Kind::malformed_response);
    EXPECT_EQ(kind_of([] { (void)wire::parse_response(R"({"id":3,"png_b64":"!!"})"); }), Kind::malformed_response);
}

TEST(ReferenceServer, PingErrorsAndPassthrough) {
    const NearestFillPredictor model;
    EXPECT_EQ(json::parse(wire::handle_request_line(R"({"id":0,"op":"ping"})", model)),
              json::parse(R"({"id":0,"pong":true})"));
    const json bad = json::parse(wire::handle_request_line("{nope", model));
    EXPECT_EQ(bad["id"], -1);
    EXPECT_TRUE(bad.contains("error"));
    EXPECT_TRUE(json::parse(wire::handle_request_line(R"({"id":4,"op":"dance"})", model)).contains("error"));

    PredictRequest req = sample_request(2);
    req.mask = PatchMask(14, 16, true);
    const auto resp = wire::parse_response(wire::handle_request_line(wire::make_inpaint_request(9, req).dump(), model));
    EXPECT_EQ(resp.id, 9);
    EXPECT_EQ(resp.image.value(), req.image);
}

TEST(WireClient, IdCorrelationUnderReversedResponses) {
    Pair p;
    const NearestFillPredictor model;
    std::thread server([&] {
        const std::string a = read_line(p.server);
        const std::string b = read_line(p.server);
        write_line(p.server, wire::handle_request_line(b, model));
        write_line(p.server, wire::handle_request_line(a, model));
    });
    const PredictRequest ra = sample_request(3), rb = sample_request(4);
    auto fa = std::async(std::launch::async, [&] { return predict(*p.client, ra); });
    auto fb = std::async(std::launch::async, [&] { return predict(*p.client, rb); });
    const RgbImage a = fa.get(), b = fb.get();
    server.join();
    EXPECT_EQ(a, predict(model, ra));
    EXPECT_EQ(b, predict(model, rb));
}

TEST(WireClient, TimeoutIsReported) {
    Pair p(std::chrono::milliseconds(200));
    std::thread server([&] { (void)read_line(p.server); });
    EXPECT_EQ(kind_of([&] { (void)p.client->reconstruct(sample_request(5)); }), Kind::timeout);
    ::shutdown(p.server, SHUT_RDWR);
    server.join();
}

TEST(WireClient, GarbageIsMalformed) {
    Pair p;
    std::thread server([&] {
        (void)read_line(p.server);
        write_line(p.server, "this is not json");
    });
    EXPECT_EQ(kind_of([&] { (void)p.client->reconstruct(sample_request(6)); }), Kind::malformed_response);
    server.join();
}

TEST(WireClient, ErrorResponseIsServiceError) {
    Pair p;
    std::thread server([&] {
        const json req = json::parse(read_line(p.server));
        write_line(p.server, json{{"id", req["id"]}, {"error", "out of memory"}}.dump());
    });
    EXPECT_EQ(kind_of([&] { (void)p.client->reconstruct(sample_request(7)); }), Kind::service_error);
    server.join();
}

TEST(WireClient, ClosedServiceIsUnavailable) {
    Pair p;
    std::thread server([&] {
        (void)read_line(p.server);
        ::close(p.server);
        p.server = -1;
    });
    EXPECT_EQ(kind_of([&] { (void)p.client->reconstruct(sample_request(8)); }), Kind::unavailable);
    server.join();
    EXPECT_EQ(kind_of([&] { (void)p.client->reconstruct(sample_request(8)); }), Kind::unavailable);
}

TEST(WireClient, ConnectFailuresAreUnavailable) {
    // Bind an ephemeral port, then close it so nothing listens there.
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof(sa);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)), 0);
    ASSERT_EQ(::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len), 0);
    ::close(fd);
    const std::string addr = "127.0.0.1:" + std::to_string(ntohs(sa.sin_port));
    EXPECT_EQ(kind_of([&] { (void)WirePredictor::connect(addr); }), Kind::unavailable);
    EXPECT_EQ(kind_of([&] { (void)WirePredictor::connect("no-port-here"); }), Kind::unavailable);
}

TEST(WireClient, TcpRoundTripWithInProcessServer) {
    const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof(sa);
    ASSERT_EQ(::bind(lfd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)), 0);
    ASSERT_EQ(::listen(lfd, 1), 0);
    ASSERT_EQ(::getsockname(lfd, reinterpret_cast<sockaddr*>(&sa), &len), 0);
    const NearestFillPredictor model;
    std::thread server([&] {
        const int c = ::accept(lfd, nullptr, nullptr);
        for (int i = 0; i < 2; ++i) write_line(c, wire::handle_request_line(read_line(c), model));
        ::close(c);
    });
    {
        auto client = WirePredictor::connect("tcp:127.0.0.1:" + std::to_string(ntohs(sa.sin_port)));
        client->ping();
        const PredictRequest req = sample_request(9);
        EXPECT_EQ(predict(*client, req), predict(model, req));
    }
    server.join();
    ::close(lfd);
}

TEST(WireClient, StdioSpawnOfMockService) {
    auto client = WirePredictor::connect(std::string("stdio:") + MAPSIGHT_MOCK_SERVICE);
    client->ping();
    const PredictRequest req = sample_request(10);
    EXPECT_EQ(predict(*client, req), predict(NearestFillPredictor{}, req));
    PredictRequest all = req;
    all.mask = PatchMask(14, 16, true);
    all.noise_sigma = 0;
    EXPECT_EQ(client->reconstruct(all), req.image);
}

TEST(WireClient, StdioMockFaultModes) {
    auto garbage = WirePredictor::connect(std::string("stdio:") + MAPSIGHT_MOCK_SERVICE + " --fault garbage");
    EXPECT_EQ(kind_of([&] { (void)garbage->reconstruct(sample_request(11)); }), Kind::malformed_response);
    auto dies = WirePredictor::connect(std::string("stdio:") + MAPSIGHT_MOCK_SERVICE + " --fault silent --exit-after 1");
    EXPECT_EQ(kind_of([&] { (void)dies->reconstruct(sample_request(12)); }), Kind::unavailable);
    EXPECT_EQ(kind_of([] { (void)WirePredictor::connect("stdio:/nonexistent/service-binary")->ping(); }),
              Kind::unavailable);
}

}  // namespace
}  // namespace mapsight
