#include <gtest/gtest.h>

#include <future>

#include "fake_score_server.hpp"
#include "oracles.hpp"

using namespace decomcam;
using testing_support::FakeScoreServer;

namespace {

std::vector<std::uint8_t> payload_of(const std::vector<std::uint8_t>& framed) {
    return {framed.begin() + 4, framed.end()};
}

FakeScoreServer::Handler toy_handler(const ToyCnn& m) {
    return [&m](const ScoreRequest& r) { return ScoreResponse{true, float(m.score(r.image, r.prompt)), 0, ""}; };
}

std::vector<std::uint8_t> raw_exchange(const std::string& address, const std::vector<std::uint8_t>& bytes_out) {
    const auto colon = address.rfind(':');
    detail::Socket s(detail::connect_tcp(address.substr(0, colon), address.substr(colon + 1)));
    detail::send_all(s.get(), bytes_out);
    const auto header = detail::recv_exact(s.get(), 4);
    const std::uint32_t len = header[0] | header[1] << 8 | header[2] << 16 | std::uint32_t(header[3]) << 24;
    return detail::recv_exact(s.get(), len);
}

} // namespace

TEST(Wire, RequestLayout) {
    Image img(1, 2);
    img(0, 0, 1) = 1.0f;
    const auto f = wire::encode_request(img, "cat");
    ASSERT_EQ(f.size(), 4u + 12u + 24u + 4u + 3u);
    EXPECT_EQ(f[0], 43);
    EXPECT_EQ(f[4], 3);
    EXPECT_EQ(f[8], 1);
    EXPECT_EQ(f[12], 2);
    EXPECT_EQ(f[16 + 7], 0x3f); // 1.0f little-endian high byte
    EXPECT_EQ(f[40], 3);
    EXPECT_EQ(std::string(f.end() - 3, f.end()), "cat");
}

TEST(Wire, RequestRoundTrip) {
    const Image img = oracle::random_image(5, 7, 1);
    const auto req = wire::decode_request(payload_of(wire::encode_request(img, "a photo of a dog")));
    EXPECT_EQ(req.image, img);
    EXPECT_EQ(req.prompt, "a photo of a dog");
}

TEST(Wire, RequestErrors) {
    auto p = payload_of(wire::encode_request(Image(2, 2), "x"));
    auto bad = p;
    bad[0] = 4;
    try {
        wire::decode_request(bad);
        FAIL();
    } catch (const format_error& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
    EXPECT_THROW(wire::decode_request(std::vector<std::uint8_t>(p.begin(), p.begin() + 20)), format_error);
    p.push_back(0);
    EXPECT_THROW(wire::decode_request(p), format_error);
}

TEST(Wire, ResponseRoundTrip) {
    const auto ok = wire::decode_response(payload_of(wire::encode_response({true, 0.3125f, 0, ""})));
    EXPECT_TRUE(ok.ok);
    EXPECT_EQ(ok.score, 0.3125f);
    const auto err = wire::decode_response(payload_of(wire::encode_response({false, 0.0f, 4, "gpu on fire"})));
    EXPECT_FALSE(err.ok);
    EXPECT_EQ(err.error_code, 4);
    EXPECT_EQ(err.message, "gpu on fire");
}

TEST(Wire, ResponseErrors) {
    EXPECT_THROW(wire::decode_response(std::vector<std::uint8_t>{7, 0, 0, 0, 0}), format_error);
    EXPECT_THROW(wire::decode_response(std::vector<std::uint8_t>{0, 0, 0}), format_error);
    EXPECT_THROW(wire::decode_response(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 9}), format_error);
    EXPECT_THROW(wire::decode_response(std::vector<std::uint8_t>{}), format_error);
}

TEST(RemoteScorer, AddressValidation) {
    EXPECT_THROW(RemoteScorer("localhost"), invalid_argument);
    EXPECT_THROW(RemoteScorer(":80"), invalid_argument);
    EXPECT_THROW(RemoteScorer("host:"), invalid_argument);
    EXPECT_NO_THROW(RemoteScorer("127.0.0.1:9"));
}

TEST(RemoteScorer, MatchesDumpScore) {
    const ToyCnn m = synthetic::planted_model();
    FakeScoreServer server(toy_handler(m));
    const RemoteScorer remote(server.address());
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto p = synthetic::planted_sample(seed);
        TensorDump d;
        d.score = float(m.score(p.image, synthetic::planted_concept));
        EXPECT_NEAR(remote.score(p.image, synthetic::planted_concept), d.score, 1e-5);
    }
    EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteScorer, EmptyPromptIsAnErrorFrame) {
    const ToyCnn m = synthetic::planted_model();
    FakeScoreServer server(toy_handler(m));
    try {
        RemoteScorer(server.address()).score(Image(57, 57), "");
        FAIL();
    } catch (const error& e) {
        EXPECT_NE(std::string(e.what()).find("error 2"), std::string::npos) << e.what();
    }
}

TEST(RemoteScorer, MalformedAndOversizedFrames) {
    FakeScoreServer server([](const ScoreRequest&) { return ScoreResponse{true, 1.0f, 0, ""}; });
    auto bad = wire::encode_request(Image(2, 2), "x");
    bad[4] = 9;
    auto r = wire::decode_response(raw_exchange(server.address(), bad));
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.error_code, std::uint16_t(ScoreErrorCode::malformed_frame));

    std::vector<std::uint8_t> huge;
    bytes::put_u32(huge, max_score_frame_bytes + 1);
    r = wire::decode_response(raw_exchange(server.address(), huge));
    EXPECT_EQ(r.error_code, std::uint16_t(ScoreErrorCode::oversized));
}

TEST(RemoteScorer, BadResponseStatusIsFormatError) {
    FakeScoreServer server({}, [](const ScoreRequest&) { return wire::frame({5}); });
    EXPECT_THROW(RemoteScorer(server.address()).score(Image(2, 2), "x"), format_error);
}

TEST(RemoteScorer, OversizedResponseRejected) {
    FakeScoreServer server({}, [](const ScoreRequest&) {
        std::vector<std::uint8_t> f;
        bytes::put_u32(f, max_score_frame_bytes + 1);
        return f;
    });
    EXPECT_THROW(RemoteScorer(server.address()).score(Image(2, 2), "x"), format_error);
}

TEST(RemoteScorer, TruncatedResponseIsIoError) {
    FakeScoreServer server({}, [](const ScoreRequest&) { return std::vector<std::uint8_t>{5, 0, 0, 0, 0}; });
    EXPECT_THROW(RemoteScorer(server.address()).score(Image(2, 2), "x"), io_error);
}

TEST(RemoteScorer, ConnectionRefusedIsIoError) {
    std::string address;
    {
        FakeScoreServer server([](const ScoreRequest&) { return ScoreResponse{}; });
        address = server.address();
    }
    EXPECT_THROW(RemoteScorer(address).score(Image(2, 2), "x"), io_error);
}

TEST(RemoteScorer, ConcurrentDuplicatesAgree) {
    const ToyCnn m = synthetic::planted_model();
    FakeScoreServer server(toy_handler(m));
    const RemoteScorer remote(server.address(), true);
    const auto p = synthetic::planted_sample(4);
    std::vector<std::future<double>> f;
    for (int i = 0; i < 8; ++i)
        f.push_back(std::async(std::launch::async, [&] { return remote.score(p.image, synthetic::planted_concept); }));
    const double first = f[0].get();
    for (std::size_t i = 1; i < f.size(); ++i) EXPECT_EQ(f[i].get(), first);
}

TEST(RemoteScorer, DrivesExplainWithQPlusOneRequests) {
    const ToyCnn m = synthetic::planted_model();
    FakeScoreServer server(toy_handler(m));
    const RemoteScorer remote(server.address());
    const auto p = synthetic::planted_sample(5);
    const auto pr = m.probe(p.image, synthetic::planted_concept);
    DecomConfig cfg;
    cfg.blur = synthetic::scaled_blur(57);
    const auto ex = explain_stacks(remote, pr.activations, pr.gradients, p.image, synthetic::planted_concept, cfg);
    EXPECT_EQ(std::size_t(server.requests()), ex.ossms.count() + 1);
    const auto local = explain(m, m, p.image, synthetic::planted_concept, cfg);
    for (std::size_t q = 0; q < ex.deltas.size(); ++q) EXPECT_NEAR(ex.deltas[q].delta, local.deltas[q].delta, 1e-4);
}
