#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include "decomcam/dump.hpp"
#include "decomcam/error.hpp"
#include "decomcam/model.hpp"
#include "decomcam/tensor.hpp"

// Scoring wire protocol (all integers little-endian). Each frame is a u32
// payload length followed by the payload.
//   request payload:  u32 C=3 | u32 H | u32 W | f32[C*H*W] | u32 prompt_len | prompt UTF-8
//   response payload: u8 status
//                     status 0: f32 score
//                     status 1: u16 error code | u32 msg_len | msg UTF-8

namespace decomcam {

inline constexpr std::uint32_t max_score_frame_bytes = 64u << 20;

enum class ScoreErrorCode : std::uint16_t {
    malformed_frame = 1,
    empty_prompt = 2,
    oversized = 3,
    model_failure = 4,
};

struct ScoreRequest {
    Image image;
    std::string prompt;
};

struct ScoreResponse {
    bool ok = false;
    float score = 0.0f;
    std::uint16_t error_code = 0;
    std::string message;
};

namespace wire {

inline std::vector<std::uint8_t> frame(std::vector<std::uint8_t> payload) {
    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + 4);
    bytes::put_u32(out, std::uint32_t(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

inline std::vector<std::uint8_t> encode_request(const Image& img, const std::string& prompt) {
    std::vector<std::uint8_t> p;
    bytes::put_u32(p, 3);
    bytes::put_u32(p, std::uint32_t(img.height()));
    bytes::put_u32(p, std::uint32_t(img.width()));
    for (float v : img.values()) bytes::put_f32(p, v);
    bytes::put_u32(p, std::uint32_t(prompt.size()));
    bytes::put_str(p, prompt);
    return frame(std::move(p));
}

/// Parses a request payload (without the length prefix).
inline ScoreRequest decode_request(std::span<const std::uint8_t> payload) {
    bytes::Reader rd(payload);
    const auto c = rd.u32("channel count");
    if (c != 3) throw format_error("request must carry 3 channels, got " + std::to_string(c), 0);
    const auto h = rd.u32("height");
    const auto w = rd.u32("width");
    const std::uint64_t n = std::uint64_t(3) * h * w;
    if (n > rd.remaining() / 4) throw format_error("truncated image payload", rd.offset());
    std::vector<float> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rd.f32("image");
    const auto len = rd.u32("prompt length");
    ScoreRequest req{Image(h, w, std::move(data)), rd.str(len, "prompt")};
    if (rd.remaining() != 0) throw format_error("trailing bytes in request", rd.offset());
    return req;
}

inline std::vector<std::uint8_t> encode_response(const ScoreResponse& r) {
    std::vector<std::uint8_t> p;
    if (r.ok) {
        bytes::put_u8(p, 0);
        bytes::put_f32(p, r.score);
    } else {
        bytes::put_u8(p, 1);
        bytes::put_u16(p, r.error_code);
        bytes::put_u32(p, std::uint32_t(r.message.size()));
        bytes::put_str(p, r.message);
    }
    return frame(std::move(p));
}

inline ScoreResponse decode_response(std::span<const std::uint8_t> payload) {
    bytes::Reader rd(payload);
    ScoreResponse r;
    const auto status = rd.u8("status");
    if (status == 0) {
        r.ok = true;
        r.score = rd.f32("score");
    } else if (status == 1) {
        r.error_code = rd.u16("error code");
        r.message = rd.str(rd.u32("message length"), "message");
    } else {
        throw format_error("unknown response status " + std::to_string(status), 0);
    }
    if (rd.remaining() != 0) throw format_error("trailing bytes in response", rd.offset());
    return r;
}

} // namespace wire

namespace detail {

inline void send_all(int fd, const std::vector<std::uint8_t>& buf) {
    std::size_t sent = 0;
    while (sent < buf.size()) {
        const auto n = ::send(fd, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) throw io_error("score endpoint: send failed");
        sent += std::size_t(n);
    }
}

inline std::vector<std::uint8_t> recv_exact(int fd, std::size_t count) {
    std::vector<std::uint8_t> buf(count);
    std::size_t got = 0;
    while (got < count) {
        const auto n = ::recv(fd, buf.data() + got, count - got, 0);
        if (n <= 0) throw io_error("score endpoint: connection closed mid-frame");
        got += std::size_t(n);
    }
    return buf;
}

class Socket {
public:
    explicit Socket(int fd) : fd_(fd) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() {
        if (fd_ >= 0) ::close(fd_);
    }
    int get() const noexcept { return fd_; }

private:
    int fd_;
};

inline int connect_tcp(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
        throw io_error("score endpoint: cannot resolve " + host + ":" + port + ": " + gai_strerror(rc));
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw io_error("score endpoint: cannot connect to " + host + ":" + port);
    return fd;
}

} // namespace detail

/// Scorer backed by a local scoring endpoint. One connection per request, so
/// calls share no state.
class RemoteScorer {
public:
    /// address is "host:port".
    explicit RemoteScorer(const std::string& address, bool concurrency_safe = false)
        : concurrency_safe_(concurrency_safe) {
        const auto colon = address.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
            throw invalid_argument("endpoint address must be host:port, got '" + address + "'");
        host_ = address.substr(0, colon);
        port_ = address.substr(colon + 1);
    }

    double score(const Image& img, const ConceptId& concept_id) const {
        detail::Socket sock(detail::connect_tcp(host_, port_));
        detail::send_all(sock.get(), wire::encode_request(img, concept_id));
        const auto header = detail::recv_exact(sock.get(), 4);
        bytes::Reader hr(header);
        const auto len = hr.u32("frame length");
        if (len > max_score_frame_bytes) throw format_error("oversized response frame", 0);
        const auto payload = detail::recv_exact(sock.get(), len);
        const auto r = wire::decode_response(payload);
        if (!r.ok)
            throw error("score endpoint error " + std::to_string(r.error_code) + ": " + r.message);
        return r.score;
    }

    bool concurrency_safe() const noexcept { return concurrency_safe_; }

private:
    std::string host_;
    std::string port_;
    bool concurrency_safe_;
};

} // namespace decomcam
