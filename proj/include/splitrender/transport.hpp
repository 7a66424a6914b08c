#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "splitrender/stream.hpp"

namespace splitrender {

/// Deterministic link model: a message written at t is delivered at
/// t' + latency + bits / bandwidth, where t' is when the link becomes free
/// (messages serialize on the link).
struct NetModel {
    double latency_ms = 2.0;
    double bandwidth_mbps = 500.0;

    static NetModel ideal() { return {0.0, std::numeric_limits<double>::infinity()}; }

    /// Serialization time of `bytes` on the link, in milliseconds.
    double transmit_ms(std::size_t bytes) const;
};

void validate(const NetModel& net);

/// Tracks when a serialized link is busy and computes delivery times.
class LinkSchedule {
public:
    explicit LinkSchedule(NetModel net) : net_(net) {}

    struct Delivery {
        double first_byte_ms = 0.0;
        double last_byte_ms = 0.0;
    };

    Delivery send(double send_ms, std::size_t bytes);

private:
    NetModel net_;
    double link_free_ms_ = 0.0;
};

/// Connected pair of in-memory streams. Writes on one end become readable on
/// the other after the NetModel delay. `max_read_chunk` caps how many bytes a
/// single read_some returns, which lets tests force arbitrary segmentation.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_memory_duplex(
    NetModel net = NetModel::ideal(),
    std::size_t max_read_chunk = std::numeric_limits<std::size_t>::max());

/// Connected TCP socket with Nagle disabled.
class TcpStream final : public ByteStream {
public:
    explicit TcpStream(int fd);
    ~TcpStream() override;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    std::size_t read_some(std::span<std::uint8_t> out) override;
    void write_all(std::span<const std::uint8_t> data) override;
    void shutdown_write() override;

private:
    int fd_;
};

class TcpListener {
public:
    /// Binds and listens; port 0 picks an ephemeral port. Throws
    /// ConnectionError on failure.
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    std::unique_ptr<TcpStream> accept();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// Connects, retrying for up to `retry_ms` while the server comes up.
std::unique_ptr<TcpStream> connect_tcp(const std::string& host, std::uint16_t port,
                                       int retry_ms = 0);

}  // namespace splitrender
