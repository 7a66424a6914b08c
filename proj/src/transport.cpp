#include "splitrender/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "splitrender/errors.hpp"

namespace splitrender {

double NetModel::transmit_ms(std::size_t bytes) const {
    if (std::isinf(bandwidth_mbps)) {
        return 0.0;
    }
    return static_cast<double>(bytes) * 8.0 / (bandwidth_mbps * 1e6) * 1e3;
}

void validate(const NetModel& net) {
    if (!(net.latency_ms >= 0.0) || !std::isfinite(net.latency_ms)) {
        throw ParameterError("net latency must be a finite value >= 0 ms");
    }
    if (!(net.bandwidth_mbps > 0.0)) {
        throw ParameterError("net bandwidth must be > 0 Mbps");
    }
}

LinkSchedule::Delivery LinkSchedule::send(double send_ms, std::size_t bytes) {
    const double start = std::max(send_ms, link_free_ms_);
    const double tx = net_.transmit_ms(bytes);
    link_free_ms_ = start + tx;
    return {start + net_.latency_ms, start + tx + net_.latency_ms};
}

namespace {

using SteadyClock = std::chrono::steady_clock;

SteadyClock::duration to_duration(double ms) {
    return std::chrono::duration_cast<SteadyClock::duration>(
        std::chrono::duration<double, std::milli>(ms));
}

/// One direction of an in-memory link.
class Pipe {
public:
    Pipe(NetModel net, std::size_t max_read) : net_(net), max_read_(std::max<std::size_t>(1, max_read)) {}

    void write(std::span<const std::uint8_t> data) {
        std::lock_guard lock(mutex_);
        if (reader_gone_) {
            throw ConnectionError("peer closed the connection");
        }
        if (write_closed_) {
            throw ConnectionError("write after shutdown");
        }
        const auto now = SteadyClock::now();
        const auto start = std::max(now, link_free_);
        link_free_ = start + to_duration(net_.transmit_ms(data.size()));
        chunks_.push_back({link_free_ + to_duration(net_.latency_ms),
                           std::vector<std::uint8_t>(data.begin(), data.end()), 0});
        cv_.notify_all();
    }

    std::size_t read(std::span<std::uint8_t> out) {
        if (out.empty()) {
            return 0;
        }
        std::unique_lock lock(mutex_);
        for (;;) {
            if (!chunks_.empty()) {
                Chunk& front = chunks_.front();
                if (SteadyClock::now() >= front.deliver_at) {
                    const std::size_t n = std::min(
                        {out.size(), front.bytes.size() - front.offset, max_read_});
                    std::memcpy(out.data(), front.bytes.data() + front.offset, n);
                    front.offset += n;
                    if (front.offset == front.bytes.size()) {
                        chunks_.pop_front();
                    }
                    return n;
                }
                cv_.wait_until(lock, front.deliver_at);
                continue;
            }
            if (write_closed_) {
                return 0;
            }
            cv_.wait(lock);
        }
    }

    void close_write() {
        std::lock_guard lock(mutex_);
        write_closed_ = true;
        cv_.notify_all();
    }

    void close_read() {
        std::lock_guard lock(mutex_);
        reader_gone_ = true;
    }

private:
    struct Chunk {
        SteadyClock::time_point deliver_at;
        std::vector<std::uint8_t> bytes;
        std::size_t offset = 0;
    };

    NetModel net_;
    std::size_t max_read_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Chunk> chunks_;
    SteadyClock::time_point link_free_{};
    bool write_closed_ = false;
    bool reader_gone_ = false;
};

class MemoryStream final : public ByteStream {
public:
    MemoryStream(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
        : in_(std::move(in)), out_(std::move(out)) {}

    ~MemoryStream() override {
        out_->close_write();
        in_->close_read();
    }

    std::size_t read_some(std::span<std::uint8_t> out) override { return in_->read(out); }
    void write_all(std::span<const std::uint8_t> data) override { out_->write(data); }
    void shutdown_write() override { out_->close_write(); }

private:
    std::shared_ptr<Pipe> in_;
    std::shared_ptr<Pipe> out_;
};

std::string errno_text(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) {
        hints.ai_flags = AI_PASSIVE;
    }
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
    if (rc != 0) {
        throw ConnectionError("cannot resolve " + host + ": " + gai_strerror(rc));
    }
    return res;
}

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_memory_duplex(
    NetModel net, std::size_t max_read_chunk) {
    validate(net);
    auto a_to_b = std::make_shared<Pipe>(net, max_read_chunk);
    auto b_to_a = std::make_shared<Pipe>(net, max_read_chunk);
    return {std::make_unique<MemoryStream>(b_to_a, a_to_b),
            std::make_unique<MemoryStream>(a_to_b, b_to_a)};
}

TcpStream::TcpStream(int fd) : fd_(fd) {
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpStream::~TcpStream() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::size_t TcpStream::read_some(std::span<std::uint8_t> out) {
    for (;;) {
        const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
        if (n >= 0) {
            return static_cast<std::size_t>(n);
        }
        if (errno != EINTR) {
            throw ConnectionError(errno_text("recv"));
        }
    }
}

void TcpStream::write_all(std::span<const std::uint8_t> data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ConnectionError(errno_text("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

void TcpStream::shutdown_write() { ::shutdown(fd_, SHUT_WR); }

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
    addrinfo* res = resolve(host, port, true);
    std::string last_error = "no usable address";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_error = errno_text("socket");
            continue;
        }
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 1) == 0) {
            fd_ = fd;
            break;
        }
        last_error = errno_text("bind/listen");
        ::close(fd);
    }
    freeaddrinfo(res);
    if (fd_ < 0) {
        throw ConnectionError("cannot listen on " + host + ":" + std::to_string(port) + " (" +
                              last_error + ")");
    }
    sockaddr_storage addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    if (addr.ss_family == AF_INET) {
        port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else {
        port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

std::unique_ptr<TcpStream> TcpListener::accept() {
    for (;;) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0) {
            return std::make_unique<TcpStream>(fd);
        }
        if (errno != EINTR) {
            throw ConnectionError(errno_text("accept"));
        }
    }
}

std::unique_ptr<TcpStream> connect_tcp(const std::string& host, std::uint16_t port, int retry_ms) {
    const auto deadline = SteadyClock::now() + std::chrono::milliseconds(retry_ms);
    for (;;) {
        addrinfo* res = resolve(host, port, false);
        std::string last_error = "no usable address";
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) {
                last_error = errno_text("socket");
                continue;
            }
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                freeaddrinfo(res);
                return std::make_unique<TcpStream>(fd);
            }
            last_error = errno_text("connect");
            ::close(fd);
        }
        freeaddrinfo(res);
        if (SteadyClock::now() >= deadline) {
            throw ConnectionError("cannot connect to " + host + ":" + std::to_string(port) +
                                  " (" + last_error + ")");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

}  // namespace splitrender
