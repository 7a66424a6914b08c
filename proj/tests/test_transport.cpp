#include <doctest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "splitrender/errors.hpp"
#include "splitrender/transport.hpp"
#include "splitrender/wire.hpp"

using namespace splitrender;

TEST_SUITE("transport") {

TEST_CASE("transmit time follows bandwidth") {
    const NetModel net{2.0, 8.0};
    CHECK(net.transmit_ms(1000) == doctest::Approx(1.0));
    CHECK(NetModel::ideal().transmit_ms(1 << 20) == 0.0);
    CHECK_NOTHROW(validate(net));
    CHECK_THROWS_AS(validate(NetModel{-1.0, 10.0}), ParameterError);
    CHECK_THROWS_AS(validate(NetModel{1.0, 0.0}), ParameterError);
    CHECK_THROWS_AS(validate(NetModel{std::nan(""), 10.0}), ParameterError);
}

TEST_CASE("messages serialize on the link") {
    LinkSchedule link(NetModel{2.0, 8.0});
    const auto a = link.send(0.0, 1000);
    CHECK(a.first_byte_ms == doctest::Approx(2.0));
    CHECK(a.last_byte_ms == doctest::Approx(3.0));
    const auto b = link.send(0.5, 1000);
    CHECK(b.first_byte_ms == doctest::Approx(3.0));
    CHECK(b.last_byte_ms == doctest::Approx(4.0));
    const auto c = link.send(10.0, 0);
    CHECK(c.first_byte_ms == doctest::Approx(12.0));
    CHECK(c.last_byte_ms == doctest::Approx(12.0));
}

TEST_CASE("memory duplex carries bytes both ways") {
    auto [a, b] = make_memory_duplex();
    const std::vector<std::uint8_t> ping{1, 2, 3};
    const std::vector<std::uint8_t> pong{4, 5};
    a->write_all(ping);
    b->write_all(pong);
    std::vector<std::uint8_t> buf(8);
    CHECK(b->read_some(buf) == 3);
    CHECK(std::equal(ping.begin(), ping.end(), buf.begin()));
    CHECK(a->read_some(buf) == 2);
    a->shutdown_write();
    CHECK(b->read_some(buf) == 0);
}

TEST_CASE("memory duplex applies latency") {
    auto [a, b] = make_memory_duplex(NetModel{30.0, 1e6});
    const auto t0 = std::chrono::steady_clock::now();
    a->write_all(std::vector<std::uint8_t>{1});
    std::vector<std::uint8_t> buf(1);
    REQUIRE(b->read_some(buf) == 1);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms >= 29.0);
}

TEST_CASE("writing after the peer is gone fails") {
    auto [a, b] = make_memory_duplex();
    b.reset();
    CHECK_THROWS_AS(a->write_all(std::vector<std::uint8_t>{1}), ConnectionError);
}

TEST_CASE("tcp loopback round trip") {
    TcpListener listener("127.0.0.1", 0);
    REQUIRE(listener.port() != 0);
    std::thread server([&] {
        auto conn = listener.accept();
        MessageChannel ch(*conn);
        while (auto m = ch.receive()) {
            ch.send(*m);
        }
        ch.close_write();
    });
    auto client = connect_tcp("127.0.0.1", listener.port(), 2000);
    MessageChannel ch(*client);
    SubframeMsg s;
    s.frame_id = 9;
    s.payload.assign(200000, 0x5A);
    ch.send(s);
    ch.send(EndMsg{9});
    ch.close_write();
    auto r1 = ch.receive();
    auto r2 = ch.receive();
    CHECK_FALSE(ch.receive());
    server.join();
    REQUIRE(r1);
    REQUIRE(r2);
    CHECK(std::get<SubframeMsg>(*r1) == s);
    CHECK(std::get<EndMsg>(*r2).frame_id == 9);
}

TEST_CASE("connecting to a closed port fails") {
    std::uint16_t port = 0;
    {
        TcpListener probe("127.0.0.1", 0);
        port = probe.port();
    }
    CHECK_THROWS_AS(connect_tcp("127.0.0.1", port, 0), ConnectionError);
}

}
