#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "splitrender/errors.hpp"
#include "splitrender/metrics.hpp"

using namespace splitrender;

namespace {

ClientFrameRecord record(std::uint64_t id, double total, double network = 1.0,
                         std::uint64_t bytes = 1000) {
    ClientFrameRecord r;
    r.frame_id = id;
    r.draw_ms = total / 2;
    r.network_ms = network;
    r.decode_ms = 0.5;
    r.merge_ms = 0.25;
    r.pose_ms = 0.125;
    r.total_ms = total;
    r.bytes_received = bytes;
    return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("linear quantiles") {
    const std::vector<double> x{4.0, 1.0, 3.0, 2.0};
    CHECK(median(x) == doctest::Approx(2.5));
    CHECK(iqr(x) == doctest::Approx(1.5));
    CHECK(quantile(x, 0.0) == 1.0);
    CHECK(quantile(x, 1.0) == 4.0);
    const std::vector<double> one{7.0};
    CHECK(median(one) == 7.0);
    CHECK(iqr(one) == 0.0);
    CHECK_THROWS_AS(median(std::vector<double>{}), ArgumentError);
    CHECK_THROWS_AS(quantile(x, 1.5), ArgumentError);
}

TEST_CASE("throughput and improvement arithmetic") {
    CHECK(mbps(441509, 4.99e-3) == doctest::Approx(707.83).epsilon(0.0002));
    CHECK(improvement_pct(32.2, 26.17) == doctest::Approx(23.04).epsilon(0.002));
    CHECK(display_fps(32.2) == 31);
    CHECK(display_fps(26.17) == 38);
    CHECK_THROWS_AS(mbps(10, 0.0), ArgumentError);
    CHECK_THROWS_AS(improvement_pct(0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(improvement_pct(1.0, -1.0), ArgumentError);
}

TEST_CASE("property: improvement falls as the split time grows") {
    double last = improvement_pct(40.0, 1.0);
    for (double split = 2.0; split < 80.0; split += 1.0) {
        const double cur = improvement_pct(40.0, split);
        REQUIRE(cur < last);
        last = cur;
    }
    CHECK(improvement_pct(40.0, 40.0) == 0.0);
}

TEST_CASE("property: summaries ignore record order") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> ms(1.0, 40.0);
    std::vector<ClientFrameRecord> recs;
    for (std::uint64_t i = 0; i < 101; ++i) {
        recs.push_back(record(i, ms(rng), ms(rng) / 10.0, 1000 + rng() % 5000));
    }
    const Summary a = summarize(recs);
    std::shuffle(recs.begin(), recs.end(), rng);
    const Summary b = summarize(recs);
    CHECK(a.total.median_ms == b.total.median_ms);
    CHECK(a.total.iqr_ms == b.total.iqr_ms);
    CHECK(a.network.median_ms == b.network.median_ms);
    CHECK(a.mbps == b.mbps);
    CHECK(a.frame_count == 101);
}

TEST_CASE("single record summary") {
    const std::vector<ClientFrameRecord> recs{record(0, 20.0, 2.0, 250000)};
    const Summary s = summarize(recs);
    CHECK(s.frame_count == 1);
    CHECK(s.total.median_ms == 20.0);
    CHECK(s.total.iqr_ms == 0.0);
    CHECK(s.median_fps == doctest::Approx(50.0));
    REQUIRE(s.mbps);
    CHECK(*s.mbps == doctest::Approx(1000.0));
}

TEST_CASE("throughput skips frames without network time") {
    const std::vector<ClientFrameRecord> recs{record(0, 10.0, 0.0, 0), record(1, 10.0, 0.0, 0)};
    CHECK_FALSE(summarize(recs).mbps);
}

TEST_CASE("tables carry every stage") {
    std::vector<ClientFrameRecord> recs{record(0, 10.0), record(1, 12.0)};
    std::vector<ServerFrameTiming> srv{{0, 4.0, 1.0, 0.5, 900}, {1, 4.5, 1.5, 0.5, 950}};
    Summary s = summarize(recs, srv);
    s.server_dims = "512x360";
    const std::string table = render_table(s);
    for (const char* word : {"Draw", "Network", "Decode", "Merge", "Pose", "Total", "Mbps",
                             "Encode", "Send", "512x360"}) {
        CHECK(table.find(word) != std::string::npos);
    }
    const std::string kv = render_key_values(s);
    CHECK(kv.find("total_median_ms=11") != std::string::npos);
    const Summary only = summarize_server(srv);
    CHECK(only.frame_count == 0);
    REQUIRE(only.server_frame_count);
    CHECK(*only.server_frame_count == 2);
}

TEST_CASE("csv round trip") {
    std::vector<ClientFrameRecord> recs{record(0, 10.1), record(1, 1.0 / 3.0, 0.07, 12)};
    const std::string text = to_csv(recs);
    CHECK(text.rfind(kClientCsvHeader, 0) == 0);
    CHECK(parse_client_csv(text) == recs);

    std::vector<ServerFrameTiming> srv{{0, 4.0, 1.0, 0.5, 900}, {7, 0.1, 0.2, 0.3, 4}};
    CHECK(parse_server_csv(to_csv(srv)) == srv);

    const auto dir = std::filesystem::temp_directory_path() / "splitrender_metrics_test";
    std::filesystem::create_directories(dir);
    write_csv(std::span<const ClientFrameRecord>(recs), dir / "c.csv");
    write_csv(std::span<const ServerFrameTiming>(srv), dir / "s.csv");
    CHECK(read_client_csv(dir / "c.csv") == recs);
    CHECK(read_server_csv(dir / "s.csv") == srv);
    std::filesystem::remove_all(dir);
}

TEST_CASE("malformed csv is rejected") {
    CHECK_THROWS_AS(parse_client_csv("frame,draw\n1,2\n"), ArgumentError);
    CHECK_THROWS_AS(parse_client_csv(std::string(kClientCsvHeader) + "\n1,2,3\n"), ArgumentError);
    CHECK_THROWS_AS(parse_server_csv(std::string(kServerCsvHeader) + "\n1,x,3,4,5\n"),
                    ArgumentError);
}

}
