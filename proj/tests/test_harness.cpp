#include <doctest.h>

#include <sstream>

#include "splitrender/errors.hpp"
#include "splitrender/harness.hpp"

using namespace splitrender;

namespace {

RunConfig worked_example(std::uint32_t frames) {
    RunConfig cfg;
    cfg.spec = PartitionSpec::from_stereo(64, 32, 16, 12, 0.5f);
    cfg.frame_count = frames;
    cfg.net = {2.0, std::numeric_limits<double>::infinity()};
    cfg.cost = CostModel{};
    return cfg;
}

double event_time(const std::vector<TraceEvent>& events, Actor actor, EventKind kind,
                  std::uint64_t frame, int occurrence = 0) {
    for (const auto& e : events) {
        if (e.actor == actor && e.kind == kind && e.frame_id == frame && occurrence-- == 0) {
            return e.t_ms;
        }
    }
    FAIL("event not found: " << event_name(kind) << " frame " << frame);
    return -1.0;
}

RunConfig parse(std::vector<std::string> args) {
    args.insert(args.begin(), "splitrender");
    return parse_cli(args);
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("virtual timeline of the lockstep example") {
    const SimResult r = run_sim(worked_example(3));
    const auto& ev = r.trace;
    using K = EventKind;
    const Actor C = Actor::Client;
    const Actor S = Actor::Server;
    CHECK(event_time(ev, C, K::PoseSend, 0) == 0.0);
    CHECK(event_time(ev, S, K::PoseRecv, 0) == 2.0);
    CHECK(event_time(ev, S, K::ServerDrawBegin, 0) == 2.0);
    CHECK(event_time(ev, S, K::ServerDrawEnd, 0) == 7.0);
    CHECK(event_time(ev, S, K::EncodeEnd, 0) == 10.0);
    CHECK(event_time(ev, S, K::SubframeSendBegin, 0) == 10.0);
    CHECK(event_time(ev, C, K::SubframeFirstByte, 0) == 12.0);
    CHECK(event_time(ev, C, K::SubframeRecv, 0, 1) == 12.0);
    CHECK(event_time(ev, C, K::ClientDrawBegin, 0) == 0.0);
    CHECK(event_time(ev, C, K::ClientDrawEnd, 0) == 6.0);
    CHECK(event_time(ev, C, K::DecodeBegin, 0) == 12.0);
    CHECK(event_time(ev, C, K::DecodeEnd, 0) == 16.0);
    CHECK(event_time(ev, C, K::MergeBegin, 0) == 16.0);
    CHECK(event_time(ev, C, K::Display, 0) == 17.0);
    CHECK(event_time(ev, C, K::PoseSend, 1) == 17.0);
    CHECK(event_time(ev, S, K::ServerDrawBegin, 1) == 19.0);
    CHECK(event_time(ev, C, K::Display, 2) == 51.0);
    for (const auto& rec : r.client) {
        CHECK(rec.total_ms == 17.0);
        CHECK(rec.network_ms == 0.0);
        CHECK(rec.draw_ms == 6.0);
    }
    CHECK(check_lockstep(ev, 3).violations == 0);
}

TEST_CASE("client draw longer than the server path sets the merge start") {
    RunConfig cfg = worked_example(1);
    cfg.cost.client_draw_ms = 20.0;
    const SimResult r = run_sim(cfg);
    CHECK(event_time(r.trace, Actor::Client, EventKind::MergeBegin, 0) == 20.0);
    CHECK(r.client[0].total_ms == 21.0);
}

TEST_CASE("network time grows linearly with payload bytes") {
    RunConfig small = worked_example(2);
    small.timing_only = true;
    small.codec = CodecId::Raw;
    small.net = {0.0, 8.0};
    small.spec = PartitionSpec::from_stereo(256, 128, 32, 24, 0.5f);
    RunConfig large = small;
    large.spec = PartitionSpec::from_stereo(256, 128, 64, 48, 0.5f);
    const SimResult a = run_sim(small);
    const SimResult b = run_sim(large);
    const double bytes_a = static_cast<double>(a.client[0].bytes_received + 2 * 27);
    const double bytes_b = static_cast<double>(b.client[0].bytes_received + 2 * 27);
    CHECK(a.client[0].bytes_received == 2u * 32 * 24 * 3);
    CHECK(a.client[0].network_ms == doctest::Approx(bytes_a / 1000.0));
    CHECK(b.client[0].network_ms / a.client[0].network_ms == doctest::Approx(bytes_b / bytes_a));
    CHECK(b.client[0].total_ms > a.client[0].total_ms);
}

TEST_CASE("virtual runs are bit-reproducible") {
    RunConfig cfg = worked_example(5);
    cfg.net = {1.5, 40.0};
    const SimResult a = run_sim(cfg);
    const SimResult b = run_sim(cfg);
    CHECK(a.client == b.client);
    CHECK(a.server == b.server);
    CHECK(a.trace == b.trace);
}

TEST_CASE("injected pose delay idles the server") {
    RunConfig cfg = worked_example(4);
    cfg.cost.pose_delay_ms[2] = 50.0;
    const SimResult r = run_sim(cfg);
    CHECK(check_lockstep(r.trace, 4).violations == 0);
    const double end1 = event_time(r.trace, Actor::Server, EventKind::SubframeSendEnd, 1);
    const double begin2 = event_time(r.trace, Actor::Server, EventKind::ServerDrawBegin, 2);
    CHECK(begin2 - end1 >= 50.0);
    CHECK(r.client[1].total_ms == 67.0);
    CHECK(r.client[1].pose_ms == 50.0);
}

TEST_CASE("split frames equal native frames under the ideal link") {
    RunConfig cfg = worked_example(3);
    cfg.net = NetModel::ideal();
    cfg.codec = CodecId::Raw;
    CaptureSink split_sink;
    CaptureSink native_sink;
    run_sim(cfg, &split_sink);
    run_native_mode(cfg, &native_sink);
    REQUIRE(split_sink.frames().size() == 3);
    CHECK(split_sink.frames() == native_sink.frames());
}

TEST_CASE("wall-clock sim completes and keeps lockstep") {
    RunConfig cfg = worked_example(3);
    cfg.clock = ClockMode::Wall;
    cfg.net = {1.0, 1000.0};
    const SimResult r = run_sim(cfg);
    CHECK(r.client.size() == 3);
    CHECK(r.server.size() == 3);
    CHECK(check_lockstep(r.trace, 3).violations == 0);
    for (const auto& rec : r.client) {
        CHECK(rec.network_ms > 0.0);
    }
}

TEST_CASE("compare with per-ray costs measures the draw reduction") {
    RunConfig cfg;
    cfg.frame_count = 4;
    cfg.timing_only = true;
    cfg.net = NetModel::ideal();
    cfg.cost = CostModel{0.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, {}};
    const CompareReport rep = run_compare(cfg);
    const double periphery = 1440.0 * 648.0;
    const double fovea = 2.0 * 512.0 * 360.0;
    CHECK(rep.improvement_pct == doctest::Approx(fovea / periphery * 100.0));
    CHECK(rep.split.total.median_ms == doctest::Approx(10.0 * periphery / 1e6));
    CHECK(rep.text.find("native") != std::string::npos);
    CHECK(rep.text.find("split") != std::string::npos);
    CHECK(rep.text.find("improvement") != std::string::npos);
}

TEST_CASE("compare report from fixture medians") {
    std::vector<ClientFrameRecord> native(1);
    native[0].total_ms = 32.2;
    std::vector<ClientFrameRecord> split(1);
    split[0].total_ms = 26.17;
    const CompareReport rep = make_compare_report(native, split, {}, PartitionSpec{});
    CHECK(rep.improvement_pct == doctest::Approx(23.04).epsilon(0.002));
    CHECK(rep.text.find("23.04%") != std::string::npos);
    CHECK(rep.text.find("31 fps") != std::string::npos);
    CHECK(rep.text.find("38 fps") != std::string::npos);
}

TEST_CASE("cli defaults") {
    const RunConfig cfg = parse({"sim"});
    CHECK(cfg.mode == Mode::Sim);
    CHECK(cfg.spec == PartitionSpec{});
    CHECK(cfg.frame_count == 1000);
    CHECK(cfg.codec == CodecId::PredDeflate);
    CHECK(parse({"server"}).port == 7878);
}

TEST_CASE("cli rejects bad input") {
    CHECK_THROWS_AS(parse({"sim", "--fovea", "1300x360"}), UsageError);
    CHECK_THROWS_AS(parse({"sim", "--frames", "0"}), UsageError);
    CHECK_THROWS_AS(parse({"server", "--latency-ms", "5"}), UsageError);
    CHECK_THROWS_AS(parse({"sim", "--bogus"}), UsageError);
    CHECK_THROWS_AS(parse({}), UsageError);
    CHECK_THROWS_AS(parse({"sim", "--full", "2400x"}), UsageError);
    try {
        parse({"sim", "--full", "600x270", "--fovea", "400x400", "--scale", "1.5"});
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("foveal width exceeds eye width") != std::string::npos);
        CHECK(msg.find("foveal height exceeds eye height") != std::string::npos);
    }
}

TEST_CASE("cli endpoint from the environment") {
    const RunConfig env = parse_cli({"splitrender", "client"}, "10.0.0.2", "9000");
    CHECK(env.host == "10.0.0.2");
    CHECK(env.port == 9000);
    const RunConfig flag = parse_cli({"splitrender", "client", "--port", "9100"}, "10.0.0.2", "9000");
    CHECK(flag.port == 9100);
}

TEST_CASE("run_cli exit codes") {
    std::ostringstream out;
    std::ostringstream err;
    CHECK(run_cli({"splitrender", "sim", "--full", "64x32", "--fovea", "16x12", "--frames", "2"},
                  out, err) == 0);
    CHECK(out.str().find("Client profiling") != std::string::npos);
    CHECK(run_cli({"splitrender", "sim", "--frames", "0"}, out, err) == 2);
    CHECK(run_cli({"splitrender", "report"}, out, err) != 0);
}

}
