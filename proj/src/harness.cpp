#include "splitrender/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "splitrender/errors.hpp"

namespace splitrender {

double CostModel::client_draw(std::uint64_t rays) const {
    return client_draw_ms + client_ms_per_mray * static_cast<double>(rays) / 1e6;
}

double CostModel::server_draw(std::uint64_t rays) const {
    return server_draw_ms + server_ms_per_mray * static_cast<double>(rays) / 1e6;
}

namespace {

std::string dims_text(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

SessionParams session_of(const RunConfig& config) {
    SessionParams s;
    s.spec = config.spec;
    s.codec = config.codec;
    s.scene = config.scene;
    s.path = config.path;
    s.frame_count = config.frame_count;
    return s;
}

ServerConfig server_config_of(const RunConfig& config) {
    ServerConfig sc;
    sc.session = session_of(config);
    sc.scene.scene_id = config.scene;
    sc.rig = config.rig;
    sc.parallel_encode = config.parallel_encode;
    return sc;
}

CameraPath path_of(const RunConfig& config) {
    CameraPath p;
    p.path_id = config.path;
    p.frame_count = config.frame_count;
    return p;
}

double delay_for(const CostModel& cost, std::uint64_t frame_id) {
    const auto it = cost.pose_delay_ms.find(frame_id);
    return it == cost.pose_delay_ms.end() ? 0.0 : it->second;
}

std::uint64_t foveal_rays(const PartitionSpec& spec) {
    return 2ull * static_cast<std::uint64_t>(spec.fov_w) * static_cast<std::uint64_t>(spec.fov_h);
}

std::uint64_t reduced_rays(const PartitionSpec& spec) {
    const Dims d = reduced_dims(spec);
    return static_cast<std::uint64_t>(d.w) * static_cast<std::uint64_t>(d.h);
}

// Deterministic lockstep timeline. Stage durations come from the cost
// model and link delays from the net model; the pixel work is still done (unless
// timing_only) so the displayed frames are real.
SimResult run_virtual_sim(const RunConfig& config, DisplaySink* sink) {
    const PartitionSpec& spec = config.spec;
    const CostModel& cost = config.cost;
    const ServerConfig server_cfg = server_config_of(config);
    const CameraPath path = path_of(config);
    const SceneConfig scene = server_cfg.scene;
    const std::size_t pose_bytes = framed_size(PoseUpdateMsg{});

    LinkSchedule uplink(config.net);
    LinkSchedule downlink(config.net);
    EventTrace trace;
    SimResult result;
    result.client.reserve(config.frame_count);
    result.server.reserve(config.frame_count);

    const auto client_event = [&trace](double t, EventKind k, std::uint64_t n) {
        trace.record_at(t, Actor::Client, k, n);
    };
    const auto server_event = [&trace](double t, EventKind k, std::uint64_t n) {
        trace.record_at(t, Actor::Server, k, n);
    };

    double now = delay_for(cost, 0);
    Pose pose = pose_at(path, 0);
    client_event(now, EventKind::PoseSend, 0);
    double pose_arrival = uplink.send(now, pose_bytes).last_byte_ms;
    double server_free = 0.0;

    for (std::uint64_t n = 0; n < config.frame_count; ++n) {
        const double frame_begin = now;

        const double client_draw = cost.client_draw(reduced_rays(spec));
        client_event(frame_begin, EventKind::ClientDrawBegin, n);
        client_event(frame_begin + client_draw, EventKind::ClientDrawEnd, n);

        // Server: idle until the pose lands.
        server_event(pose_arrival, EventKind::PoseRecv, n);
        const double draw_begin = std::max(pose_arrival, server_free);
        const double server_draw = cost.server_draw(foveal_rays(spec));
        const double encode_begin = draw_begin + server_draw;
        const double send_begin = encode_begin + cost.encode_ms;
        server_event(draw_begin, EventKind::ServerDrawBegin, n);
        server_event(encode_begin, EventKind::ServerDrawEnd, n);
        server_event(encode_begin, EventKind::EncodeBegin, n);
        server_event(send_begin, EventKind::EncodeEnd, n);

        std::array<SubframeMsg, 2> subframes;
        if (config.timing_only) {
            for (const Eye eye : {Eye::Left, Eye::Right}) {
                const Rect r = foveal_rect(spec, eye);
                SubframeMsg& sf = subframes[static_cast<std::size_t>(eye)];
                sf.frame_id = n;
                sf.eye = eye;
                sf.codec = config.codec;
                sf.x = static_cast<std::uint16_t>(r.x);
                sf.y = static_cast<std::uint16_t>(r.y);
                sf.w = static_cast<std::uint16_t>(r.w);
                sf.h = static_cast<std::uint16_t>(r.h);
                sf.payload.resize(static_cast<std::size_t>(r.w) * r.h * Image::kChannels);
            }
        } else {
            subframes = produce_subframes(server_cfg, pose, n).subframes;
        }

        server_event(send_begin, EventKind::SubframeSendBegin, n);
        std::uint64_t payload_bytes = 0;
        std::array<LinkSchedule::Delivery, 2> arrivals{};
        for (std::size_t e = 0; e < 2; ++e) {
            payload_bytes += subframes[e].payload.size();
            arrivals[e] = downlink.send(send_begin, framed_size(subframes[e]));
        }
        const double send_end = arrivals[1].last_byte_ms - config.net.latency_ms;
        server_event(send_end, EventKind::SubframeSendEnd, n);
        server_free = send_end;

        // Client receive + decode thread.
        client_event(arrivals[0].first_byte_ms, EventKind::SubframeFirstByte, n);
        client_event(arrivals[0].last_byte_ms, EventKind::SubframeRecv, n);
        client_event(arrivals[1].last_byte_ms, EventKind::SubframeRecv, n);
        const double decode_begin = std::max(arrivals[1].last_byte_ms, frame_begin);
        const double decode_end = decode_begin + cost.decode_ms;
        client_event(decode_begin, EventKind::DecodeBegin, n);
        client_event(decode_end, EventKind::DecodeEnd, n);

        const double merge_begin = std::max(frame_begin + client_draw, decode_end);
        const double merge_end = merge_begin + cost.merge_ms;
        client_event(merge_begin, EventKind::MergeBegin, n);
        client_event(merge_end, EventKind::MergeEnd, n);

        if (!config.timing_only) {
            std::array<Image, 2> foveal;
            for (std::size_t e = 0; e < 2; ++e) {
                const SubframeMsg& sf = subframes[e];
                foveal[e] = decode(sf.codec, sf.payload, sf.w, sf.h);
            }
            const Image periphery = render_scaled(scene, config.rig, pose, spec.stereo_dims(),
                                                  spec.periph_scale);
            const Image composed =
                merge(upsample_nearest(periphery, spec.stereo_dims()), foveal, spec);
            if (sink) {
                sink->present(n, composed);
            }
        }
        client_event(merge_end, EventKind::Display, n);

        now = merge_end + delay_for(cost, n + 1) + cost.pose_ms;
        if (n + 1 < config.frame_count) {
            pose = pose_at(path, n + 1);
            client_event(now, EventKind::PoseSend, n + 1);
            pose_arrival = uplink.send(now, pose_bytes).last_byte_ms;
        } else {
            client_event(now, EventKind::EndSend, n);
        }

        ClientFrameRecord rec;
        rec.frame_id = n;
        rec.draw_ms = client_draw;
        rec.network_ms = arrivals[1].last_byte_ms - arrivals[0].first_byte_ms;
        rec.decode_ms = cost.decode_ms;
        rec.merge_ms = cost.merge_ms;
        rec.pose_ms = now - merge_end;
        rec.total_ms = now - frame_begin;
        rec.bytes_received = payload_bytes;
        result.client.push_back(rec);
        result.server.push_back(
            {n, server_draw, cost.encode_ms, send_end - send_begin, payload_bytes});
    }
    result.trace = trace.events();
    return result;
}

SimResult run_wall_sim(const RunConfig& config, DisplaySink* sink) {
    auto [server_end, client_end] = make_memory_duplex(config.net);
    EventTrace trace;
    const ServerConfig server_cfg = server_config_of(config);

    ServerSummary summary;
    std::exception_ptr server_error;
    std::thread server([&, stream = server_end.get()] {
        try {
            summary = run_server_session(*stream, server_cfg, &trace);
        } catch (...) {
            server_error = std::current_exception();
        }
        stream->shutdown_write();
    });

    ClientConfig client_cfg;
    client_cfg.scene = server_cfg.scene;
    client_cfg.rig = config.rig;
    client_cfg.path = path_of(config);
    client_cfg.sink = sink;
    const CostModel cost = config.cost;
    client_cfg.before_pose_send = [cost](std::uint64_t next) {
        const double ms = delay_for(cost, next);
        if (ms > 0.0) {
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
        }
    };

    SimResult result;
    try {
        result.client = run_client_session(*client_end, client_cfg, &trace);
    } catch (...) {
        client_end.reset();
        server.join();
        throw;
    }
    server.join();
    if (server_error) {
        std::rethrow_exception(server_error);
    }
    if (!summary.clean) {
        throw ConnectionError("server session ended uncleanly: " + summary.error);
    }
    result.server = std::move(summary.timings);
    result.trace = trace.events();
    return result;
}

void check_run_config(const RunConfig& config) {
    require_valid(config.spec);
    validate(config.rig);
    validate(config.net);
    if (config.frame_count < 1) {
        throw ArgumentError("frame count must be at least 1");
    }
}

}  // namespace

SimResult run_sim(const RunConfig& config, DisplaySink* sink) {
    try {
        check_run_config(config);
    } catch (const ParameterError& e) {
        throw ArgumentError(e.what());
    }
    return config.clock == ClockMode::Virtual ? run_virtual_sim(config, sink)
                                              : run_wall_sim(config, sink);
}

std::vector<ClientFrameRecord> run_native_mode(const RunConfig& config, DisplaySink* sink) {
    try {
        check_run_config(config);
    } catch (const ParameterError& e) {
        throw ArgumentError(e.what());
    }
    SceneConfig scene;
    scene.scene_id = config.scene;
    const CameraPath path = path_of(config);
    if (config.clock == ClockMode::Wall) {
        NativeConfig nc;
        nc.spec = config.spec;
        nc.scene = scene;
        nc.rig = config.rig;
        nc.path = path;
        nc.sink = sink;
        return run_native(nc);
    }

    const CostModel& cost = config.cost;
    const double draw = cost.client_draw(reduced_rays(config.spec) + foveal_rays(config.spec));
    std::vector<ClientFrameRecord> records;
    records.reserve(config.frame_count);
    for (std::uint64_t n = 0; n < config.frame_count; ++n) {
        if (!config.timing_only && sink) {
            sink->present(n, compose_native_frame(config.spec, scene, config.rig,
                                                  pose_at(path, n)));
        }
        ClientFrameRecord rec;
        rec.frame_id = n;
        rec.draw_ms = draw;
        rec.merge_ms = cost.merge_ms;
        rec.pose_ms = cost.pose_ms + delay_for(cost, n + 1);
        rec.total_ms = rec.draw_ms + rec.merge_ms + rec.pose_ms;
        records.push_back(rec);
    }
    return records;
}

CompareReport make_compare_report(std::span<const ClientFrameRecord> native,
                                  std::span<const ClientFrameRecord> split,
                                  std::span<const ServerFrameTiming> server,
                                  const PartitionSpec& spec) {
    CompareReport report;
    report.native = summarize(native);
    report.split = summarize(split, server);
    report.split.server_dims = dims_text(spec.fov_w, spec.fov_h);
    report.improvement_pct =
        improvement_pct(report.native.total.median_ms, report.split.total.median_ms);

    const auto line = [](const char* name, const Summary& s) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-8s median %.2f ms/frame (%d fps, IQR = %.3f)\n", name,
                      s.total.median_ms, display_fps(s.total.median_ms), s.total.iqr_ms);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "== native ==\n" << render_table(report.native) << "\n";
    out << "== split ==\n" << render_table(report.split) << "\n";
    out << line("native", report.native) << line("split", report.split);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "end-to-end improvement: %.2f%%\n", report.improvement_pct);
    out << buf;
    report.text = out.str();
    return report;
}

CompareReport run_compare(const RunConfig& config) {
    const auto native = run_native_mode(config);
    const SimResult split = run_sim(config);
    return make_compare_report(native, split.client, split.server, config.spec);
}

// ---------------------------------------------------------------------------
// Command line

namespace {

Dims parse_dims(const std::string& text, const char* flag) {
    int w = 0;
    int h = 0;
    char x = 0;
    std::istringstream in(text);
    if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof()) {
        throw UsageError(std::string(flag) + " expects WIDTHxHEIGHT, got '" + text + "'");
    }
    return {w, h};
}

struct Options {
    std::string full = "2400x1080";
    std::string fovea = "512x360";
    float scale = 0.6f;
    long long frames = 1000;
    std::string codec = "pred-deflate";
    std::string scene = "spheres";
    std::string path = "orbit";
    float ipd = 0.064f;
    float fov = 90.0f;
    std::string host;
    int port = -1;
    double latency_ms = 2.0;
    double bandwidth_mbps = 500.0;
    std::string clock = "virtual";
    CostModel cost;
    bool timing_only = false;
    bool parallel_encode = false;
    std::string client_mode = "split";
    std::string sink = "null";
    std::string ppm_dir = "frames";
    long long ppm_every = 1;
    std::string server_csv;
    std::string client_csv;
    std::string summary_kv;
    std::string native_csv;
};

struct OptionHandles {
    std::vector<std::pair<std::string, CLI::Option*>> all;

    bool given(const std::string& name) const {
        for (const auto& [n, o] : all) {
            if (n == name) {
                return o->count() > 0;
            }
        }
        return false;
    }
};

OptionHandles add_options(CLI::App& app, Options& o) {
    OptionHandles h;
    const auto add = [&](const std::string& name, auto& target, const std::string& help) {
        h.all.emplace_back(name, app.add_option("--" + name, target, help));
    };
    add("full", o.full, "stereo frame size WxH (default 2400x1080)");
    add("fovea", o.fovea, "foveal rect per eye WxH (default 512x360)");
    add("scale", o.scale, "peripheral sampling scale in (0, 1] (default 0.6)");
    add("frames", o.frames, "frames to run (default 1000)");
    add("codec", o.codec, "raw | pred-deflate");
    add("scene", o.scene, "spheres | empty");
    add("path", o.path, "orbit | static");
    add("ipd", o.ipd, "eye separation in meters");
    add("fov", o.fov, "horizontal field of view per eye in degrees");
    add("host", o.host, "server address (env SPLITRENDER_HOST)");
    add("port", o.port, "server port (env SPLITRENDER_PORT)");
    add("latency-ms", o.latency_ms, "sim link one-way latency");
    add("bandwidth-mbps", o.bandwidth_mbps, "sim link rate; 'inf' for unlimited");
    add("clock", o.clock, "virtual | wall");
    add("cost-client-draw", o.cost.client_draw_ms, "virtual clock: client draw ms");
    add("cost-client-per-mray", o.cost.client_ms_per_mray, "virtual clock: client ms per 1e6 rays");
    add("cost-server-draw", o.cost.server_draw_ms, "virtual clock: server draw ms");
    add("cost-server-per-mray", o.cost.server_ms_per_mray, "virtual clock: server ms per 1e6 rays");
    add("cost-encode", o.cost.encode_ms, "virtual clock: encode ms (both eyes)");
    add("cost-decode", o.cost.decode_ms, "virtual clock: decode ms (both eyes)");
    add("cost-merge", o.cost.merge_ms, "virtual clock: merge ms");
    add("cost-pose", o.cost.pose_ms, "virtual clock: pose update ms");
    h.all.emplace_back("timing-only",
                       app.add_flag("--timing-only", o.timing_only,
                                    "virtual clock: skip pixel work (payloads sized as raw)"));
    h.all.emplace_back("parallel-encode",
                       app.add_flag("--parallel-encode", o.parallel_encode,
                                    "encode the two eyes concurrently"));
    add("mode", o.client_mode, "client: split | native");
    add("sink", o.sink, "null | ppm");
    add("ppm-dir", o.ppm_dir, "directory for the ppm sink");
    add("ppm-every", o.ppm_every, "write every k-th frame");
    add("server-csv", o.server_csv, "server timing CSV path");
    add("client-csv", o.client_csv, "client timing CSV path");
    add("summary-kv", o.summary_kv, "write a key=value summary here");
    add("native-csv", o.native_csv, "native run CSV path (compare output, report input)");
    return h;
}

// Flags that only make sense for some modes.
void check_applicable(Mode mode, const OptionHandles& h, const Options& o) {
    const auto reject = [&](std::initializer_list<const char*> names, const char* why) {
        for (const char* n : names) {
            if (h.given(n)) {
                throw UsageError(std::string("--") + n + " " + why);
            }
        }
    };
    const bool simulated = mode == Mode::Sim || mode == Mode::Compare;
    const bool virtual_native = mode == Mode::Native;
    if (!simulated) {
        reject({"latency-ms", "bandwidth-mbps"}, "only applies to sim and compare (the net model "
                                                 "is simulated, not applied to real sockets)");
    }
    if (!simulated && !virtual_native) {
        reject({"clock", "timing-only", "cost-client-draw", "cost-client-per-mray",
                "cost-server-draw", "cost-server-per-mray", "cost-encode", "cost-decode",
                "cost-merge", "cost-pose"},
               "only applies to sim, compare and native");
    }
    if (mode != Mode::Server && mode != Mode::Client) {
        reject({"host", "port"}, "only applies to server and client");
    }
    if (mode != Mode::Client) {
        reject({"mode"}, "only applies to client");
    }
    if (mode == Mode::Report) {
        reject({"full", "fovea", "scale", "frames", "codec", "scene", "path", "ipd", "fov",
                "parallel-encode", "sink", "ppm-dir", "ppm-every"},
               "does not apply to report");
    }
    if (mode == Mode::Client && o.client_mode == "split") {
        reject({"full", "fovea", "scale", "frames", "codec", "scene", "path"},
               "is set by the server in split mode");
    }
    if (mode == Mode::Native || mode == Mode::Client) {
        reject({"codec", "parallel-encode"}, "does not apply without a server");
    }
    if (mode == Mode::Server) {
        reject({"sink", "ppm-dir", "ppm-every", "native-csv", "client-csv"},
               "does not apply to server");
    }
}

RunConfig to_run_config(Mode mode, const Options& o, const OptionHandles& h,
                        const std::optional<std::string>& env_host,
                        const std::optional<std::string>& env_port) {
    RunConfig c;
    c.mode = mode;
    check_applicable(mode, h, o);

    const Dims full = parse_dims(o.full, "--full");
    const Dims fovea = parse_dims(o.fovea, "--fovea");
    c.spec = PartitionSpec::from_stereo(full.w, full.h, fovea.w, fovea.h, o.scale);
    if (full.w % 2 != 0) {
        c.spec.eye_w = (full.w + 1) / 2;  // reported as a stereo-width violation below
    }
    if (mode != Mode::Report) {
        const auto violations = validate(c.spec);
        if (!violations.empty()) {
            std::string msg = "invalid partition:";
            for (const auto& v : violations) {
                msg += "\n  - " + v;
            }
            throw UsageError(msg);
        }
        if (c.spec.full_w > 0xFFFF || c.spec.full_h > 0xFFFF) {
            throw UsageError("frame dimensions must fit in 16 bits");
        }
    }

    if (o.frames < 1 || o.frames > 0xFFFFFFFFLL) {
        throw UsageError("--frames must be between 1 and 2^32 - 1");
    }
    c.frame_count = static_cast<std::uint32_t>(o.frames);

    const auto codec = parse_codec(o.codec);
    if (!codec) {
        throw UsageError("--codec must be raw or pred-deflate");
    }
    c.codec = *codec;
    if (o.scene == "spheres") {
        c.scene = SceneId::Spheres;
    } else if (o.scene == "empty") {
        c.scene = SceneId::Empty;
    } else {
        throw UsageError("--scene must be spheres or empty");
    }
    if (o.path == "orbit") {
        c.path = PathId::Orbit;
    } else if (o.path == "static") {
        c.path = PathId::Static;
    } else {
        throw UsageError("--path must be orbit or static");
    }
    c.rig.ipd = o.ipd;
    c.rig.horizontal_fov = o.fov;
    try {
        validate(c.rig);
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }

    c.host = !o.host.empty() ? o.host : env_host.value_or("127.0.0.1");
    long port = 7878;
    if (o.port >= 0) {
        port = o.port;
    } else if (env_port) {
        try {
            port = std::stol(*env_port);
        } catch (const std::exception&) {
            throw UsageError("SPLITRENDER_PORT is not a number");
        }
    }
    if (port < 0 || port > 65535) {
        throw UsageError("port must be in [0, 65535]");
    }
    c.port = static_cast<std::uint16_t>(port);

    c.net = {o.latency_ms, o.bandwidth_mbps};
    try {
        validate(c.net);
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    if (o.clock == "virtual") {
        c.clock = ClockMode::Virtual;
    } else if (o.clock == "wall") {
        c.clock = ClockMode::Wall;
    } else {
        throw UsageError("--clock must be virtual or wall");
    }
    if (mode == Mode::Native && !h.given("clock")) {
        c.clock = ClockMode::Wall;
    }
    c.cost = o.cost;
    c.timing_only = o.timing_only;
    if (c.timing_only && c.clock == ClockMode::Wall) {
        throw UsageError("--timing-only needs the virtual clock");
    }
    c.parallel_encode = o.parallel_encode;
    if (o.client_mode == "split") {
        c.client_native = false;
    } else if (o.client_mode == "native") {
        c.client_native = true;
    } else {
        throw UsageError("--mode must be split or native");
    }
    if (o.sink == "null") {
        c.sink = SinkKind::Null;
    } else if (o.sink == "ppm") {
        c.sink = SinkKind::Ppm;
    } else {
        throw UsageError("--sink must be null or ppm");
    }
    if (o.ppm_every < 1) {
        throw UsageError("--ppm-every must be >= 1");
    }
    c.ppm_dir = o.ppm_dir;
    c.ppm_every = static_cast<std::uint64_t>(o.ppm_every);

    c.server_csv = o.server_csv;
    c.client_csv = o.client_csv;
    c.summary_kv = o.summary_kv;
    c.native_csv = o.native_csv;
    if (mode == Mode::Server && c.server_csv.empty()) {
        c.server_csv = "server_timings.csv";
    }
    if (mode == Mode::Client && c.client_csv.empty()) {
        c.client_csv = "client_timings.csv";
    }
    if (mode == Mode::Report && c.client_csv.empty()) {
        throw UsageError("report needs --client-csv");
    }
    return c;
}

struct HelpRequested {
    std::string text;
};

RunConfig parse_cli_impl(const std::vector<std::string>& args,
                         const std::optional<std::string>& env_host,
                         const std::optional<std::string>& env_port) {
    CLI::App app{"Split foveated rendering: server, client, simulation and reporting"};
    app.require_subcommand(1);
    const std::vector<std::pair<Mode, std::pair<const char*, const char*>>> modes = {
        {Mode::Server, {"server", "render and stream foveal subframes to one client"}},
        {Mode::Client, {"client", "render the periphery, merge, and drive the lockstep"}},
        {Mode::Native, {"native", "client-only baseline with the same foveated sampling"}},
        {Mode::Sim, {"sim", "server and client in one process over a modelled link"}},
        {Mode::Compare, {"compare", "native vs split over the same frames"}},
        {Mode::Report, {"report", "summarize timing CSVs"}},
    };
    std::vector<Options> options(modes.size());
    std::vector<OptionHandles> handles;
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        CLI::App* sub = app.add_subcommand(modes[i].second.first, modes[i].second.second);
        handles.push_back(add_options(*sub, options[i]));
        subs.push_back(sub);
    }

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    if (argv.empty()) {
        argv.push_back("splitrender");
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        for (CLI::App* sub : subs) {
            if (sub->parsed()) {
                throw HelpRequested{sub->help()};
            }
        }
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (subs[i]->parsed()) {
            return to_run_config(modes[i].first, options[i], handles[i], env_host, env_port);
        }
    }
    throw UsageError("no subcommand given");
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::optional<std::string>(v) : std::nullopt;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

std::unique_ptr<DisplaySink> make_sink(const RunConfig& c) {
    if (c.sink == SinkKind::Ppm) {
        return std::make_unique<PpmSink>(c.ppm_dir, c.ppm_every);
    }
    return std::make_unique<NullSink>();
}

void emit_summary(const RunConfig& c, Summary s, std::ostream& out) {
    s.server_dims = dims_text(c.spec.fov_w, c.spec.fov_h);
    out << render_table(s);
    if (!c.summary_kv.empty()) {
        write_text(c.summary_kv, render_key_values(s));
    }
}

int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err) {
    switch (c.mode) {
        case Mode::Server: {
            ServerConfig sc = server_config_of(c);
            ServerEndpoint ep;
            ep.host = c.host;
            ep.port = c.port;
            ep.on_listening = [&out, &c](std::uint16_t port) {
                out << "listening on " << c.host << ":" << port << std::endl;
            };
            const ServerSummary summary = run_server(sc, ep, c.server_csv);
            out << "served " << summary.timings.size() << " frames\n";
            if (!summary.timings.empty()) {
                emit_summary(c, summarize_server(summary.timings), out);
            }
            if (!summary.clean) {
                err << "session error: " << summary.error << "\n";
                return 1;
            }
            return 0;
        }
        case Mode::Client: {
            auto sink = make_sink(c);
            std::vector<ClientFrameRecord> records;
            RunConfig shown = c;
            if (c.client_native) {
                RunConfig native = c;
                native.clock = ClockMode::Wall;
                records = run_native_mode(native, sink.get());
            } else {
                ClientConfig cc;
                cc.rig = c.rig;
                cc.sink = sink.get();
                auto stream = connect_tcp(c.host, c.port, 5000);
                SessionParams session;
                records = run_client_session(*stream, cc, nullptr, &session);
                shown.spec = session.spec;
            }
            write_csv(std::span<const ClientFrameRecord>(records), c.client_csv);
            if (!records.empty()) {
                emit_summary(shown, summarize(records), out);
            }
            return 0;
        }
        case Mode::Native: {
            auto sink = make_sink(c);
            const auto records = run_native_mode(c, sink.get());
            if (!c.client_csv.empty()) {
                write_csv(std::span<const ClientFrameRecord>(records), c.client_csv);
            }
            emit_summary(c, summarize(records), out);
            return 0;
        }
        case Mode::Sim: {
            auto sink = make_sink(c);
            const SimResult r = run_sim(c, sink.get());
            if (!c.client_csv.empty()) {
                write_csv(std::span<const ClientFrameRecord>(r.client), c.client_csv);
            }
            if (!c.server_csv.empty()) {
                write_csv(std::span<const ServerFrameTiming>(r.server), c.server_csv);
            }
            emit_summary(c, summarize(r.client, r.server), out);
            const LockstepReport lock = check_lockstep(r.trace, c.frame_count);
            out << "lockstep: " << lock.frames_checked << " frames, " << lock.violations
                << " violations\n";
            return lock.violations == 0 ? 0 : 1;
        }
        case Mode::Compare: {
            const auto native = run_native_mode(c);
            const SimResult split = run_sim(c);
            const CompareReport report =
                make_compare_report(native, split.client, split.server, c.spec);
            out << report.text;
            if (!c.native_csv.empty()) {
                write_csv(std::span<const ClientFrameRecord>(native), c.native_csv);
            }
            if (!c.client_csv.empty()) {
                write_csv(std::span<const ClientFrameRecord>(split.client), c.client_csv);
            }
            if (!c.server_csv.empty()) {
                write_csv(std::span<const ServerFrameTiming>(split.server), c.server_csv);
            }
            if (!c.summary_kv.empty()) {
                write_text(c.summary_kv, render_key_values(report.split) +
                                             "improvement_pct=" +
                                             std::to_string(report.improvement_pct) + "\n");
            }
            return 0;
        }
        case Mode::Report: {
            const auto client = read_client_csv(c.client_csv);
            std::vector<ServerFrameTiming> server;
            if (!c.server_csv.empty()) {
                server = read_server_csv(c.server_csv);
            }
            if (!c.native_csv.empty()) {
                const auto native = read_client_csv(c.native_csv);
                out << make_compare_report(native, client, server, c.spec).text;
            } else {
                emit_summary(c, summarize(client, server), out);
            }
            return 0;
        }
    }
    return 1;
}

}  // namespace

RunConfig parse_cli(const std::vector<std::string>& args,
                    const std::optional<std::string>& env_host,
                    const std::optional<std::string>& env_port) {
    try {
        return parse_cli_impl(args, env_host, env_port);
    } catch (const HelpRequested&) {
        throw UsageError("help requested");
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig config;
    try {
        config = parse_cli_impl(args, env("SPLITRENDER_HOST"), env("SPLITRENDER_PORT"));
    } catch (const HelpRequested& h) {
        out << h.text;
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }
    try {
        return dispatch(config, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace splitrender
