#include "splitrender/server.hpp"

#include <chrono>
#include <future>
#include <string>

#include "splitrender/errors.hpp"
#include "splitrender/metrics.hpp"
#include "splitrender/transport.hpp"

namespace splitrender {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

void note(EventTrace* trace, EventKind kind, std::uint64_t frame_id) {
    if (trace) {
        trace->record(Actor::Server, kind, frame_id);
    }
}

SubframeMsg make_subframe(std::uint64_t frame_id, Eye eye, CodecId codec, const Rect& rect,
                          std::vector<std::uint8_t> payload) {
    SubframeMsg m;
    m.frame_id = frame_id;
    m.eye = eye;
    m.codec = codec;
    m.x = static_cast<std::uint16_t>(rect.x);
    m.y = static_cast<std::uint16_t>(rect.y);
    m.w = static_cast<std::uint16_t>(rect.w);
    m.h = static_cast<std::uint16_t>(rect.h);
    m.payload = std::move(payload);
    return m;
}

}  // namespace

EncodedFrame produce_subframes(const ServerConfig& config, const Pose& pose,
                               std::uint64_t frame_id, EventTrace* trace) {
    const PartitionSpec& spec = config.session.spec;
    const Rect left_rect = foveal_rect(spec, Eye::Left);
    const Rect right_rect = foveal_rect(spec, Eye::Right);

    EncodedFrame out;
    note(trace, EventKind::ServerDrawBegin, frame_id);
    const auto draw_begin = Clock::now();
    const Image left = render_region(config.scene, config.rig, pose, Eye::Left, spec.eye_dims(),
                                     left_rect);
    const Image right = render_region(config.scene, config.rig, pose, Eye::Right, spec.eye_dims(),
                                      right_rect);
    const auto draw_end = Clock::now();
    note(trace, EventKind::ServerDrawEnd, frame_id);

    note(trace, EventKind::EncodeBegin, frame_id);
    const CodecId codec = config.session.codec;
    std::vector<std::uint8_t> left_bytes;
    std::vector<std::uint8_t> right_bytes;
    if (config.parallel_encode) {
        auto right_job = std::async(std::launch::async, [&] {
            return encode(codec, right, config.codec_options);
        });
        left_bytes = encode(codec, left, config.codec_options);
        right_bytes = right_job.get();
    } else {
        left_bytes = encode(codec, left, config.codec_options);
        right_bytes = encode(codec, right, config.codec_options);
    }
    const auto encode_end = Clock::now();
    note(trace, EventKind::EncodeEnd, frame_id);

    out.draw_ms = ms_between(draw_begin, draw_end);
    out.encode_ms = ms_between(draw_end, encode_end);
    out.payload_bytes = left_bytes.size() + right_bytes.size();
    out.subframes[0] = make_subframe(frame_id, Eye::Left, codec, left_rect, std::move(left_bytes));
    out.subframes[1] =
        make_subframe(frame_id, Eye::Right, codec, right_rect, std::move(right_bytes));
    return out;
}

ServerFrameTiming serve_frame(MessageChannel& channel, const ServerConfig& config,
                              const Pose& pose, std::uint64_t frame_id, EventTrace* trace) {
    EncodedFrame frame = produce_subframes(config, pose, frame_id, trace);

    note(trace, EventKind::SubframeSendBegin, frame_id);
    const auto send_begin = Clock::now();
    for (const SubframeMsg& sf : frame.subframes) {
        channel.send(sf);
    }
    const auto send_end = Clock::now();
    note(trace, EventKind::SubframeSendEnd, frame_id);

    return {frame_id, frame.draw_ms, frame.encode_ms, ms_between(send_begin, send_end),
            frame.payload_bytes};
}

ServerSummary run_server_session(ByteStream& stream, const ServerConfig& config,
                                 EventTrace* trace) {
    const SessionParams& session = config.session;
    MessageChannel channel(stream);
    const HelloMsg hello =
        make_hello(session.spec, session.codec, session.scene, session.path, session.frame_count);
    channel.send(hello);

    const auto reply = channel.receive();
    if (!reply) {
        throw ConnectionError("client closed the connection during the handshake");
    }
    const auto* client_hello = std::get_if<HelloMsg>(&*reply);
    if (!client_hello) {
        throw ProtocolError("expected a Hello from the client");
    }
    accept_hello(*client_hello);
    HelloMsg echoed = *client_hello;
    echoed.protocol_version = hello.protocol_version;
    if (!(echoed == hello)) {
        throw ProtocolError("client acknowledged different session parameters");
    }

    ServerSummary summary;
    std::uint64_t expected = 0;
    try {
        for (;;) {
            const auto msg = channel.receive();
            if (!msg) {
                summary.clean = expected == session.frame_count;
                if (!summary.clean) {
                    summary.error = "client disconnected after " + std::to_string(expected) +
                                    " of " + std::to_string(session.frame_count) + " frames";
                }
                break;
            }
            if (const auto* pose = std::get_if<PoseUpdateMsg>(&*msg)) {
                note(trace, EventKind::PoseRecv, pose->frame_id);
                if (pose->frame_id != expected) {
                    throw ProtocolError("pose for frame " + std::to_string(pose->frame_id) +
                                        " while expecting frame " + std::to_string(expected));
                }
                if (expected >= session.frame_count) {
                    throw ProtocolError("pose beyond the session's frame count");
                }
                summary.timings.push_back(
                    serve_frame(channel, config, pose->pose, pose->frame_id, trace));
                ++expected;
            } else if (std::holds_alternative<EndMsg>(*msg)) {
                summary.clean = true;
                break;
            } else {
                throw ProtocolError("unexpected message type " +
                                    std::to_string(static_cast<int>(message_type(*msg))) +
                                    " from client");
            }
        }
    } catch (const std::exception& e) {
        summary.clean = false;
        summary.error = e.what();
    }
    summary.draw_calls_per_eye = summary.timings.size();
    return summary;
}

ServerSummary run_server(const ServerConfig& config, const ServerEndpoint& endpoint,
                         const std::filesystem::path& csv_path) {
    TcpListener listener(endpoint.host, endpoint.port);
    if (endpoint.on_listening) {
        endpoint.on_listening(listener.port());
    }
    auto stream = listener.accept();
    ServerSummary summary = run_server_session(*stream, config);
    if (!csv_path.empty()) {
        write_csv(std::span<const ServerFrameTiming>(summary.timings), csv_path);
    }
    return summary;
}

}  // namespace splitrender
