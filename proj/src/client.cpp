#include "splitrender/client.hpp"

#include <chrono>
#include <cstdio>
#include <future>
#include <string>

#include "splitrender/codec.hpp"
#include "splitrender/errors.hpp"

namespace splitrender {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

void note(EventTrace* trace, EventKind kind, std::uint64_t frame_id) {
    if (trace) {
        trace->record(Actor::Client, kind, frame_id);
    }
}

struct ReceivedFrame {
    std::array<Image, 2> foveal;
    double network_ms = 0.0;
    double decode_ms = 0.0;
    std::uint64_t payload_bytes = 0;
};

ReceivedFrame receive_and_decode(MessageChannel& channel, const SessionParams& session,
                                 std::uint64_t frame_id, EventTrace* trace) {
    std::array<std::optional<SubframeMsg>, 2> got;
    Clock::time_point first_byte{};
    Clock::time_point last_byte{};
    for (int i = 0; i < 2; ++i) {
        ReadTiming timing;
        auto msg = channel.receive(&timing);
        if (!msg) {
            throw ConnectionError("server closed the connection mid-frame");
        }
        auto* sf = std::get_if<SubframeMsg>(&*msg);
        if (!sf) {
            throw ProtocolError("expected a subframe, got message type " +
                                std::to_string(static_cast<int>(message_type(*msg))));
        }
        if (sf->frame_id != frame_id) {
            throw ProtocolError("lockstep violated: subframe for frame " +
                                std::to_string(sf->frame_id) + " while displaying frame " +
                                std::to_string(frame_id));
        }
        const auto eye_index = static_cast<std::size_t>(sf->eye);
        if (got[eye_index]) {
            throw ProtocolError("duplicate subframe for one eye");
        }
        if (sf->codec != session.codec) {
            throw ProtocolError("subframe codec differs from the negotiated codec");
        }
        if (sf->rect() != foveal_rect(session.spec, sf->eye)) {
            throw ProtocolError("subframe rect is not the eye's foveal rect");
        }
        if (i == 0) {
            first_byte = timing.first_byte;
            if (trace) {
                trace->record_at(trace->to_ms(first_byte), Actor::Client,
                                 EventKind::SubframeFirstByte, frame_id);
            }
        }
        last_byte = timing.last_byte;
        note(trace, EventKind::SubframeRecv, frame_id);
        got[eye_index] = std::move(*sf);
    }

    ReceivedFrame out;
    out.network_ms = ms_between(first_byte, last_byte);
    note(trace, EventKind::DecodeBegin, frame_id);
    const auto decode_begin = Clock::now();
    for (std::size_t e = 0; e < 2; ++e) {
        const SubframeMsg& sf = *got[e];
        out.payload_bytes += sf.payload.size();
        out.foveal[e] = decode(sf.codec, sf.payload, sf.w, sf.h);
    }
    out.decode_ms = ms_between(decode_begin, Clock::now());
    note(trace, EventKind::DecodeEnd, frame_id);
    return out;
}

}  // namespace

PpmSink::PpmSink(std::filesystem::path dir, std::uint64_t every)
    : dir_(std::move(dir)), every_(every == 0 ? 1 : every) {
    std::filesystem::create_directories(dir_);
}

void PpmSink::present(std::uint64_t frame_id, const Image& frame) {
    if (frame_id % every_ != 0) {
        return;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06llu.ppm", static_cast<unsigned long long>(frame_id));
    write_ppm(frame, dir_ / name);
}

void CaptureSink::present(std::uint64_t frame_id, const Image& frame) {
    std::lock_guard lock(mutex_);
    ids_.push_back(frame_id);
    frames_.push_back(frame);
}

std::vector<Image> CaptureSink::frames() const {
    std::lock_guard lock(mutex_);
    return frames_;
}

std::vector<std::uint64_t> CaptureSink::frame_ids() const {
    std::lock_guard lock(mutex_);
    return ids_;
}

Image upsample_nearest(const Image& reduced, Dims full_dims) {
    if (reduced.empty() || full_dims.w < 1 || full_dims.h < 1 ||
        reduced.width() > full_dims.w || reduced.height() > full_dims.h) {
        throw GeometryError("upsample target must be at least as large as the reduced image");
    }
    const auto rw = static_cast<std::int64_t>(reduced.width());
    const auto rh = static_cast<std::int64_t>(reduced.height());
    std::vector<std::size_t> src_col(static_cast<std::size_t>(full_dims.w));
    for (int x = 0; x < full_dims.w; ++x) {
        src_col[x] = static_cast<std::size_t>(x * rw / full_dims.w) * Image::kChannels;
    }
    Image out(full_dims.w, full_dims.h);
    for (int y = 0; y < full_dims.h; ++y) {
        const auto src = reduced.row(static_cast<int>(y * rh / full_dims.h));
        auto dst = out.row(y);
        for (int x = 0; x < full_dims.w; ++x) {
            const std::size_t s = src_col[x];
            const std::size_t d = static_cast<std::size_t>(x) * Image::kChannels;
            dst[d] = src[s];
            dst[d + 1] = src[s + 1];
            dst[d + 2] = src[s + 2];
        }
    }
    return out;
}

Image merge(const Image& peripheral_full, std::span<const Image, 2> foveal,
            const PartitionSpec& spec) {
    require_valid(spec);
    if (peripheral_full.dims() != spec.stereo_dims()) {
        throw GeometryError("peripheral frame does not match the stereo dimensions");
    }
    Image out = peripheral_full;
    for (const Eye eye : {Eye::Left, Eye::Right}) {
        const Image& fov = foveal[static_cast<std::size_t>(eye)];
        const Rect r = foveal_rect_stereo(spec, eye);
        if (fov.dims() != Dims{r.w, r.h}) {
            throw GeometryError("foveal image does not match the foveal rect");
        }
        blit(out, fov, r.x, r.y);
    }
    return out;
}

ClientFrameRecord client_frame(MessageChannel& channel, const ClientConfig& config,
                               ClientState& state, EventTrace* trace) {
    const std::uint64_t n = state.frame_id;
    const PartitionSpec& spec = state.session.spec;
    SceneConfig scene = config.scene;
    scene.scene_id = state.session.scene;

    const auto frame_begin = Clock::now();
    auto rx = std::async(std::launch::async, [&channel, &state, n, trace] {
        return receive_and_decode(channel, state.session, n, trace);
    });

    note(trace, EventKind::ClientDrawBegin, n);
    const auto draw_begin = Clock::now();
    const Image periphery =
        render_scaled(scene, config.rig, state.pose, spec.stereo_dims(), spec.periph_scale);
    const auto draw_end = Clock::now();
    note(trace, EventKind::ClientDrawEnd, n);

    ReceivedFrame received = rx.get();

    note(trace, EventKind::MergeBegin, n);
    const auto merge_begin = Clock::now();
    const Image full = upsample_nearest(periphery, spec.stereo_dims());
    const Image composed = merge(full, received.foveal, spec);
    const auto merge_end = Clock::now();
    note(trace, EventKind::MergeEnd, n);

    if (config.sink) {
        config.sink->present(n, composed);
    }
    note(trace, EventKind::Display, n);

    if (config.before_pose_send) {
        config.before_pose_send(n + 1);
    }
    const auto pose_begin = Clock::now();
    if (n + 1 < state.session.frame_count) {
        state.pose = pose_at(state.path, n + 1);
        channel.send(PoseUpdateMsg{n + 1, state.pose});
        note(trace, EventKind::PoseSend, n + 1);
    } else {
        channel.send(EndMsg{n});
        note(trace, EventKind::EndSend, n);
    }
    const auto pose_end = Clock::now();
    state.frame_id = n + 1;

    ClientFrameRecord rec;
    rec.frame_id = n;
    rec.draw_ms = ms_between(draw_begin, draw_end);
    rec.network_ms = received.network_ms;
    rec.decode_ms = received.decode_ms;
    rec.merge_ms = ms_between(merge_begin, merge_end);
    rec.pose_ms = ms_between(pose_begin, pose_end);
    rec.total_ms = ms_between(frame_begin, pose_end);
    rec.bytes_received = received.payload_bytes;
    return rec;
}

std::vector<ClientFrameRecord> run_client_session(ByteStream& stream, const ClientConfig& config,
                                                  EventTrace* trace, SessionParams* session_out) {
    MessageChannel channel(stream);
    const auto first = channel.receive();
    if (!first) {
        throw ConnectionError("server closed the connection during the handshake");
    }
    const auto* hello = std::get_if<HelloMsg>(&*first);
    if (!hello) {
        throw ProtocolError("expected a Hello from the server");
    }
    ClientState state;
    state.session = accept_hello(*hello);
    if (session_out) {
        *session_out = state.session;
    }
    channel.send(make_hello(state.session.spec, state.session.codec, state.session.scene,
                            state.session.path, state.session.frame_count));

    std::vector<ClientFrameRecord> records;
    if (state.session.frame_count == 0) {
        channel.send(EndMsg{0});
        channel.close_write();
        return records;
    }

    state.path = config.path;
    state.path.path_id = state.session.path;
    state.path.frame_count = state.session.frame_count;
    state.frame_id = 0;
    state.pose = pose_at(state.path, 0);
    if (config.before_pose_send) {
        config.before_pose_send(0);
    }
    channel.send(PoseUpdateMsg{0, state.pose});
    note(trace, EventKind::PoseSend, 0);

    records.reserve(state.session.frame_count);
    while (state.frame_id < state.session.frame_count) {
        records.push_back(client_frame(channel, config, state, trace));
    }
    channel.close_write();
    return records;
}

namespace {

struct NativeParts {
    Image periphery;
    std::array<Image, 2> foveal;
};

NativeParts render_native_parts(const PartitionSpec& spec, const SceneConfig& scene,
                                const CameraRig& rig, const Pose& pose, RenderStats* stats) {
    NativeParts parts;
    parts.periphery = render_scaled(scene, rig, pose, spec.stereo_dims(), spec.periph_scale, stats);
    for (const Eye eye : {Eye::Left, Eye::Right}) {
        parts.foveal[static_cast<std::size_t>(eye)] =
            render_region(scene, rig, pose, eye, spec.eye_dims(), foveal_rect(spec, eye), stats);
    }
    return parts;
}

}  // namespace

Image compose_native_frame(const PartitionSpec& spec, const SceneConfig& scene,
                           const CameraRig& rig, const Pose& pose, RenderStats* stats) {
    const NativeParts parts = render_native_parts(spec, scene, rig, pose, stats);
    return merge(upsample_nearest(parts.periphery, spec.stereo_dims()), parts.foveal, spec);
}

std::vector<ClientFrameRecord> run_native(const NativeConfig& config) {
    require_valid(config.spec);
    std::vector<ClientFrameRecord> records;
    records.reserve(config.path.frame_count);
    Pose pose = pose_at(config.path, 0);
    for (std::uint64_t n = 0; n < config.path.frame_count; ++n) {
        const auto frame_begin = Clock::now();
        const NativeParts parts = render_native_parts(config.spec, config.scene, config.rig, pose,
                                                      nullptr);
        const auto draw_end = Clock::now();
        const Image composed = merge(upsample_nearest(parts.periphery, config.spec.stereo_dims()),
                                     parts.foveal, config.spec);
        const auto merge_end = Clock::now();
        if (config.sink) {
            config.sink->present(n, composed);
        }
        const auto pose_begin = Clock::now();
        if (n + 1 < config.path.frame_count) {
            pose = pose_at(config.path, n + 1);
        }
        const auto pose_end = Clock::now();

        ClientFrameRecord rec;
        rec.frame_id = n;
        rec.draw_ms = ms_between(frame_begin, draw_end);
        rec.merge_ms = ms_between(draw_end, merge_end);
        rec.pose_ms = ms_between(pose_begin, pose_end);
        rec.total_ms = ms_between(frame_begin, pose_end);
        records.push_back(rec);
    }
    return records;
}

}  // namespace splitrender
