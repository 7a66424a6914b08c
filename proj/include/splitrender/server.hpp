#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "splitrender/codec.hpp"
#include "splitrender/partition.hpp"
#include "splitrender/render.hpp"
#include "splitrender/stream.hpp"
#include "splitrender/trace.hpp"
#include "splitrender/wire.hpp"

namespace splitrender {

struct ServerFrameTiming {
    std::uint64_t frame_id = 0;
    double draw_ms = 0.0;
    double encode_ms = 0.0;
    double send_ms = 0.0;
    std::uint64_t bytes_sent = 0;

    friend bool operator==(const ServerFrameTiming&, const ServerFrameTiming&) = default;
};

struct ServerConfig {
    SessionParams session;
    SceneConfig scene;
    CameraRig rig;
    CodecOptions codec_options;
    bool parallel_encode = false;
};

/// Both eyes' subframes for one frame plus the stage timings that built them.
struct EncodedFrame {
    std::array<SubframeMsg, 2> subframes;
    double draw_ms = 0.0;
    double encode_ms = 0.0;
    std::uint64_t payload_bytes = 0;
};

/// Renders each eye's foveal rect at full rate and encodes it. No I/O.
EncodedFrame produce_subframes(const ServerConfig& config, const Pose& pose,
                               std::uint64_t frame_id, EventTrace* trace = nullptr);

/// One lockstep server frame: render, encode, send both subframes.
ServerFrameTiming serve_frame(MessageChannel& channel, const ServerConfig& config,
                              const Pose& pose, std::uint64_t frame_id,
                              EventTrace* trace = nullptr);

struct ServerSummary {
    std::vector<ServerFrameTiming> timings;
    bool clean = false;
    std::string error;
    std::uint64_t draw_calls_per_eye = 0;
};

/// Server side of one session over an established stream: sends Hello,
/// checks the client's Hello, then serves one frame per received pose until
/// End, end of stream, or an error. Never renders a frame before its pose
/// arrives. Errors after the handshake are reported in the summary with the
/// records gathered so far; handshake failures throw.
ServerSummary run_server_session(ByteStream& stream, const ServerConfig& config,
                                 EventTrace* trace = nullptr);

struct ServerEndpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 7878;
    /// Invoked with the bound port once listening (useful with port 0).
    std::function<void(std::uint16_t)> on_listening;
};

/// Listens, accepts exactly one client and runs its session. Writes the
/// timing CSV when `csv_path` is not empty. Throws ConnectionError when the
/// endpoint cannot be bound.
ServerSummary run_server(const ServerConfig& config, const ServerEndpoint& endpoint,
                         const std::filesystem::path& csv_path = {});

}  // namespace splitrender
