#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "splitrender/image.hpp"
#include "splitrender/partition.hpp"
#include "splitrender/render.hpp"
#include "splitrender/stream.hpp"
#include "splitrender/trace.hpp"
#include "splitrender/wire.hpp"

namespace splitrender {

struct ClientFrameRecord {
    std::uint64_t frame_id = 0;
    double draw_ms = 0.0;      // peripheral render
    double network_ms = 0.0;   // first byte to last byte of both subframes
    double decode_ms = 0.0;
    double merge_ms = 0.0;     // upsample + composite
    double pose_ms = 0.0;      // next pose (or End) out the door
    double total_ms = 0.0;     // frame start to next pose sent
    std::uint64_t bytes_received = 0;  // subframe payload bytes

    friend bool operator==(const ClientFrameRecord&, const ClientFrameRecord&) = default;
};

class DisplaySink {
public:
    virtual ~DisplaySink() = default;
    virtual void present(std::uint64_t frame_id, const Image& frame) = 0;
};

class NullSink final : public DisplaySink {
public:
    void present(std::uint64_t, const Image&) override {}
};

/// Writes frame_<id>.ppm for every k-th frame.
class PpmSink final : public DisplaySink {
public:
    PpmSink(std::filesystem::path dir, std::uint64_t every);
    void present(std::uint64_t frame_id, const Image& frame) override;

private:
    std::filesystem::path dir_;
    std::uint64_t every_;
};

/// Keeps every presented frame in memory.
class CaptureSink final : public DisplaySink {
public:
    void present(std::uint64_t frame_id, const Image& frame) override;
    std::vector<Image> frames() const;
    std::vector<std::uint64_t> frame_ids() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::uint64_t> ids_;
    std::vector<Image> frames_;
};

/// Nearest-neighbour upsample: output (x, y) copies reduced
/// (floor(x * rw / W), floor(y * rh / H)).
Image upsample_nearest(const Image& reduced, Dims full_dims);

/// Overwrites each eye's foveal rect (stereo coordinates) of the upsampled
/// peripheral frame with that eye's foveal image. Throws GeometryError on
/// any size mismatch.
Image merge(const Image& peripheral_full, std::span<const Image, 2> foveal,
            const PartitionSpec& spec);

struct ClientConfig {
    SceneConfig scene;
    CameraRig rig;
    CameraPath path;   // path_id and frame_count come from the session Hello
    DisplaySink* sink = nullptr;
    /// Called on the main thread right before the pose (or End) for
    /// `next_frame_id` is sent; tests use it to inject delay.
    std::function<void(std::uint64_t next_frame_id)> before_pose_send;
};

struct ClientState {
    SessionParams session;
    CameraPath path;
    std::uint64_t frame_id = 0;  // frame whose pose has been sent
    Pose pose;
};

/// One lockstep client frame. Renders the periphery on the calling thread
/// while a second thread receives and decodes both subframes, then upsamples,
/// merges, presents, and sends the next pose (End after the last frame).
/// Throws ProtocolError when subframes do not match the expected frame.
ClientFrameRecord client_frame(MessageChannel& channel, const ClientConfig& config,
                               ClientState& state, EventTrace* trace = nullptr);

/// Client side of a session: reads the server Hello, answers it, sends the
/// pose for frame 0 and runs client_frame for every frame. The negotiated
/// session is copied to `session_out` when given.
std::vector<ClientFrameRecord> run_client_session(ByteStream& stream, const ClientConfig& config,
                                                  EventTrace* trace = nullptr,
                                                  SessionParams* session_out = nullptr);

struct NativeConfig {
    PartitionSpec spec;
    SceneConfig scene;
    CameraRig rig;
    CameraPath path;
    DisplaySink* sink = nullptr;
};

/// Renders the same foveated composition locally: fovea at full rate, the
/// reduced periphery upsampled underneath. No network or decode stages.
std::vector<ClientFrameRecord> run_native(const NativeConfig& config);

/// The composed frame the native path displays for one pose.
Image compose_native_frame(const PartitionSpec& spec, const SceneConfig& scene,
                           const CameraRig& rig, const Pose& pose,
                           RenderStats* stats = nullptr);

}  // namespace splitrender
