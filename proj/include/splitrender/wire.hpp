#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "splitrender/codec.hpp"
#include "splitrender/image.hpp"
#include "splitrender/partition.hpp"
#include "splitrender/render.hpp"
#include "splitrender/stream.hpp"

namespace splitrender {

// Frame layout, all integers little-endian, f32 as IEEE-754:
//
//   u32 length      bytes that follow this field (type + body)
//   u8  msg_type    1 Hello, 2 Pose, 3 Subframe, 4 End
//   ... body
//
// Hello    u16 version, u16 full_w, u16 full_h, u16 fov_w, u16 fov_h,
//          f32 periph_scale, u8 codec, u8 scene_id, u8 path_id, u32 frame_count
// Pose     u64 frame_id, 3 x f32 position, 4 x f32 orientation (x, y, z, w)
// Subframe u64 frame_id, u8 eye, u8 codec, 4 x u16 rect (x, y, w, h, per-eye),
//          u32 payload_len, payload
// End      u64 frame_id (last completed)

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kLengthFieldBytes = 4;
inline constexpr std::size_t kDefaultMaxFrameBytes = 64u << 20;
inline constexpr std::uint64_t kMaxPayloadBytes = (std::uint64_t{1} << 32) - 16;

enum class MsgType : std::uint8_t {
    Hello = 1,
    Pose = 2,
    Subframe = 3,
    End = 4,
};

struct HelloMsg {
    std::uint16_t protocol_version = kProtocolVersion;
    std::uint16_t full_w = 0;
    std::uint16_t full_h = 0;
    std::uint16_t fov_w = 0;
    std::uint16_t fov_h = 0;
    float periph_scale = 0.0f;
    std::uint8_t codec = 0;
    std::uint8_t scene_id = 0;
    std::uint8_t path_id = 0;
    std::uint32_t frame_count = 0;

    friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct PoseUpdateMsg {
    std::uint64_t frame_id = 0;
    Pose pose;

    friend bool operator==(const PoseUpdateMsg&, const PoseUpdateMsg&) = default;
};

struct SubframeMsg {
    std::uint64_t frame_id = 0;
    Eye eye = Eye::Left;
    CodecId codec = CodecId::Raw;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint16_t w = 0;
    std::uint16_t h = 0;
    std::vector<std::uint8_t> payload;

    Rect rect() const { return {x, y, w, h}; }

    friend bool operator==(const SubframeMsg&, const SubframeMsg&) = default;
};

struct EndMsg {
    std::uint64_t frame_id = 0;

    friend bool operator==(const EndMsg&, const EndMsg&) = default;
};

using Message = std::variant<HelloMsg, PoseUpdateMsg, SubframeMsg, EndMsg>;

MsgType message_type(const Message& msg);

/// Serializes one framed message. Throws SizeError if a payload exceeds
/// 2^32 - 16 bytes.
std::vector<std::uint8_t> write_msg(const Message& msg);
void append_msg(std::vector<std::uint8_t>& out, const Message& msg);

/// Throws SizeError when a subframe payload of `bytes` cannot be framed.
void check_payload_size(std::uint64_t bytes);

/// Size of the framed encoding without building it.
std::size_t framed_size(const Message& msg);

/// Parses `type byte + body` (everything after the length field). Throws
/// ProtocolError on unknown type, short or overlong bodies. Pose orientation
/// is re-normalized.
Message parse_frame(std::span<const std::uint8_t> frame);

/// Incremental decoder, independent of how the byte stream is segmented.
class FrameDecoder {
public:
    explicit FrameDecoder(std::size_t max_frame_bytes = kDefaultMaxFrameBytes)
        : max_frame_bytes_(max_frame_bytes) {}

    void feed(std::span<const std::uint8_t> bytes);

    /// Next complete message, if any. Throws ProtocolError on a bad frame.
    std::optional<Message> next();

    /// True when buffered bytes form an incomplete frame.
    bool mid_frame() const { return !buffer_.empty(); }

private:
    std::size_t max_frame_bytes_;
    std::vector<std::uint8_t> buffer_;
};

struct ReadTiming {
    std::chrono::steady_clock::time_point first_byte;
    std::chrono::steady_clock::time_point last_byte;
};

/// Blocking read of one message. Returns nullopt on clean end of stream at
/// a frame boundary; throws ConnectionError if the stream ends mid-frame and
/// ProtocolError on malformed frames.
std::optional<Message> read_msg(ByteStream& stream,
                                std::size_t max_frame_bytes = kDefaultMaxFrameBytes,
                                ReadTiming* timing = nullptr);

/// Message-level wrapper around a stream: one reader, and writers serialized
/// so that each message goes out atomically.
class MessageChannel {
public:
    explicit MessageChannel(ByteStream& stream,
                            std::size_t max_frame_bytes = kDefaultMaxFrameBytes)
        : stream_(stream), max_frame_bytes_(max_frame_bytes) {}

    void send(const Message& msg);
    void send_batch(std::span<const Message> msgs);
    std::optional<Message> receive(ReadTiming* timing = nullptr);
    void close_write();

private:
    ByteStream& stream_;
    std::size_t max_frame_bytes_;
    std::mutex write_mutex_;
};

HelloMsg make_hello(const PartitionSpec& spec, CodecId codec, SceneId scene, PathId path,
                    std::uint32_t frame_count);

/// Validated session parameters carried by a Hello.
struct SessionParams {
    PartitionSpec spec;
    CodecId codec = CodecId::Raw;
    SceneId scene = SceneId::Spheres;
    PathId path = PathId::Orbit;
    std::uint32_t frame_count = 0;
};

/// Throws ProtocolError on a version mismatch, unknown enumerants or a spec
/// that does not validate.
SessionParams accept_hello(const HelloMsg& hello);

}  // namespace splitrender
