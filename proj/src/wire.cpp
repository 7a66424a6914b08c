#include "splitrender/wire.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "splitrender/errors.hpp"

namespace splitrender {

namespace {

constexpr std::size_t kHelloBody = 2 * 5 + 4 + 3 + 4;
constexpr std::size_t kPoseBody = 8 + 12 + 16;
constexpr std::size_t kSubframeHeader = 8 + 1 + 1 + 8 + 4;
constexpr std::size_t kEndBody = 8;

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    float f32() { return std::bit_cast<float>(u32()); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto out = in_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    void expect_end() const {
        if (pos_ != in_.size()) {
            throw ProtocolError("message body has " + std::to_string(in_.size() - pos_) +
                                " unexpected trailing bytes");
        }
    }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) {
            throw ProtocolError("message body too short");
        }
    }

    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::size_t body_size(const Message& msg) {
    struct Visitor {
        std::size_t operator()(const HelloMsg&) const { return kHelloBody; }
        std::size_t operator()(const PoseUpdateMsg&) const { return kPoseBody; }
        std::size_t operator()(const SubframeMsg& m) const {
            return kSubframeHeader + m.payload.size();
        }
        std::size_t operator()(const EndMsg&) const { return kEndBody; }
    };
    return std::visit(Visitor{}, msg);
}

void write_body(Writer& w, const HelloMsg& m) {
    w.u16(m.protocol_version);
    w.u16(m.full_w);
    w.u16(m.full_h);
    w.u16(m.fov_w);
    w.u16(m.fov_h);
    w.f32(m.periph_scale);
    w.u8(m.codec);
    w.u8(m.scene_id);
    w.u8(m.path_id);
    w.u32(m.frame_count);
}

void write_body(Writer& w, const PoseUpdateMsg& m) {
    w.u64(m.frame_id);
    w.f32(m.pose.position.x);
    w.f32(m.pose.position.y);
    w.f32(m.pose.position.z);
    w.f32(m.pose.orientation.x);
    w.f32(m.pose.orientation.y);
    w.f32(m.pose.orientation.z);
    w.f32(m.pose.orientation.w);
}

void write_body(Writer& w, const SubframeMsg& m) {
    w.u64(m.frame_id);
    w.u8(static_cast<std::uint8_t>(m.eye));
    w.u8(static_cast<std::uint8_t>(m.codec));
    w.u16(m.x);
    w.u16(m.y);
    w.u16(m.w);
    w.u16(m.h);
    w.u32(static_cast<std::uint32_t>(m.payload.size()));
    w.bytes(m.payload);
}

void write_body(Writer& w, const EndMsg& m) { w.u64(m.frame_id); }

HelloMsg read_hello(Reader& r) {
    HelloMsg m;
    m.protocol_version = r.u16();
    m.full_w = r.u16();
    m.full_h = r.u16();
    m.fov_w = r.u16();
    m.fov_h = r.u16();
    m.periph_scale = r.f32();
    m.codec = r.u8();
    m.scene_id = r.u8();
    m.path_id = r.u8();
    m.frame_count = r.u32();
    return m;
}

PoseUpdateMsg read_pose(Reader& r) {
    PoseUpdateMsg m;
    m.frame_id = r.u64();
    m.pose.position = {r.f32(), r.f32(), r.f32()};
    Quat q;
    q.x = r.f32();
    q.y = r.f32();
    q.z = r.f32();
    q.w = r.f32();
    m.pose.orientation = is_unit(q) ? q : normalized(q);
    return m;
}

SubframeMsg read_subframe(Reader& r) {
    SubframeMsg m;
    m.frame_id = r.u64();
    const std::uint8_t eye = r.u8();
    if (eye > 1) {
        throw ProtocolError("subframe eye must be 0 or 1, got " + std::to_string(eye));
    }
    m.eye = static_cast<Eye>(eye);
    const std::uint8_t codec = r.u8();
    if (!is_known_codec(codec)) {
        throw ProtocolError("unknown codec id " + std::to_string(codec));
    }
    m.codec = static_cast<CodecId>(codec);
    m.x = r.u16();
    m.y = r.u16();
    m.w = r.u16();
    m.h = r.u16();
    const std::uint32_t len = r.u32();
    const auto payload = r.bytes(len);
    m.payload.assign(payload.begin(), payload.end());
    return m;
}

}  // namespace

MsgType message_type(const Message& msg) {
    return static_cast<MsgType>(msg.index() + 1);
}

void check_payload_size(std::uint64_t bytes) {
    if (bytes > kMaxPayloadBytes) {
        throw SizeError("subframe payload of " + std::to_string(bytes) +
                        " bytes exceeds the 2^32 - 16 limit");
    }
}

std::size_t framed_size(const Message& msg) { return kLengthFieldBytes + 1 + body_size(msg); }

void append_msg(std::vector<std::uint8_t>& out, const Message& msg) {
    if (const auto* sf = std::get_if<SubframeMsg>(&msg)) {
        check_payload_size(sf->payload.size());
    }
    const std::size_t length = 1 + body_size(msg);
    out.reserve(out.size() + kLengthFieldBytes + length);
    Writer w(out);
    w.u32(static_cast<std::uint32_t>(length));
    w.u8(static_cast<std::uint8_t>(message_type(msg)));
    std::visit([&w](const auto& m) { write_body(w, m); }, msg);
}

std::vector<std::uint8_t> write_msg(const Message& msg) {
    std::vector<std::uint8_t> out;
    append_msg(out, msg);
    return out;
}

Message parse_frame(std::span<const std::uint8_t> frame) {
    if (frame.empty()) {
        throw ProtocolError("empty frame");
    }
    Reader r(frame.subspan(1));
    Message msg;
    switch (frame[0]) {
        case static_cast<std::uint8_t>(MsgType::Hello):
            msg = read_hello(r);
            break;
        case static_cast<std::uint8_t>(MsgType::Pose):
            msg = read_pose(r);
            break;
        case static_cast<std::uint8_t>(MsgType::Subframe):
            msg = read_subframe(r);
            break;
        case static_cast<std::uint8_t>(MsgType::End):
            msg = EndMsg{r.u64()};
            break;
        default:
            throw ProtocolError("unknown message type " + std::to_string(frame[0]));
    }
    r.expect_end();
    return msg;
}

namespace {

std::uint32_t read_length(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void check_length(std::uint32_t length, std::size_t max_frame_bytes) {
    if (length == 0) {
        throw ProtocolError("zero-length frame");
    }
    if (length > max_frame_bytes) {
        throw ProtocolError("frame length " + std::to_string(length) + " exceeds limit of " +
                            std::to_string(max_frame_bytes));
    }
}

}  // namespace

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameDecoder::next() {
    if (buffer_.size() < kLengthFieldBytes) {
        return std::nullopt;
    }
    const std::uint32_t length = read_length(buffer_.data());
    check_length(length, max_frame_bytes_);
    if (buffer_.size() - kLengthFieldBytes < length) {
        return std::nullopt;
    }
    Message msg = parse_frame(std::span(buffer_).subspan(kLengthFieldBytes, length));
    buffer_.erase(buffer_.begin(),
                  buffer_.begin() + static_cast<std::ptrdiff_t>(kLengthFieldBytes + length));
    return msg;
}

namespace {

// Fills `out` completely. Returns false on end of stream before the first
// byte when `eof_ok`; any other short read is a ConnectionError.
bool read_exact(ByteStream& stream, std::span<std::uint8_t> out, bool eof_ok,
                std::chrono::steady_clock::time_point* first_byte) {
    std::size_t got = 0;
    while (got < out.size()) {
        const std::size_t n = stream.read_some(out.subspan(got));
        if (n == 0) {
            if (got == 0 && eof_ok) {
                return false;
            }
            throw ConnectionError("stream closed mid-frame");
        }
        if (got == 0 && first_byte) {
            *first_byte = std::chrono::steady_clock::now();
        }
        got += n;
    }
    return true;
}

}  // namespace

std::optional<Message> read_msg(ByteStream& stream, std::size_t max_frame_bytes,
                                ReadTiming* timing) {
    std::uint8_t header[kLengthFieldBytes];
    std::chrono::steady_clock::time_point first{};
    if (!read_exact(stream, header, true, &first)) {
        return std::nullopt;
    }
    const std::uint32_t length = read_length(header);
    check_length(length, max_frame_bytes);
    std::vector<std::uint8_t> frame(length);
    read_exact(stream, frame, false, nullptr);
    if (timing) {
        timing->first_byte = first;
        timing->last_byte = std::chrono::steady_clock::now();
    }
    return parse_frame(frame);
}

void MessageChannel::send(const Message& msg) {
    const std::vector<std::uint8_t> bytes = write_msg(msg);
    std::lock_guard lock(write_mutex_);
    stream_.write_all(bytes);
}

void MessageChannel::send_batch(std::span<const Message> msgs) {
    std::vector<std::uint8_t> bytes;
    for (const Message& m : msgs) {
        append_msg(bytes, m);
    }
    std::lock_guard lock(write_mutex_);
    stream_.write_all(bytes);
}

std::optional<Message> MessageChannel::receive(ReadTiming* timing) {
    return read_msg(stream_, max_frame_bytes_, timing);
}

void MessageChannel::close_write() {
    std::lock_guard lock(write_mutex_);
    stream_.shutdown_write();
}

HelloMsg make_hello(const PartitionSpec& spec, CodecId codec, SceneId scene, PathId path,
                    std::uint32_t frame_count) {
    require_valid(spec);
    if (spec.full_w > 0xFFFF || spec.full_h > 0xFFFF) {
        throw SizeError("frame dimensions do not fit the 16-bit wire fields");
    }
    HelloMsg h;
    h.full_w = static_cast<std::uint16_t>(spec.full_w);
    h.full_h = static_cast<std::uint16_t>(spec.full_h);
    h.fov_w = static_cast<std::uint16_t>(spec.fov_w);
    h.fov_h = static_cast<std::uint16_t>(spec.fov_h);
    h.periph_scale = spec.periph_scale;
    h.codec = static_cast<std::uint8_t>(codec);
    h.scene_id = static_cast<std::uint8_t>(scene);
    h.path_id = static_cast<std::uint8_t>(path);
    h.frame_count = frame_count;
    return h;
}

SessionParams accept_hello(const HelloMsg& hello) {
    if (hello.protocol_version != kProtocolVersion) {
        throw ProtocolError("protocol version mismatch: peer speaks " +
                            std::to_string(hello.protocol_version) + ", this build speaks " +
                            std::to_string(kProtocolVersion));
    }
    if (!is_known_codec(hello.codec)) {
        throw ProtocolError("hello names unknown codec " + std::to_string(hello.codec));
    }
    if (!is_known_scene(hello.scene_id)) {
        throw ProtocolError("hello names unknown scene " + std::to_string(hello.scene_id));
    }
    if (!is_known_path(hello.path_id)) {
        throw ProtocolError("hello names unknown camera path " + std::to_string(hello.path_id));
    }
    SessionParams p;
    p.spec = PartitionSpec::from_stereo(hello.full_w, hello.full_h, hello.fov_w, hello.fov_h,
                                        hello.periph_scale);
    const auto violations = validate(p.spec);
    if (!violations.empty()) {
        std::string msg = "hello carries an invalid partition:";
        for (const auto& v : violations) {
            msg += " " + v + ";";
        }
        throw ProtocolError(msg);
    }
    p.codec = static_cast<CodecId>(hello.codec);
    p.scene = static_cast<SceneId>(hello.scene_id);
    p.path = static_cast<PathId>(hello.path_id);
    p.frame_count = hello.frame_count;
    return p;
}

}  // namespace splitrender
