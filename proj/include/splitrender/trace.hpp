#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace splitrender {

enum class Actor : std::uint8_t { Server, Client };

enum class EventKind : std::uint8_t {
    PoseSend,
    PoseRecv,
    ServerDrawBegin,
    ServerDrawEnd,
    EncodeBegin,
    EncodeEnd,
    SubframeSendBegin,
    SubframeSendEnd,
    SubframeFirstByte,
    SubframeRecv,
    ClientDrawBegin,
    ClientDrawEnd,
    DecodeBegin,
    DecodeEnd,
    MergeBegin,
    MergeEnd,
    Display,
    EndSend,
};

std::string_view event_name(EventKind kind);

struct TraceEvent {
    double t_ms = 0.0;
    Actor actor = Actor::Server;
    EventKind kind = EventKind::PoseSend;
    std::uint64_t frame_id = 0;

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Append-only event log; appends are serialized. Wall-clock users stamp
/// events relative to the trace epoch, virtual-clock users pass times in.
class EventTrace {
public:
    EventTrace() : epoch_(std::chrono::steady_clock::now()) {}

    void record(Actor actor, EventKind kind, std::uint64_t frame_id);
    void record_at(double t_ms, Actor actor, EventKind kind, std::uint64_t frame_id);
    double now_ms() const;
    double to_ms(std::chrono::steady_clock::time_point tp) const;

    /// Snapshot sorted by time; ties keep insertion order.
    std::vector<TraceEvent> events() const;

private:
    std::chrono::steady_clock::time_point epoch_;
    mutable std::mutex mutex_;
    std::vector<TraceEvent> events_;
};

/// Mechanical lockstep check over a trace; returns the number of violations
/// and fills `messages` with a description of each. Checked per frame n:
///   server draw-begin(n) follows pose-recv(n) (strictly),
///   pose-send(n) follows display(n - 1),
///   merge-begin(n) follows both client draw-end(n) and decode-end(n).
struct LockstepReport {
    std::size_t frames_checked = 0;
    std::size_t violations = 0;
    std::vector<std::string> messages;
};

LockstepReport check_lockstep(const std::vector<TraceEvent>& events, std::uint64_t frame_count);

}  // namespace splitrender
