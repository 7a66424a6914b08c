#include "splitrender/trace.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

namespace splitrender {

std::string_view event_name(EventKind kind) {
    switch (kind) {
        case EventKind::PoseSend: return "pose_send";
        case EventKind::PoseRecv: return "pose_recv";
        case EventKind::ServerDrawBegin: return "server_draw_begin";
        case EventKind::ServerDrawEnd: return "server_draw_end";
        case EventKind::EncodeBegin: return "encode_begin";
        case EventKind::EncodeEnd: return "encode_end";
        case EventKind::SubframeSendBegin: return "subframe_send_begin";
        case EventKind::SubframeSendEnd: return "subframe_send_end";
        case EventKind::SubframeFirstByte: return "subframe_first_byte";
        case EventKind::SubframeRecv: return "subframe_recv";
        case EventKind::ClientDrawBegin: return "client_draw_begin";
        case EventKind::ClientDrawEnd: return "client_draw_end";
        case EventKind::DecodeBegin: return "decode_begin";
        case EventKind::DecodeEnd: return "decode_end";
        case EventKind::MergeBegin: return "merge_begin";
        case EventKind::MergeEnd: return "merge_end";
        case EventKind::Display: return "display";
        case EventKind::EndSend: return "end_send";
    }
    return "unknown";
}

void EventTrace::record(Actor actor, EventKind kind, std::uint64_t frame_id) {
    // Stamp under the lock so insertion order matches time order.
    std::lock_guard lock(mutex_);
    events_.push_back({to_ms(std::chrono::steady_clock::now()), actor, kind, frame_id});
}

void EventTrace::record_at(double t_ms, Actor actor, EventKind kind, std::uint64_t frame_id) {
    std::lock_guard lock(mutex_);
    events_.push_back({t_ms, actor, kind, frame_id});
}

double EventTrace::now_ms() const { return to_ms(std::chrono::steady_clock::now()); }

double EventTrace::to_ms(std::chrono::steady_clock::time_point tp) const {
    return std::chrono::duration<double, std::milli>(tp - epoch_).count();
}

std::vector<TraceEvent> EventTrace::events() const {
    std::vector<TraceEvent> out;
    {
        std::lock_guard lock(mutex_);
        out = events_;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.t_ms < b.t_ms; });
    return out;
}

LockstepReport check_lockstep(const std::vector<TraceEvent>& events, std::uint64_t frame_count) {
    // Position in the total order; events may repeat (e.g. two subframes).
    std::map<std::pair<EventKind, std::uint64_t>, std::vector<std::size_t>> where;
    for (std::size_t i = 0; i < events.size(); ++i) {
        where[{events[i].kind, events[i].frame_id}].push_back(i);
    }

    LockstepReport report;
    const auto fail = [&report](std::string msg) {
        ++report.violations;
        report.messages.push_back(std::move(msg));
    };
    const auto find_one = [&](EventKind kind, std::uint64_t frame) -> std::optional<std::size_t> {
        auto it = where.find({kind, frame});
        if (it == where.end() || it->second.empty()) {
            fail("frame " + std::to_string(frame) + ": missing " + std::string(event_name(kind)));
            return std::nullopt;
        }
        return it->second.front();
    };
    const auto require_after = [&](std::size_t later, std::size_t earlier, std::uint64_t frame,
                                   EventKind a, EventKind b) {
        if (later <= earlier || events[later].t_ms < events[earlier].t_ms) {
            fail("frame " + std::to_string(frame) + ": " + std::string(event_name(a)) +
                 " does not follow " + std::string(event_name(b)));
        }
    };

    for (std::uint64_t n = 0; n < frame_count; ++n) {
        ++report.frames_checked;
        const auto recv = find_one(EventKind::PoseRecv, n);
        const auto draw = find_one(EventKind::ServerDrawBegin, n);
        if (recv && draw) {
            require_after(*draw, *recv, n, EventKind::ServerDrawBegin, EventKind::PoseRecv);
        }
        if (auto it = where.find({EventKind::ServerDrawBegin, n});
            it != where.end() && it->second.size() != 1) {
            fail("frame " + std::to_string(n) + ": server drew " +
                 std::to_string(it->second.size()) + " times");
        }
        if (n > 0) {
            const auto send = find_one(EventKind::PoseSend, n);
            const auto shown = find_one(EventKind::Display, n - 1);
            if (send && shown) {
                require_after(*send, *shown, n, EventKind::PoseSend, EventKind::Display);
            }
        }
        const auto merge = find_one(EventKind::MergeBegin, n);
        const auto draw_end = find_one(EventKind::ClientDrawEnd, n);
        const auto decode_end = find_one(EventKind::DecodeEnd, n);
        if (merge && draw_end) {
            require_after(*merge, *draw_end, n, EventKind::MergeBegin, EventKind::ClientDrawEnd);
        }
        if (merge && decode_end) {
            require_after(*merge, *decode_end, n, EventKind::MergeBegin, EventKind::DecodeEnd);
        }
    }
    return report;
}

}  // namespace splitrender
