#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splitrender/client.hpp"
#include "splitrender/codec.hpp"
#include "splitrender/metrics.hpp"
#include "splitrender/partition.hpp"
#include "splitrender/render.hpp"
#include "splitrender/server.hpp"
#include "splitrender/trace.hpp"
#include "splitrender/transport.hpp"

namespace splitrender {

enum class Mode { Server, Client, Native, Sim, Compare, Report };
enum class ClockMode { Virtual, Wall };
enum class SinkKind { Null, Ppm };

/// Stage durations for virtual-clock runs: a fixed part plus a per-ray part
/// for the two draw stages.
struct CostModel {
    double client_draw_ms = 6.0;
    double client_ms_per_mray = 0.0;
    double server_draw_ms = 5.0;
    double server_ms_per_mray = 0.0;
    double encode_ms = 3.0;
    double decode_ms = 4.0;
    double merge_ms = 1.0;
    double pose_ms = 0.0;
    /// Extra delay before the client sends the pose for a given frame.
    std::map<std::uint64_t, double> pose_delay_ms;

    double client_draw(std::uint64_t rays) const;
    double server_draw(std::uint64_t rays) const;
};

struct RunConfig {
    Mode mode = Mode::Sim;
    PartitionSpec spec;
    CodecId codec = CodecId::PredDeflate;
    SceneId scene = SceneId::Spheres;
    PathId path = PathId::Orbit;
    std::uint32_t frame_count = 1000;
    CameraRig rig;

    std::string host = "127.0.0.1";
    std::uint16_t port = 7878;

    NetModel net;
    ClockMode clock = ClockMode::Virtual;
    CostModel cost;
    /// Virtual clock only: skip pixel work and keep the timeline.
    bool timing_only = false;
    bool parallel_encode = false;
    /// Client mode: run split against a server, or native on its own.
    bool client_native = false;

    SinkKind sink = SinkKind::Null;
    std::filesystem::path ppm_dir = "frames";
    std::uint64_t ppm_every = 1;

    std::filesystem::path server_csv;
    std::filesystem::path client_csv;
    std::filesystem::path summary_kv;
    std::filesystem::path native_csv;
};

/// Parses a command line (argv[0] is the program). Defaults match the
/// 2400x1080 stereo / 512x360 fovea / 0.6 scale / 1000 frame setup.
/// Throws UsageError on unknown flags, bad values, invalid partitions (all
/// violations listed) or flag combinations that do not apply to the mode.
/// `env_host` / `env_port` override the endpoint defaults (flags win).
RunConfig parse_cli(const std::vector<std::string>& args,
                    const std::optional<std::string>& env_host = std::nullopt,
                    const std::optional<std::string>& env_port = std::nullopt);

struct SimResult {
    std::vector<ClientFrameRecord> client;
    std::vector<ServerFrameTiming> server;
    std::vector<TraceEvent> trace;
};

/// Server and client in one process. Virtual clock: a deterministic
/// event-driven timeline with stage costs from the cost model and link
/// delays from the net model. Wall clock: both runtimes on their own threads
/// joined by an in-memory link that applies the net model.
SimResult run_sim(const RunConfig& config, DisplaySink* sink = nullptr);

/// Native run under the same clock mode as `run_sim`.
std::vector<ClientFrameRecord> run_native_mode(const RunConfig& config,
                                               DisplaySink* sink = nullptr);

struct CompareReport {
    Summary native;
    Summary split;
    double improvement_pct = 0.0;
    std::string text;
};

CompareReport make_compare_report(std::span<const ClientFrameRecord> native,
                                  std::span<const ClientFrameRecord> split,
                                  std::span<const ServerFrameTiming> server,
                                  const PartitionSpec& spec);

/// Native then split (sim) over the same path and frames.
CompareReport run_compare(const RunConfig& config);

/// Full CLI dispatch; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace splitrender
