#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitrender/client.hpp"
#include "splitrender/server.hpp"

namespace splitrender {

// Quantiles use linear interpolation between order statistics: for sorted
// x[0..n-1], q(p) = x[k] + (h - k) (x[k+1] - x[k]) with h = (n - 1) p,
// k = floor(h). All functions throw ArgumentError on empty input.
double quantile(std::span<const double> samples, double p);
double median(std::span<const double> samples);
double iqr(std::span<const double> samples);

/// payload_bytes * 8 / seconds / 1e6. Throws ArgumentError unless seconds > 0.
double mbps(std::uint64_t payload_bytes, double network_seconds);

/// (native - split) / split * 100. Throws ArgumentError on nonpositive input.
double improvement_pct(double native_ms, double split_ms);

/// 1000 / ms rounded to the nearest integer.
int display_fps(double frame_ms);

struct StageStats {
    double median_ms = 0.0;
    double iqr_ms = 0.0;
};

struct Summary {
    std::size_t frame_count = 0;
    StageStats client_draw;
    StageStats network;
    StageStats decode;
    StageStats merge;
    StageStats pose;
    StageStats total;
    double median_fps = 0.0;
    /// Median over frames with a nonzero network time; nullopt if none.
    std::optional<double> mbps;

    std::optional<std::size_t> server_frame_count;
    StageStats server_draw;
    StageStats encode;
    StageStats send;

    std::string server_dims;  // "512x360", for the table
};

Summary summarize(std::span<const ClientFrameRecord> client,
                  std::span<const ServerFrameTiming> server = {});

/// Server-only summary (client fields zero, frame_count 0).
Summary summarize_server(std::span<const ServerFrameTiming> server);

/// Aligned text tables shaped like the client and server profiling tables.
std::string render_table(const Summary& summary);

/// key=value lines, one metric per line.
std::string render_key_values(const Summary& summary);

inline constexpr const char* kClientCsvHeader =
    "frame_id,draw_ms,network_ms,decode_ms,merge_ms,pose_ms,total_ms,bytes_received";
inline constexpr const char* kServerCsvHeader = "frame_id,draw_ms,encode_ms,send_ms,bytes_sent";

void write_csv(std::span<const ClientFrameRecord> records, const std::filesystem::path& path);
void write_csv(std::span<const ServerFrameTiming> records, const std::filesystem::path& path);
std::string to_csv(std::span<const ClientFrameRecord> records);
std::string to_csv(std::span<const ServerFrameTiming> records);

/// Throws ArgumentError on a bad header or malformed row.
std::vector<ClientFrameRecord> read_client_csv(const std::filesystem::path& path);
std::vector<ServerFrameTiming> read_server_csv(const std::filesystem::path& path);
std::vector<ClientFrameRecord> parse_client_csv(const std::string& text);
std::vector<ServerFrameTiming> parse_server_csv(const std::string& text);

}  // namespace splitrender
