#include "splitrender/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "splitrender/errors.hpp"

namespace splitrender {

double quantile(std::span<const double> samples, double p) {
    if (samples.empty()) {
        throw ArgumentError("quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ArgumentError("quantile probability must be in [0, 1]");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto k = static_cast<std::size_t>(std::floor(h));
    if (k + 1 >= sorted.size()) {
        return sorted.back();
    }
    return sorted[k] + (h - static_cast<double>(k)) * (sorted[k + 1] - sorted[k]);
}

double median(std::span<const double> samples) { return quantile(samples, 0.5); }

double iqr(std::span<const double> samples) {
    return quantile(samples, 0.75) - quantile(samples, 0.25);
}

double mbps(std::uint64_t payload_bytes, double network_seconds) {
    if (!(network_seconds > 0.0)) {
        throw ArgumentError("network duration must be > 0");
    }
    return static_cast<double>(payload_bytes) * 8.0 / network_seconds / 1e6;
}

double improvement_pct(double native_ms, double split_ms) {
    if (!(native_ms > 0.0) || !(split_ms > 0.0)) {
        throw ArgumentError("frame times must be > 0");
    }
    return (native_ms - split_ms) / split_ms * 100.0;
}

int display_fps(double frame_ms) {
    if (!(frame_ms > 0.0)) {
        throw ArgumentError("frame time must be > 0");
    }
    return static_cast<int>(std::lround(1000.0 / frame_ms));
}

namespace {

template <typename Record, typename Field>
StageStats stage(std::span<const Record> records, Field field) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const Record& r : records) {
        v.push_back(field(r));
    }
    return {median(v), iqr(v)};
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string cell(const StageStats& s) { return fmt("%.2f", s.median_ms) + fmt(" (%.2f)", s.iqr_ms); }

std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

std::string row(const std::vector<std::string>& cells, std::size_t width) {
    std::string out;
    for (const auto& c : cells) {
        out += pad(c, width);
    }
    while (!out.empty() && out.back() == ' ') {
        out.pop_back();
    }
    return out + "\n";
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ArgumentError("line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ArgumentError("line " + std::to_string(line) + ": bad integer '" + s + "'");
    }
    return v;
}

std::vector<std::vector<std::string>> parse_rows(const std::string& text, const char* header,
                                                 std::size_t columns) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ArgumentError("CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != header) {
        throw ArgumentError("unexpected CSV header '" + line + "'");
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cells.push_back(c);
        }
        if (cells.size() != columns) {
            throw ArgumentError("line " + std::to_string(line_no) + ": expected " +
                                std::to_string(columns) + " columns");
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& text, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
}

}  // namespace

Summary summarize(std::span<const ClientFrameRecord> client,
                  std::span<const ServerFrameTiming> server) {
    if (client.empty()) {
        throw ArgumentError("cannot summarize zero client records");
    }
    Summary s;
    s.frame_count = client.size();
    using R = ClientFrameRecord;
    s.client_draw = stage(client, [](const R& r) { return r.draw_ms; });
    s.network = stage(client, [](const R& r) { return r.network_ms; });
    s.decode = stage(client, [](const R& r) { return r.decode_ms; });
    s.merge = stage(client, [](const R& r) { return r.merge_ms; });
    s.pose = stage(client, [](const R& r) { return r.pose_ms; });
    s.total = stage(client, [](const R& r) { return r.total_ms; });
    s.median_fps = s.total.median_ms > 0.0 ? 1000.0 / s.total.median_ms : 0.0;

    std::vector<double> rates;
    for (const R& r : client) {
        if (r.network_ms > 0.0) {
            rates.push_back(mbps(r.bytes_received, r.network_ms / 1000.0));
        }
    }
    if (!rates.empty()) {
        s.mbps = median(rates);
    }

    if (!server.empty()) {
        const Summary srv = summarize_server(server);
        s.server_frame_count = srv.server_frame_count;
        s.server_draw = srv.server_draw;
        s.encode = srv.encode;
        s.send = srv.send;
    }
    return s;
}

Summary summarize_server(std::span<const ServerFrameTiming> server) {
    if (server.empty()) {
        throw ArgumentError("cannot summarize zero server records");
    }
    Summary s;
    {
        using S = ServerFrameTiming;
        s.server_frame_count = server.size();
        s.server_draw = stage(server, [](const S& r) { return r.draw_ms; });
        s.encode = stage(server, [](const S& r) { return r.encode_ms; });
        s.send = stage(server, [](const S& r) { return r.send_ms; });
    }
    return s;
}

std::string render_table(const Summary& s) {
    constexpr std::size_t w = 18;
    const std::string dims = s.server_dims.empty() ? "-" : s.server_dims;
    std::string out;
    if (s.frame_count > 0) {
        out += "Client profiling: median ms (IQR)\n";
        out += row({"Server Dims", "Draw", "Network", "Decode", "Merge", "Pose", "Total", "Mbps"}, w);
        out += row({dims, cell(s.client_draw), cell(s.network), cell(s.decode), cell(s.merge),
                    cell(s.pose), cell(s.total), s.mbps ? fmt("%.2f", *s.mbps) : "n/a"},
                   w);
        out += "frames " + std::to_string(s.frame_count) + ", median end-to-end " +
               fmt("%.2f", s.total.median_ms) + " ms/frame (" +
               (s.total.median_ms > 0.0 ? std::to_string(display_fps(s.total.median_ms)) : "-") +
               " fps, IQR = " + fmt("%.3f", s.total.iqr_ms) + ")\n";
    }
    if (s.server_frame_count) {
        if (!out.empty()) {
            out += "\n";
        }
        out += "Server profiling: median ms (IQR)\n";
        out += row({"Server Dims", "Draw Time", "Encode Time", "Send Time"}, w);
        out += row({dims, cell(s.server_draw), cell(s.encode), cell(s.send)}, w);
    }
    return out;
}

std::string render_key_values(const Summary& s) {
    std::string out;
    const auto kv = [&out](const std::string& k, double v) { out += k + "=" + number(v) + "\n"; };
    const auto stage_kv = [&kv](const std::string& name, const StageStats& st) {
        kv(name + "_median_ms", st.median_ms);
        kv(name + "_iqr_ms", st.iqr_ms);
    };
    kv("frame_count", static_cast<double>(s.frame_count));
    stage_kv("client_draw", s.client_draw);
    stage_kv("network", s.network);
    stage_kv("decode", s.decode);
    stage_kv("merge", s.merge);
    stage_kv("pose", s.pose);
    stage_kv("total", s.total);
    kv("median_fps", s.median_fps);
    if (s.mbps) {
        kv("mbps", *s.mbps);
    }
    if (s.server_frame_count) {
        kv("server_frame_count", static_cast<double>(*s.server_frame_count));
        stage_kv("server_draw", s.server_draw);
        stage_kv("encode", s.encode);
        stage_kv("send", s.send);
    }
    return out;
}

std::string to_csv(std::span<const ClientFrameRecord> records) {
    std::string out = std::string(kClientCsvHeader) + "\n";
    for (const auto& r : records) {
        out += std::to_string(r.frame_id) + "," + number(r.draw_ms) + "," + number(r.network_ms) +
               "," + number(r.decode_ms) + "," + number(r.merge_ms) + "," + number(r.pose_ms) +
               "," + number(r.total_ms) + "," + std::to_string(r.bytes_received) + "\n";
    }
    return out;
}

std::string to_csv(std::span<const ServerFrameTiming> records) {
    std::string out = std::string(kServerCsvHeader) + "\n";
    for (const auto& r : records) {
        out += std::to_string(r.frame_id) + "," + number(r.draw_ms) + "," + number(r.encode_ms) +
               "," + number(r.send_ms) + "," + std::to_string(r.bytes_sent) + "\n";
    }
    return out;
}

void write_csv(std::span<const ClientFrameRecord> records, const std::filesystem::path& path) {
    spit(to_csv(records), path);
}

void write_csv(std::span<const ServerFrameTiming> records, const std::filesystem::path& path) {
    spit(to_csv(records), path);
}

std::vector<ClientFrameRecord> parse_client_csv(const std::string& text) {
    std::vector<ClientFrameRecord> out;
    std::size_t line = 1;
    for (const auto& c : parse_rows(text, kClientCsvHeader, 8)) {
        ++line;
        out.push_back({parse_u64(c[0], line), parse_double(c[1], line), parse_double(c[2], line),
                       parse_double(c[3], line), parse_double(c[4], line), parse_double(c[5], line),
                       parse_double(c[6], line), parse_u64(c[7], line)});
    }
    return out;
}

std::vector<ServerFrameTiming> parse_server_csv(const std::string& text) {
    std::vector<ServerFrameTiming> out;
    std::size_t line = 1;
    for (const auto& c : parse_rows(text, kServerCsvHeader, 5)) {
        ++line;
        out.push_back({parse_u64(c[0], line), parse_double(c[1], line), parse_double(c[2], line),
                       parse_double(c[3], line), parse_u64(c[4], line)});
    }
    return out;
}

std::vector<ClientFrameRecord> read_client_csv(const std::filesystem::path& path) {
    return parse_client_csv(slurp(path));
}

std::vector<ServerFrameTiming> read_server_csv(const std::filesystem::path& path) {
    return parse_server_csv(slurp(path));
}

}  // namespace splitrender
