#include "splitrender/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <climits>
#include <cstring>
#include <string>

#include "splitrender/errors.hpp"

namespace splitrender {

namespace {

constexpr std::size_t kCrcBytes = 4;

std::size_t expected_bytes(int width, int height) {
    if (width < 1 || height < 1) {
        throw DecodeError("decode dimensions must be at least 1x1");
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Image::kChannels;
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, UINT_MAX));
        crc = crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> input, int level) {
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw std::runtime_error("deflateInit2 failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(input.size())) + kCrcBytes);
    zs.next_in = const_cast<Bytef*>(input.data());
    zs.avail_in = static_cast<uInt>(input.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size() - kCrcBytes);
    const int rc = deflate(&zs, Z_FINISH);
    const std::size_t produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        throw std::runtime_error("deflate did not finish");
    }
    out.resize(produced);
    return out;
}

// Inflates exactly `expected` bytes; anything else is an error.
std::vector<std::uint8_t> inflate_exact(std::span<const std::uint8_t> input, std::size_t expected) {
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
        throw DecodeError("inflateInit2 failed");
    }
    std::vector<std::uint8_t> out(expected);
    zs.next_in = const_cast<Bytef*>(input.data());
    zs.avail_in = static_cast<uInt>(input.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t consumed = zs.total_in;
    const std::size_t produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        throw DecodeError(rc == Z_DATA_ERROR ? "corrupt deflate stream"
                                             : "deflate stream truncated or oversized");
    }
    if (produced != expected) {
        throw DecodeError("deflate stream decoded to " + std::to_string(produced) +
                          " bytes, expected " + std::to_string(expected));
    }
    if (consumed != input.size()) {
        throw DecodeError("trailing bytes after deflate stream");
    }
    return out;
}

}  // namespace

bool is_known_codec(std::uint8_t id) {
    return id == static_cast<std::uint8_t>(CodecId::Raw) ||
           id == static_cast<std::uint8_t>(CodecId::PredDeflate);
}

std::string_view codec_name(CodecId id) {
    switch (id) {
        case CodecId::Raw:
            return "raw";
        case CodecId::PredDeflate:
            return "pred-deflate";
    }
    return "unknown";
}

std::optional<CodecId> parse_codec(std::string_view name) {
    if (name == "raw") {
        return CodecId::Raw;
    }
    if (name == "pred-deflate" || name == "pred_deflate") {
        return CodecId::PredDeflate;
    }
    return std::nullopt;
}

void predict_residuals(std::span<std::uint8_t> rgb, int width, int height) {
    const std::size_t stride = static_cast<std::size_t>(width) * Image::kChannels;
    // Walk backwards so every predictor is still an original value.
    for (int y = height - 1; y >= 0; --y) {
        std::uint8_t* row = rgb.data() + y * stride;
        for (std::size_t i = stride; i-- > Image::kChannels;) {
            row[i] = static_cast<std::uint8_t>(row[i] - row[i - Image::kChannels]);
        }
        if (y > 0) {
            const std::uint8_t* above = row - stride;
            for (int c = 0; c < Image::kChannels; ++c) {
                row[c] = static_cast<std::uint8_t>(row[c] - above[c]);
            }
        }
    }
}

void reconstruct_from_residuals(std::span<std::uint8_t> rgb, int width, int height) {
    const std::size_t stride = static_cast<std::size_t>(width) * Image::kChannels;
    for (int y = 0; y < height; ++y) {
        std::uint8_t* row = rgb.data() + y * stride;
        if (y > 0) {
            const std::uint8_t* above = row - stride;
            for (int c = 0; c < Image::kChannels; ++c) {
                row[c] = static_cast<std::uint8_t>(row[c] + above[c]);
            }
        }
        for (std::size_t i = Image::kChannels; i < stride; ++i) {
            row[i] = static_cast<std::uint8_t>(row[i] + row[i - Image::kChannels]);
        }
    }
}

std::vector<std::uint8_t> encode(CodecId codec, const Image& img, const CodecOptions& opts) {
    if (img.empty()) {
        throw ParameterError("cannot encode an empty image");
    }
    const auto pixels = img.bytes();
    switch (codec) {
        case CodecId::Raw:
            return {pixels.begin(), pixels.end()};
        case CodecId::PredDeflate: {
            std::vector<std::uint8_t> residuals(pixels.begin(), pixels.end());
            predict_residuals(residuals, img.width(), img.height());
            std::vector<std::uint8_t> out = deflate_raw(residuals, opts.deflate_level);
            const std::uint32_t crc = crc_of(out);
            for (std::size_t i = 0; i < kCrcBytes; ++i) {
                out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
            }
            return out;
        }
    }
    throw ParameterError("unknown codec id " + std::to_string(static_cast<int>(codec)));
}

Image decode(CodecId codec, std::span<const std::uint8_t> data, int width, int height) {
    const std::size_t expected = expected_bytes(width, height);
    switch (codec) {
        case CodecId::Raw:
            if (data.size() != expected) {
                throw DecodeError("raw payload is " + std::to_string(data.size()) +
                                  " bytes, expected " + std::to_string(expected));
            }
            return Image(width, height, std::vector<std::uint8_t>(data.begin(), data.end()));
        case CodecId::PredDeflate: {
            if (data.size() < kCrcBytes + 1) {
                throw DecodeError("payload too short");
            }
            const auto stream = data.first(data.size() - kCrcBytes);
            const auto trailer = data.last(kCrcBytes);
            std::uint32_t stored = 0;
            for (std::size_t i = 0; i < kCrcBytes; ++i) {
                stored |= static_cast<std::uint32_t>(trailer[i]) << (8 * i);
            }
            if (stored != crc_of(stream)) {
                throw DecodeError("payload checksum mismatch");
            }
            std::vector<std::uint8_t> bytes = inflate_exact(stream, expected);
            reconstruct_from_residuals(bytes, width, height);
            return Image(width, height, std::move(bytes));
        }
    }
    throw DecodeError("unknown codec id " + std::to_string(static_cast<int>(codec)));
}

}  // namespace splitrender
