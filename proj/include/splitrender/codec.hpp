#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "splitrender/image.hpp"

namespace splitrender {

// Wire-visible; never renumber.
enum class CodecId : std::uint8_t {
    Raw = 0,
    PredDeflate = 1,
};

bool is_known_codec(std::uint8_t id);
std::string_view codec_name(CodecId id);
std::optional<CodecId> parse_codec(std::string_view name);

struct CodecOptions {
    int deflate_level = 6;
};

/// Lossless intra-frame encode.
///
/// Raw: the pixel bytes verbatim (w * h * 3 bytes).
///
/// PredDeflate: each byte is replaced by its difference (mod 256) from the
/// same channel of the left neighbour; the first pixel of a row is predicted
/// from the pixel above and the top-left pixel from zero. The residuals are
/// compressed into a raw DEFLATE stream (RFC 1951) which is followed by the
/// little-endian CRC-32 of the compressed bytes. Width and height are not
/// stored; the decoder gets them out of band.
std::vector<std::uint8_t> encode(CodecId codec, const Image& img, const CodecOptions& opts = {});

/// Inverse of encode. Throws DecodeError on truncated, corrupt, oversized or
/// trailing data, and never returns a partial image.
Image decode(CodecId codec, std::span<const std::uint8_t> data, int width, int height);

// Exposed for tests: residual transform and its inverse, in place.
void predict_residuals(std::span<std::uint8_t> rgb, int width, int height);
void reconstruct_from_residuals(std::span<std::uint8_t> rgb, int width, int height);

}  // namespace splitrender
