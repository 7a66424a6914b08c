#include <doctest.h>

#include <zlib.h>

#include <random>

#include "oracles.hpp"
#include "splitrender/codec.hpp"
#include "splitrender/errors.hpp"
#include "splitrender/render.hpp"

using namespace splitrender;

namespace {

// Inflates the body with zlib directly, bypassing the library decoder.
std::vector<std::uint8_t> raw_inflate(std::span<const std::uint8_t> body, std::size_t size) {
    std::vector<std::uint8_t> out(size);
    z_stream zs{};
    REQUIRE(inflateInit2(&zs, -MAX_WBITS) == Z_OK);
    zs.next_in = const_cast<Bytef*>(body.data());
    zs.avail_in = static_cast<uInt>(body.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    REQUIRE(rc == Z_STREAM_END);
    return out;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("codec ids are stable") {
    CHECK(static_cast<int>(CodecId::Raw) == 0);
    CHECK(static_cast<int>(CodecId::PredDeflate) == 1);
    CHECK(parse_codec("raw") == CodecId::Raw);
    CHECK(parse_codec("pred-deflate") == CodecId::PredDeflate);
    CHECK(!parse_codec("h264"));
}

TEST_CASE("raw payload is the pixel bytes") {
    std::mt19937 rng(1);
    const Image img = oracle::random_image(rng, 512, 360);
    const auto bytes = encode(CodecId::Raw, img);
    CHECK(bytes.size() == 552960);
    CHECK(std::equal(bytes.begin(), bytes.end(), img.bytes().begin()));
}

TEST_CASE("raw decode of a single pixel") {
    const std::vector<std::uint8_t> px{10, 20, 30};
    const Image img = decode(CodecId::Raw, px, 1, 1);
    CHECK(img.at(0, 0) == Rgb8{10, 20, 30});
}

TEST_CASE("residual transform matches the oracle and inverts") {
    std::mt19937 rng(2);
    for (const auto [w, h] : {std::pair{1, 1}, std::pair{1, 7}, std::pair{9, 1}, std::pair{13, 11}}) {
        const Image img = oracle::random_image(rng, w, h);
        std::vector<std::uint8_t> bytes(img.bytes().begin(), img.bytes().end());
        predict_residuals(bytes, w, h);
        REQUIRE(bytes == oracle::residuals(img));
        reconstruct_from_residuals(bytes, w, h);
        REQUIRE(std::equal(bytes.begin(), bytes.end(), img.bytes().begin()));
    }
}

TEST_CASE("pred-deflate body is a raw DEFLATE stream of the residuals plus CRC-32") {
    std::mt19937 rng(3);
    const Image img = oracle::gradient_image(rng, 37, 21);
    const auto payload = encode(CodecId::PredDeflate, img);
    REQUIRE(payload.size() > 4);
    const auto body = std::span(payload).first(payload.size() - 4);
    CHECK(raw_inflate(body, img.byte_size()) == oracle::residuals(img));
    const std::uint32_t crc =
        static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size())));
    const auto* t = payload.data() + body.size();
    CHECK(crc == (t[0] | t[1] << 8 | t[2] << 16 | static_cast<std::uint32_t>(t[3]) << 24));
}

TEST_CASE("constant image compresses below 5000 bytes") {
    const Image img(512, 360, Rgb8{90, 140, 200});
    const auto payload = encode(CodecId::PredDeflate, img);
    MESSAGE("constant 512x360 pred-deflate payload: " << payload.size() << " bytes");
    CHECK(payload.size() < 5000);
    CHECK(decode(CodecId::PredDeflate, payload, 512, 360) == img);
}

TEST_CASE("encode is deterministic") {
    std::mt19937 rng(4);
    const Image img = oracle::gradient_image(rng, 64, 48);
    CHECK(encode(CodecId::PredDeflate, img) == encode(CodecId::PredDeflate, img));
}

TEST_CASE("property: lossless round trip") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> wdist(1, 257);
    std::uniform_int_distribution<int> hdist(1, 129);
    for (int k = 0; k < 300; ++k) {
        const int w = k == 0 ? 1 : wdist(rng);
        const int h = k == 0 ? 1 : hdist(rng);
        const Image img = (k % 2) ? oracle::random_image(rng, w, h) : oracle::gradient_image(rng, w, h);
        for (const CodecId c : {CodecId::Raw, CodecId::PredDeflate}) {
            REQUIRE(decode(c, encode(c, img), w, h) == img);
        }
    }
}

TEST_CASE("rendered content compresses") {
    CameraPath path;
    path.frame_count = 8;
    const Image img =
        render_region({}, {}, pose_at(path, 1), Eye::Left, {256, 180}, {64, 45, 128, 90});
    const auto raw = encode(CodecId::Raw, img);
    const auto packed = encode(CodecId::PredDeflate, img);
    MESSAGE("rendered 128x90 ratio " << static_cast<double>(raw.size()) / packed.size());
    CHECK(packed.size() < raw.size());
}

TEST_CASE("truncation is always an error") {
    std::mt19937 rng(6);
    const Image img = oracle::gradient_image(rng, 40, 30);
    for (const CodecId c : {CodecId::Raw, CodecId::PredDeflate}) {
        const auto payload = encode(c, img);
        for (std::size_t cut = 1; cut <= payload.size(); cut += 1 + cut / 8) {
            const auto shorter = std::span(payload).first(payload.size() - cut);
            CHECK_THROWS_AS(decode(c, shorter, 40, 30), DecodeError);
        }
    }
}

TEST_CASE("single-byte corruption of pred-deflate is an error") {
    std::mt19937 rng(7);
    const Image img = oracle::gradient_image(rng, 33, 17);
    const auto payload = encode(CodecId::PredDeflate, img);
    for (std::size_t i = 0; i < payload.size(); ++i) {
        auto bad = payload;
        bad[i] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        REQUIRE_THROWS_AS(decode(CodecId::PredDeflate, bad, 33, 17), DecodeError);
    }
}

TEST_CASE("trailing bytes and dimension mismatch are errors") {
    const Image img(8, 8, Rgb8{1, 2, 3});
    for (const CodecId c : {CodecId::Raw, CodecId::PredDeflate}) {
        auto payload = encode(c, img);
        CHECK_THROWS_AS(decode(c, payload, 8, 9), DecodeError);
        CHECK_THROWS_AS(decode(c, payload, 7, 8), DecodeError);
        CHECK_THROWS_AS(decode(c, payload, 0, 8), DecodeError);
        payload.push_back(0);
        CHECK_THROWS_AS(decode(c, payload, 8, 8), DecodeError);
    }
}

TEST_CASE("random garbage never decodes as pred-deflate") {
    std::mt19937 rng(8);
    std::uniform_int_distribution<int> len(0, 600);
    for (int k = 0; k < 500; ++k) {
        std::vector<std::uint8_t> junk(static_cast<std::size_t>(len(rng)));
        for (auto& b : junk) {
            b = static_cast<std::uint8_t>(rng());
        }
        REQUIRE_THROWS_AS(decode(CodecId::PredDeflate, junk, 10, 10), DecodeError);
    }
}

}
