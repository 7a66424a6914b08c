#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "splitrender/client.hpp"
#include "splitrender/errors.hpp"
#include "splitrender/partition.hpp"

using namespace splitrender;

namespace {

PartitionSpec random_valid_spec(std::mt19937& rng) {
    std::uniform_int_distribution<int> eye_w(1, 80);
    std::uniform_int_distribution<int> eye_h(1, 60);
    const int ew = eye_w(rng);
    const int eh = eye_h(rng);
    const int fw = std::uniform_int_distribution<int>(1, ew)(rng);
    const int fh = std::uniform_int_distribution<int>(1, eh)(rng);
    const float scale = std::uniform_real_distribution<float>(0.05f, 1.0f)(rng);
    return PartitionSpec::from_stereo(2 * ew, eh, fw, fh, scale);
}

}  // namespace

TEST_SUITE("partition") {

TEST_CASE("default spec is the 2400x1080 / 512x360 / 0.6 setup and validates") {
    const PartitionSpec spec;
    CHECK(spec == PartitionSpec{2400, 1080, 1200, 1080, 512, 360, 0.6f});
    CHECK(validate(spec).empty());
}

TEST_CASE("foveal rect centering") {
    const PartitionSpec spec;
    CHECK(foveal_rect(spec, Eye::Left) == Rect{344, 360, 512, 360});
    CHECK(foveal_rect(spec, Eye::Right) == Rect{344, 360, 512, 360});
    CHECK(foveal_rect_stereo(spec, Eye::Left) == Rect{344, 360, 512, 360});
    CHECK(foveal_rect_stereo(spec, Eye::Right) == Rect{1544, 360, 512, 360});

    const PartitionSpec whole = PartitionSpec::from_stereo(2400, 1080, 1200, 1080, 0.6f);
    CHECK(foveal_rect(whole, Eye::Left) == Rect{0, 0, 1200, 1080});
}

TEST_CASE("reduced dims") {
    CHECK(reduced_dims(PartitionSpec{}) == Dims{1440, 648});
    CHECK(reduced_dims(PartitionSpec::from_stereo(2400, 1080, 512, 360, 1.0f)) ==
          Dims{2400, 1080});
    CHECK(reduced_dims(PartitionSpec::from_stereo(10, 10, 1, 1, 0.05f)) == Dims{1, 1});
}

TEST_CASE("validate reports every violation") {
    PartitionSpec spec;
    spec.fov_w = 1300;
    auto v = validate(spec);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "foveal width exceeds eye width");

    spec.periph_scale = 0.0f;
    spec.fov_h = 2000;
    v = validate(spec);
    CHECK(v.size() == 3);
    CHECK(std::find(v.begin(), v.end(), "peripheral scale must be in (0, 1]") != v.end());
    CHECK_THROWS_AS(foveal_rect(spec, Eye::Left), ParameterError);
    CHECK_THROWS_AS(reduced_dims(spec), ParameterError);

    PartitionSpec odd = PartitionSpec::from_stereo(2401, 1080, 512, 360, 0.6f);
    CHECK(!validate(odd).empty());
}

TEST_CASE("property: foveal rect is in bounds and centered") {
    std::mt19937 rng(21);
    for (int k = 0; k < 500; ++k) {
        const PartitionSpec spec = random_valid_spec(rng);
        REQUIRE(validate(spec).empty());
        for (const Eye eye : {Eye::Left, Eye::Right}) {
            const Rect r = foveal_rect(spec, eye);
            REQUIRE(rect_within(r, spec.eye_dims()));
            REQUIRE(rect_within(foveal_rect_stereo(spec, eye), spec.stereo_dims()));
            const int left = r.x;
            const int right = spec.eye_w - (r.x + r.w);
            const int top = r.y;
            const int bottom = spec.eye_h - (r.y + r.h);
            REQUIRE(right - left >= 0);
            REQUIRE(right - left <= 1);
            REQUIRE(bottom - top >= 0);
            REQUIRE(bottom - top <= 1);
        }
    }
}

TEST_CASE("property: merge covers every pixel exactly once per source") {
    // Tag the periphery with 0 and each fovea with its eye number, then count.
    std::mt19937 rng(22);
    for (int k = 0; k < 200; ++k) {
        const PartitionSpec spec = random_valid_spec(rng);
        const Image periphery(spec.full_w, spec.full_h, Rgb8{0, 0, 0});
        const std::array<Image, 2> fovea{Image(spec.fov_w, spec.fov_h, Rgb8{1, 0, 0}),
                                         Image(spec.fov_w, spec.fov_h, Rgb8{2, 0, 0})};
        const Image merged = merge(periphery, fovea, spec);
        std::array<std::size_t, 3> counts{};
        std::vector<int> owner(static_cast<std::size_t>(spec.full_w) * spec.full_h, -1);
        for (int y = 0; y < spec.full_h; ++y) {
            for (int x = 0; x < spec.full_w; ++x) {
                const int tag = merged.at(x, y).r;
                ++counts[tag];
                owner[static_cast<std::size_t>(y) * spec.full_w + x] = tag;
            }
        }
        const std::size_t fov_area = static_cast<std::size_t>(spec.fov_w) * spec.fov_h;
        REQUIRE(counts[1] == fov_area);
        REQUIRE(counts[2] == fov_area);
        REQUIRE(counts[0] + counts[1] + counts[2] ==
                static_cast<std::size_t>(spec.full_w) * spec.full_h);
        // Each eye's pixels stay inside that eye's half.
        for (int y = 0; y < spec.full_h; ++y) {
            for (int x = 0; x < spec.full_w; ++x) {
                const int tag = owner[static_cast<std::size_t>(y) * spec.full_w + x];
                if (tag == 1) {
                    REQUIRE(x < spec.eye_w);
                }
                if (tag == 2) {
                    REQUIRE(x >= spec.eye_w);
                }
            }
        }
    }
}

}
