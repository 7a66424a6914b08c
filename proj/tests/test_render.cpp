#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splitrender/errors.hpp"
#include "splitrender/render.hpp"

using namespace splitrender;

namespace {

CameraPath orbit4() {
    CameraPath p;
    p.center = {0.0f, 0.0f, 0.0f};
    p.radius = 1.0f;
    p.height = 0.0f;
    p.frame_count = 4;
    return p;
}

Pose default_pose(std::uint64_t frame = 3) {
    CameraPath p;
    p.frame_count = 32;
    return pose_at(p, frame);
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("orbit pose positions") {
    const Pose p0 = pose_at(orbit4(), 0);
    CHECK(p0.position.x == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(p0.position.y) <= 1e-6);
    CHECK(std::abs(p0.position.z) <= 1e-6);

    const Pose p1 = pose_at(orbit4(), 1);
    CHECK(std::abs(p1.position.x) <= 1e-6);
    CHECK(std::abs(p1.position.y) <= 1e-6);
    CHECK(std::abs(p1.position.z - 1.0f) <= 1e-6);
}

TEST_CASE("pose_at is deterministic and unit-norm") {
    CameraPath p;
    p.frame_count = 1000;
    for (std::uint64_t f : {0ull, 1ull, 250ull, 777ull, 999ull}) {
        const Pose a = pose_at(p, f);
        const Pose b = pose_at(p, f);
        CHECK(a == b);
        CHECK(is_unit(a.orientation));
    }
}

TEST_CASE("pose_at looks at the orbit center") {
    CameraPath p;
    p.frame_count = 16;
    for (std::uint64_t f = 0; f < 16; ++f) {
        const Pose pose = pose_at(p, f);
        const Vec3 fwd = rotate(pose.orientation, {0.0f, 0.0f, -1.0f});
        const float dx = p.center.x - pose.position.x;
        const float dy = p.center.y - pose.position.y;
        const float dz = p.center.z - pose.position.z;
        const float len = std::sqrt(dx * dx + dy * dy + dz * dz);
        CHECK(fwd.x == doctest::Approx(dx / len).epsilon(1e-5));
        CHECK(fwd.y == doctest::Approx(dy / len).epsilon(1e-5));
        CHECK(fwd.z == doctest::Approx(dz / len).epsilon(1e-5));
    }
}

TEST_CASE("pose_at rejects out-of-range frames") {
    CHECK_THROWS_AS(pose_at(orbit4(), 4), RangeError);
    CameraPath bad = orbit4();
    bad.radius = 0.0f;
    CHECK_THROWS_AS(pose_at(bad, 0), ParameterError);
}

TEST_CASE("static path holds the first pose") {
    CameraPath p;
    p.path_id = PathId::Static;
    p.frame_count = 10;
    CHECK(pose_at(p, 7) == pose_at(p, 0));
}

TEST_CASE("empty scene renders background everywhere") {
    SceneConfig scene;
    scene.scene_id = SceneId::Empty;
    const Image img =
        render_region(scene, {}, default_pose(), Eye::Left, {40, 30}, {5, 5, 20, 10});
    CHECK(img == Image(20, 10, scene.background));
    const Image scaled = render_scaled(scene, {}, default_pose(), {64, 32}, 0.37f);
    CHECK(scaled == Image(scaled.width(), scaled.height(), scene.background));
}

TEST_CASE("region crop equals full render, byte for byte") {
    const SceneConfig scene;
    const CameraRig rig;
    const Pose pose = default_pose(5);
    const Dims eye{64, 64};
    const Image full = render_region(scene, rig, pose, Eye::Right, eye, {0, 0, 64, 64});
    std::mt19937 rng(11);
    for (int k = 0; k < 40; ++k) {
        std::uniform_int_distribution<int> dim(1, 64);
        const int w = dim(rng);
        const int h = dim(rng);
        const int x = std::uniform_int_distribution<int>(0, 64 - w)(rng);
        const int y = std::uniform_int_distribution<int>(0, 64 - h)(rng);
        const Image region = render_region(scene, rig, pose, Eye::Right, eye, {x, y, w, h});
        REQUIRE(region == oracle::crop(full, x, y, w, h));
    }
}

TEST_CASE("region out of bounds is a geometry error") {
    CHECK_THROWS_AS(render_region({}, {}, default_pose(), Eye::Left, {64, 64}, {60, 0, 5, 1}),
                    GeometryError);
    CHECK_THROWS_AS(render_region({}, {}, default_pose(), Eye::Left, {64, 64}, {-1, 0, 5, 1}),
                    GeometryError);
}

TEST_CASE("scaled render dimensions") {
    CHECK(scaled_dims({2400, 1080}, 0.6f) == Dims{1440, 648});
    CHECK(scaled_dims({10, 10}, 0.05f) == Dims{1, 1});
    CHECK_THROWS_AS(render_scaled({}, {}, default_pose(), {64, 32}, 0.0f), ParameterError);
    CHECK_THROWS_AS(render_scaled({}, {}, default_pose(), {64, 32}, 1.5f), ParameterError);
}

TEST_CASE("scale 1.0 equals the side-by-side full render") {
    const SceneConfig scene;
    const Pose pose = default_pose(9);
    const Image scaled = render_scaled(scene, {}, pose, {96, 48}, 1.0f);
    const Image full = render_stereo(scene, {}, pose, {96, 48});
    CHECK(scaled == full);
}

TEST_CASE("ray counts") {
    RenderStats stats;
    render_scaled({}, {}, default_pose(), {100, 50}, 0.6f, &stats);
    CHECK(stats.rays == 60u * 30u);
    render_region({}, {}, default_pose(), Eye::Left, {50, 50}, {0, 0, 7, 3}, &stats);
    CHECK(stats.rays == 60u * 30u + 21u);
}

TEST_CASE("stereo disparity follows ipd") {
    const SceneConfig scene;
    const Pose pose = default_pose(2);
    const Rect whole{0, 0, 48, 48};
    CameraRig rig;
    rig.ipd = 0.064f;
    CHECK(render_region(scene, rig, pose, Eye::Left, {48, 48}, whole) !=
          render_region(scene, rig, pose, Eye::Right, {48, 48}, whole));
    rig.ipd = 0.0f;
    CHECK(render_region(scene, rig, pose, Eye::Left, {48, 48}, whole) ==
          render_region(scene, rig, pose, Eye::Right, {48, 48}, whole));
}

TEST_CASE("renders are deterministic") {
    const Pose pose = default_pose(4);
    CHECK(render_scaled({}, {}, pose, {80, 40}, 0.6f) == render_scaled({}, {}, pose, {80, 40}, 0.6f));
}

TEST_CASE("spheres scene is not blank") {
    const SceneConfig scene;
    const Image img = render_stereo(scene, {}, default_pose(0), {64, 32});
    CHECK(img != Image(64, 32, scene.background));
}

TEST_CASE("channel quantization rule") {
    CHECK(quantize_channel(0.0f) == 0);
    CHECK(quantize_channel(1.0f) == 255);
    CHECK(quantize_channel(-0.5f) == 0);
    CHECK(quantize_channel(2.0f) == 255);
    CHECK(quantize_channel(0.5f) == 128);  // floor(127.5 + 0.5)
    CHECK(quantize_channel(1.0f / 255.0f) == 1);
}

TEST_CASE("rig validation") {
    CameraRig rig;
    rig.horizontal_fov = 180.0f;
    CHECK_THROWS_AS(validate(rig), ParameterError);
    rig.horizontal_fov = 90.0f;
    rig.ipd = -0.01f;
    CHECK_THROWS_AS(validate(rig), ParameterError);
}

}
