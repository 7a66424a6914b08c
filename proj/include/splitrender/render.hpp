#pragma once

#include <array>
#include <cstdint>

#include "splitrender/image.hpp"

namespace splitrender {

enum class Eye : std::uint8_t { Left = 0, Right = 1 };

struct Vec3 {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Unit quaternion (x, y, z, w).
struct Quat {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;
    float w = 1.0f;

    friend bool operator==(const Quat&, const Quat&) = default;
};

/// Camera pose for one frame. Camera looks down its local -Z with +Y up.
struct Pose {
    Vec3 position;
    Quat orientation;

    friend bool operator==(const Pose&, const Pose&) = default;
};

/// True when |q| is within 1e-6 of 1.
bool is_unit(const Quat& q);
Quat normalized(const Quat& q);
Vec3 rotate(const Quat& q, const Vec3& v);

struct CameraRig {
    float ipd = 0.064f;             // meters between eyes
    float horizontal_fov = 90.0f;   // degrees, per eye
    float near_plane = 0.1f;        // meters
};

void validate(const CameraRig& rig);

enum class SceneId : std::uint8_t {
    Empty = 0,
    Spheres = 1,
};

struct SceneConfig {
    SceneId scene_id = SceneId::Spheres;
    Rgb8 background{135, 170, 215};
};

bool is_known_scene(std::uint8_t id);

enum class PathId : std::uint8_t {
    Orbit = 0,
    Static = 1,
};

bool is_known_path(std::uint8_t id);

struct CameraPath {
    PathId path_id = PathId::Orbit;
    Vec3 center{0.0f, 1.0f, 0.0f};
    float radius = 5.0f;
    float height = 1.0f;
    std::uint32_t frame_count = 1000;
};

/// Camera pose for `frame_id` along `path`. Orbit places the camera at
/// center + (r cos t, height, r sin t) with t = 2 pi frame_id / frame_count,
/// looking at center; Static holds the frame-0 pose. Throws RangeError when
/// frame_id >= frame_count.
Pose pose_at(const CameraPath& path, std::uint64_t frame_id);

/// Rotation that points the camera's -Z axis from `eye` towards `target`.
Quat look_at(const Vec3& eye, const Vec3& target, const Vec3& up = {0.0f, 1.0f, 0.0f});

/// Number of primary rays cast, accumulated across calls.
struct RenderStats {
    std::uint64_t rays = 0;
};

/// Renders `region` of one eye at the full sampling rate. Output pixel (i, j)
/// is the shading of eye pixel (region.x + i, region.y + j), so any region is
/// a byte-exact crop of the full eye image. Throws GeometryError if the region
/// does not fit in `eye_dims`.
Image render_region(const SceneConfig& scene, const CameraRig& rig, const Pose& pose, Eye eye,
                    Dims eye_dims, const Rect& region, RenderStats* stats = nullptr);

/// Output size of a stereo frame sampled at `scale`: each axis rounded, at least 1.
Dims scaled_dims(Dims stereo_dims, float scale);

/// Renders the side-by-side stereo frame at a reduced sampling rate. Reduced
/// pixel (i, j) shades stereo coordinate ((i + 0.5) / scale, (j + 0.5) / scale);
/// columns that land in the left half belong to the left eye. Throws
/// ParameterError unless 0 < scale <= 1.
Image render_scaled(const SceneConfig& scene, const CameraRig& rig, const Pose& pose,
                    Dims stereo_dims, float scale, RenderStats* stats = nullptr);

/// Full-rate side-by-side stereo render; convenience for baselines and tests.
Image render_stereo(const SceneConfig& scene, const CameraRig& rig, const Pose& pose,
                    Dims stereo_dims, RenderStats* stats = nullptr);

/// Channel quantization: floor(c * 255 + 0.5) clamped to [0, 255].
std::uint8_t quantize_channel(float c);

}  // namespace splitrender
