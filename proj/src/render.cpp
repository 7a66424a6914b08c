#include "splitrender/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "splitrender/errors.hpp"

namespace splitrender {

namespace {

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(Vec3 a, float s) { return {a.x * s, a.y * s, a.z * s}; }
float dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Vec3 normalize(Vec3 v) {
    const float len = std::sqrt(dot(v, v));
    return len > 0.0f ? v * (1.0f / len) : v;
}

struct Sphere {
    Vec3 center;
    float radius;
    Vec3 albedo;
};

// Procedural stand-in for a real asset: a few spheres on a checkerboard.
constexpr std::array<Sphere, 6> kSpheres{{
    {{0.0f, 1.0f, 0.0f}, 1.0f, {0.85f, 0.25f, 0.2f}},
    {{2.2f, 0.6f, 1.0f}, 0.6f, {0.2f, 0.75f, 0.3f}},
    {{-2.0f, 0.8f, -1.2f}, 0.8f, {0.25f, 0.35f, 0.9f}},
    {{0.8f, 0.35f, -2.3f}, 0.35f, {0.95f, 0.85f, 0.2f}},
    {{-1.2f, 0.5f, 2.0f}, 0.5f, {0.9f, 0.9f, 0.9f}},
    {{3.0f, 1.4f, -2.5f}, 1.4f, {0.7f, 0.4f, 0.8f}},
}};

constexpr float kAmbient = 0.15f;
constexpr float kFarLimit = 200.0f;
constexpr float kShadowBias = 1e-3f;

const Vec3 kLightDir = normalize({-0.4f, 1.0f, -0.3f});

struct Hit {
    float t = kFarLimit;
    Vec3 normal;
    Vec3 albedo;
    bool any = false;
};

bool hit_sphere(const Sphere& s, Vec3 origin, Vec3 dir, float t_min, float t_max, float& t_out) {
    const Vec3 oc = origin - s.center;
    const float a = dot(dir, dir);
    const float half_b = dot(oc, dir);
    const float c = dot(oc, oc) - s.radius * s.radius;
    const float disc = half_b * half_b - a * c;
    if (disc < 0.0f) {
        return false;
    }
    const float root = std::sqrt(disc);
    float t = (-half_b - root) / a;
    if (t < t_min || t > t_max) {
        t = (-half_b + root) / a;
        if (t < t_min || t > t_max) {
            return false;
        }
    }
    t_out = t;
    return true;
}

Hit trace_scene(Vec3 origin, Vec3 dir, float t_min) {
    Hit hit;
    for (const Sphere& s : kSpheres) {
        float t = 0.0f;
        if (hit_sphere(s, origin, dir, t_min, hit.t, t)) {
            hit.t = t;
            hit.normal = normalize((origin + dir * t) - s.center);
            hit.albedo = s.albedo;
            hit.any = true;
        }
    }
    // Ground plane y = 0.
    if (dir.y < 0.0f) {
        const float t = -origin.y / dir.y;
        if (t >= t_min && t < hit.t) {
            const Vec3 p = origin + dir * t;
            const int checker =
                (static_cast<int>(std::floor(p.x)) + static_cast<int>(std::floor(p.z))) & 1;
            hit.t = t;
            hit.normal = {0.0f, 1.0f, 0.0f};
            hit.albedo = checker ? Vec3{0.8f, 0.8f, 0.78f} : Vec3{0.25f, 0.25f, 0.28f};
            hit.any = true;
        }
    }
    return hit;
}

bool occluded(Vec3 p) {
    for (const Sphere& s : kSpheres) {
        float t = 0.0f;
        if (hit_sphere(s, p, kLightDir, kShadowBias, kFarLimit, t)) {
            return true;
        }
    }
    return false;
}

/// Per-eye camera frame shared by every pixel of one render call.
struct EyeView {
    Vec3 origin;
    Vec3 right;
    Vec3 up;
    Vec3 forward;
    float tan_half_x = 1.0f;
    float tan_half_y = 1.0f;
    float inv_w = 1.0f;
    float inv_h = 1.0f;
    float near_plane = 0.1f;
};

EyeView make_eye_view(const CameraRig& rig, const Pose& pose, Eye eye, Dims eye_dims) {
    EyeView v;
    const Quat q = normalized(pose.orientation);
    v.right = rotate(q, {1.0f, 0.0f, 0.0f});
    v.up = rotate(q, {0.0f, 1.0f, 0.0f});
    v.forward = rotate(q, {0.0f, 0.0f, -1.0f});
    const float offset = (eye == Eye::Left ? -0.5f : 0.5f) * rig.ipd;
    v.origin = pose.position + v.right * offset;
    const float half_fov = rig.horizontal_fov * (std::numbers::pi_v<float> / 360.0f);
    v.tan_half_x = std::tan(half_fov);
    v.tan_half_y = v.tan_half_x * static_cast<float>(eye_dims.h) / static_cast<float>(eye_dims.w);
    v.inv_w = 1.0f / static_cast<float>(eye_dims.w);
    v.inv_h = 1.0f / static_cast<float>(eye_dims.h);
    v.near_plane = rig.near_plane;
    return v;
}

// Every render path funnels through this one function so that equal
// continuous coordinates always produce equal bytes.
[[gnu::noinline]] Rgb8 shade(const SceneConfig& scene, const EyeView& v, float fx, float fy) {
    if (scene.scene_id == SceneId::Empty) {
        return scene.background;
    }
    const float ndc_x = fx * v.inv_w * 2.0f - 1.0f;
    const float ndc_y = 1.0f - fy * v.inv_h * 2.0f;
    // Unnormalized: the forward component is 1, so t is view depth.
    const Vec3 dir =
        v.forward + v.right * (ndc_x * v.tan_half_x) + v.up * (ndc_y * v.tan_half_y);
    const Hit hit = trace_scene(v.origin, dir, v.near_plane);
    if (!hit.any) {
        return scene.background;
    }
    const Vec3 p = v.origin + dir * hit.t;
    float diffuse = std::max(0.0f, dot(hit.normal, kLightDir));
    if (diffuse > 0.0f && occluded(p + hit.normal * kShadowBias)) {
        diffuse = 0.0f;
    }
    const float light = kAmbient + (1.0f - kAmbient) * diffuse;
    return {quantize_channel(hit.albedo.x * light), quantize_channel(hit.albedo.y * light),
            quantize_channel(hit.albedo.z * light)};
}

void check_scene(const SceneConfig& scene) {
    if (!is_known_scene(static_cast<std::uint8_t>(scene.scene_id))) {
        throw ParameterError("unknown scene id " +
                             std::to_string(static_cast<int>(scene.scene_id)));
    }
}

Dims checked_eye_dims(Dims stereo_dims) {
    if (stereo_dims.w < 2 || stereo_dims.h < 1 || stereo_dims.w % 2 != 0) {
        throw GeometryError("stereo frame needs an even width >= 2 and height >= 1");
    }
    return {stereo_dims.w / 2, stereo_dims.h};
}

}  // namespace

std::uint8_t quantize_channel(float c) {
    const float v = std::floor(c * 255.0f + 0.5f);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
}

bool is_unit(const Quat& q) {
    const double n = std::sqrt(static_cast<double>(q.x) * q.x + static_cast<double>(q.y) * q.y +
                               static_cast<double>(q.z) * q.z + static_cast<double>(q.w) * q.w);
    return std::abs(n - 1.0) <= 1e-6;
}

Quat normalized(const Quat& q) {
    const double n = std::sqrt(static_cast<double>(q.x) * q.x + static_cast<double>(q.y) * q.y +
                               static_cast<double>(q.z) * q.z + static_cast<double>(q.w) * q.w);
    if (!(n > 0.0) || !std::isfinite(n)) {
        return {};
    }
    return {static_cast<float>(q.x / n), static_cast<float>(q.y / n), static_cast<float>(q.z / n),
            static_cast<float>(q.w / n)};
}

Vec3 rotate(const Quat& q, const Vec3& v) {
    // v' = v + 2w (u x v) + 2 u x (u x v), u = (x, y, z)
    const Vec3 u{q.x, q.y, q.z};
    const Vec3 t = cross(u, v) * 2.0f;
    return v + t * q.w + cross(u, t);
}

void validate(const CameraRig& rig) {
    if (!(rig.ipd >= 0.0f)) {
        throw ParameterError("ipd must be >= 0");
    }
    if (!(rig.horizontal_fov > 0.0f && rig.horizontal_fov < 180.0f)) {
        throw ParameterError("horizontal fov must be in (0, 180) degrees");
    }
    if (!(rig.near_plane > 0.0f)) {
        throw ParameterError("near plane must be > 0");
    }
}

bool is_known_scene(std::uint8_t id) {
    return id == static_cast<std::uint8_t>(SceneId::Empty) ||
           id == static_cast<std::uint8_t>(SceneId::Spheres);
}

bool is_known_path(std::uint8_t id) {
    return id == static_cast<std::uint8_t>(PathId::Orbit) ||
           id == static_cast<std::uint8_t>(PathId::Static);
}

Quat look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    // Work in double: the rotation-matrix-to-quaternion step loses precision
    // quickly in float.
    const double fx = target.x - eye.x, fy = target.y - eye.y, fz = target.z - eye.z;
    const double fl = std::sqrt(fx * fx + fy * fy + fz * fz);
    const double f[3] = {fx / fl, fy / fl, fz / fl};
    double r[3] = {f[1] * up.z - f[2] * up.y, f[2] * up.x - f[0] * up.z,
                   f[0] * up.y - f[1] * up.x};
    const double rl = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (rl < 1e-12) {
        throw ParameterError("look_at: view direction parallel to up");
    }
    for (double& c : r) {
        c /= rl;
    }
    const double u[3] = {r[1] * f[2] - r[2] * f[1], r[2] * f[0] - r[0] * f[2],
                         r[0] * f[1] - r[1] * f[0]};
    // Columns of the rotation: right, up, back.
    const double m00 = r[0], m01 = u[0], m02 = -f[0];
    const double m10 = r[1], m11 = u[1], m12 = -f[1];
    const double m20 = r[2], m21 = u[2], m22 = -f[2];
    double qx, qy, qz, qw;
    const double trace = m00 + m11 + m22;
    if (trace > 0.0) {
        const double s = 0.5 / std::sqrt(trace + 1.0);
        qw = 0.25 / s;
        qx = (m21 - m12) * s;
        qy = (m02 - m20) * s;
        qz = (m10 - m01) * s;
    } else if (m00 > m11 && m00 > m22) {
        const double s = 2.0 * std::sqrt(1.0 + m00 - m11 - m22);
        qw = (m21 - m12) / s;
        qx = 0.25 * s;
        qy = (m01 + m10) / s;
        qz = (m02 + m20) / s;
    } else if (m11 > m22) {
        const double s = 2.0 * std::sqrt(1.0 + m11 - m00 - m22);
        qw = (m02 - m20) / s;
        qx = (m01 + m10) / s;
        qy = 0.25 * s;
        qz = (m12 + m21) / s;
    } else {
        const double s = 2.0 * std::sqrt(1.0 + m22 - m00 - m11);
        qw = (m10 - m01) / s;
        qx = (m02 + m20) / s;
        qy = (m12 + m21) / s;
        qz = 0.25 * s;
    }
    const double n = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
    return {static_cast<float>(qx / n), static_cast<float>(qy / n), static_cast<float>(qz / n),
            static_cast<float>(qw / n)};
}

Pose pose_at(const CameraPath& path, std::uint64_t frame_id) {
    if (path.frame_count < 1) {
        throw ParameterError("camera path needs frame_count >= 1");
    }
    if (!(path.radius > 0.0f)) {
        throw ParameterError("camera path radius must be > 0");
    }
    if (frame_id >= path.frame_count) {
        throw RangeError("frame " + std::to_string(frame_id) + " outside path of " +
                         std::to_string(path.frame_count) + " frames");
    }
    const std::uint64_t step = path.path_id == PathId::Static ? 0 : frame_id;
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(step) /
                         static_cast<double>(path.frame_count);
    const Vec3 position{
        static_cast<float>(path.center.x + path.radius * std::cos(theta)),
        static_cast<float>(static_cast<double>(path.center.y) + path.height),
        static_cast<float>(path.center.z + path.radius * std::sin(theta)),
    };
    return {position, look_at(position, path.center)};
}

Image render_region(const SceneConfig& scene, const CameraRig& rig, const Pose& pose, Eye eye,
                    Dims eye_dims, const Rect& region, RenderStats* stats) {
    check_scene(scene);
    validate(rig);
    if (eye_dims.w < 1 || eye_dims.h < 1 || !rect_within(region, eye_dims)) {
        throw GeometryError("render region out of bounds");
    }
    const EyeView view = make_eye_view(rig, pose, eye, eye_dims);
    Image out(region.w, region.h);
    for (int j = 0; j < region.h; ++j) {
        const float fy = static_cast<float>(region.y + j) + 0.5f;
        for (int i = 0; i < region.w; ++i) {
            const float fx = static_cast<float>(region.x + i) + 0.5f;
            out.set(i, j, shade(scene, view, fx, fy));
        }
    }
    if (stats) {
        stats->rays += out.pixel_count();
    }
    return out;
}

Dims scaled_dims(Dims stereo_dims, float scale) {
    if (!(scale > 0.0f && scale <= 1.0f)) {
        throw ParameterError("sampling scale must be in (0, 1]");
    }
    const auto scaled = [scale](int n) {
        return std::max(1L, std::lround(static_cast<double>(n) * static_cast<double>(scale)));
    };
    return {static_cast<int>(scaled(stereo_dims.w)), static_cast<int>(scaled(stereo_dims.h))};
}

Image render_scaled(const SceneConfig& scene, const CameraRig& rig, const Pose& pose,
                    Dims stereo_dims, float scale, RenderStats* stats) {
    check_scene(scene);
    validate(rig);
    const Dims eye_dims = checked_eye_dims(stereo_dims);
    const Dims out_dims = scaled_dims(stereo_dims, scale);
    const EyeView left = make_eye_view(rig, pose, Eye::Left, eye_dims);
    const EyeView right = make_eye_view(rig, pose, Eye::Right, eye_dims);
    const float eye_w = static_cast<float>(eye_dims.w);
    Image out(out_dims.w, out_dims.h);
    for (int j = 0; j < out_dims.h; ++j) {
        const float fy = (static_cast<float>(j) + 0.5f) / scale;
        for (int i = 0; i < out_dims.w; ++i) {
            const float sx = (static_cast<float>(i) + 0.5f) / scale;
            const Rgb8 c = sx < eye_w ? shade(scene, left, sx, fy)
                                      : shade(scene, right, sx - eye_w, fy);
            out.set(i, j, c);
        }
    }
    if (stats) {
        stats->rays += out.pixel_count();
    }
    return out;
}

Image render_stereo(const SceneConfig& scene, const CameraRig& rig, const Pose& pose,
                    Dims stereo_dims, RenderStats* stats) {
    const Dims eye_dims = checked_eye_dims(stereo_dims);
    const Rect whole{0, 0, eye_dims.w, eye_dims.h};
    Image out(stereo_dims.w, stereo_dims.h);
    blit(out, render_region(scene, rig, pose, Eye::Left, eye_dims, whole, stats), 0, 0);
    blit(out, render_region(scene, rig, pose, Eye::Right, eye_dims, whole, stats), eye_dims.w, 0);
    return out;
}

}  // namespace splitrender
