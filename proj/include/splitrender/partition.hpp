#pragma once

#include <string>
#include <vector>

#include "splitrender/image.hpp"
#include "splitrender/render.hpp"

namespace splitrender {

/// Image-space split of a stereo frame: a centered foveal rectangle per eye
/// rendered at full rate, everything else sampled into a reduced buffer.
struct PartitionSpec {
    int full_w = 2400;
    int full_h = 1080;
    int eye_w = 1200;
    int eye_h = 1080;
    int fov_w = 512;
    int fov_h = 360;
    float periph_scale = 0.6f;

    Dims stereo_dims() const { return {full_w, full_h}; }
    Dims eye_dims() const { return {eye_w, eye_h}; }

    /// Builds a spec from stereo and foveal sizes; eye size is derived.
    static PartitionSpec from_stereo(int full_w, int full_h, int fov_w, int fov_h, float scale);

    friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;
};

/// Every violated invariant, in a fixed order. Empty means valid.
std::vector<std::string> validate(const PartitionSpec& spec);

/// Throws ParameterError listing all violations.
void require_valid(const PartitionSpec& spec);

/// Foveal rect in per-eye coordinates; odd remainders floor toward top-left.
Rect foveal_rect(const PartitionSpec& spec, Eye eye);

/// Same rect in stereo-frame coordinates (right eye shifted by eye_w).
Rect foveal_rect_stereo(const PartitionSpec& spec, Eye eye);

/// Reduced peripheral buffer size: round(full * scale), clamped >= 1.
Dims reduced_dims(const PartitionSpec& spec);

}  // namespace splitrender
