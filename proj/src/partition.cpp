#include "splitrender/partition.hpp"

#include <sstream>

#include "splitrender/errors.hpp"

namespace splitrender {

PartitionSpec PartitionSpec::from_stereo(int full_w, int full_h, int fov_w, int fov_h,
                                         float scale) {
    return {full_w, full_h, full_w / 2, full_h, fov_w, fov_h, scale};
}

std::vector<std::string> validate(const PartitionSpec& spec) {
    std::vector<std::string> v;
    if (spec.full_w < 1 || spec.full_h < 1 || spec.eye_w < 1 || spec.eye_h < 1 ||
        spec.fov_w < 1 || spec.fov_h < 1) {
        v.emplace_back("all dimensions must be at least 1");
    }
    if (spec.full_w != 2 * spec.eye_w) {
        v.emplace_back("stereo width must be twice the eye width");
    }
    if (spec.eye_h != spec.full_h) {
        v.emplace_back("eye height must equal stereo height");
    }
    if (spec.fov_w > spec.eye_w) {
        v.emplace_back("foveal width exceeds eye width");
    }
    if (spec.fov_h > spec.eye_h) {
        v.emplace_back("foveal height exceeds eye height");
    }
    if (!(spec.periph_scale > 0.0f && spec.periph_scale <= 1.0f)) {
        v.emplace_back("peripheral scale must be in (0, 1]");
    }
    return v;
}

void require_valid(const PartitionSpec& spec) {
    const auto violations = validate(spec);
    if (violations.empty()) {
        return;
    }
    std::ostringstream msg;
    msg << "invalid partition:";
    for (const auto& v : violations) {
        msg << "\n  - " << v;
    }
    throw ParameterError(msg.str());
}

Rect foveal_rect(const PartitionSpec& spec, Eye /*eye*/) {
    require_valid(spec);
    return {(spec.eye_w - spec.fov_w) / 2, (spec.eye_h - spec.fov_h) / 2, spec.fov_w, spec.fov_h};
}

Rect foveal_rect_stereo(const PartitionSpec& spec, Eye eye) {
    Rect r = foveal_rect(spec, eye);
    if (eye == Eye::Right) {
        r.x += spec.eye_w;
    }
    return r;
}

Dims reduced_dims(const PartitionSpec& spec) {
    require_valid(spec);
    return scaled_dims(spec.stereo_dims(), spec.periph_scale);
}

}  // namespace splitrender
