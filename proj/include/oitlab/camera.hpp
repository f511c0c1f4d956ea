#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

#include "oitlab/image.hpp"

namespace oitlab {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
};

/// Perspective pinhole camera. Depth is measured as the view-space distance
/// along the forward axis, so rasterized and ray-traced depths agree.
struct Camera {
    Vec3 eye = Vec3(0, 0, -3);
    Vec3 look_at = Vec3::Zero();
    Vec3 up = Vec3(0, 1, 0);
    float vfov = 0.9f;  // radians
    float near = 0.1f;
    float far = 100.0f;
    int width = 640;
    int height = 360;

    void validate() const {
        if (!(0.0f < near && near < far)) throw std::invalid_argument("camera: need 0 < near < far");
        if (!(vfov > 0.0f && vfov < static_cast<float>(M_PI)))
            throw std::invalid_argument("camera: fov outside (0, pi)");
        if (width < 1 || height < 1) throw std::invalid_argument("camera: viewport too small");
    }

    Vec3 forward() const { return (look_at - eye).normalized(); }
    Vec3 right() const { return forward().cross(up).normalized(); }
    Vec3 true_up() const { return right().cross(forward()); }
    float aspect() const { return static_cast<float>(width) / height; }
    float tan_half_fov() const { return std::tan(vfov * 0.5f); }

    /// View coordinates (right, up, forward-distance) of a world point.
    Vec3 to_view(const Vec3& p) const {
        Vec3 d = p - eye;
        return Vec3(d.dot(right()), d.dot(true_up()), d.dot(forward()));
    }

    /// Screen position in pixel units for a view-space point with vz > 0.
    Eigen::Vector2f view_to_screen(const Vec3& v) const {
        float sx = v.x() / (v.z() * tan_half_fov() * aspect());
        float sy = v.y() / (v.z() * tan_half_fov());
        return {(sx + 1.0f) * 0.5f * width, (1.0f - sy) * 0.5f * height};
    }

    /// Primary ray through the center of pixel (x, y).
    Ray pixel_ray(int x, int y) const {
        float ndc_x = (static_cast<float>(x) + 0.5f) / width * 2.0f - 1.0f;
        float ndc_y = 1.0f - (static_cast<float>(y) + 0.5f) / height * 2.0f;
        Vec3 dir = forward() + tan_half_fov() * (ndc_x * aspect() * right() + ndc_y * true_up());
        return {eye, dir.normalized()};
    }
};

/// Camera framing a bounding box from direction `view_dir` with some margin.
Camera frame_box(const Eigen::AlignedBox3f& box, const Vec3& view_dir, int width, int height,
                 float margin = 1.25f);

}  // namespace oitlab
