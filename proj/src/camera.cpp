#include "oitlab/camera.hpp"

#include <algorithm>

namespace oitlab {

Camera frame_box(const Eigen::AlignedBox3f& box, const Vec3& view_dir, int width, int height,
                 float margin) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    Vec3 center = box.center();
    float radius = std::max(box.diagonal().norm() * 0.5f, 1e-3f);
    Vec3 dir = view_dir.normalized();
    float dist = margin * radius / std::tan(cam.vfov * 0.5f);
    cam.eye = center - dist * dir;
    cam.look_at = center;
    cam.up = std::abs(dir.y()) > 0.95f ? Vec3(0, 0, 1) : Vec3(0, 1, 0);
    cam.near = std::max(1e-3f, dist - 2.5f * radius);
    cam.far = dist + 2.5f * radius;
    cam.validate();
    return cam;
}

}  // namespace oitlab
