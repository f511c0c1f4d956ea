#include "oitlab/rasterizer.hpp"

#include <algorithm>
#include <cmath>

namespace oitlab {

Vec4 shade_fragment(const Vec4& base, const Vec3& normal, const Vec3& view_dir,
                    const ShadingParams& params) {
    const Vec3& light = view_dir;  // headlight
    const Vec3& half_vec = view_dir;
    float ndotl = std::abs(normal.dot(light));
    float ndoth = std::max(0.0f, normal.dot(half_vec));
    Vec3 rgb = base.head<3>() * (params.ambient + params.diffuse * ndotl) +
               Vec3::Constant(params.specular * std::pow(ndoth, params.shininess));
    Vec4 out;
    out.head<3>() = rgb.cwiseMax(0.0f).cwiseMin(1.0f);
    out.w() = base.w();
    return out;
}

namespace {

struct ClipVertex {
    Vec3 view;  // (right, up, forward distance)
    Vec3 normal;
    float attribute;
};

ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, float t) {
    return {a.view + t * (b.view - a.view), a.normal + t * (b.normal - a.normal),
            a.attribute + t * (b.attribute - a.attribute)};
}

// Sutherland-Hodgman against one z plane in view space. `keep_greater`
// selects the near (z >= plane) or far (z <= plane) half-space.
int clip_z_plane(const ClipVertex* in, int n, float plane, bool keep_greater, ClipVertex* out) {
    int m = 0;
    for (int i = 0; i < n; ++i) {
        const ClipVertex& cur = in[i];
        const ClipVertex& nxt = in[(i + 1) % n];
        bool cur_in = keep_greater ? cur.view.z() >= plane : cur.view.z() <= plane;
        bool nxt_in = keep_greater ? nxt.view.z() >= plane : nxt.view.z() <= plane;
        if (cur_in) out[m++] = cur;
        if (cur_in != nxt_in) {
            float t = (plane - cur.view.z()) / (nxt.view.z() - cur.view.z());
            out[m++] = lerp(cur, nxt, t);
        }
    }
    return m;
}

struct ScreenVertex {
    float sx, sy;
    float inv_z;
    Vec3 normal_over_z;
    float attr_over_z;
};

// Edge function anchored at the lexicographically smaller endpoint so the two
// triangles sharing an edge evaluate bit-identical values (opposite signs).
struct Edge {
    float ax, ay;  // anchor
    float dx, dy;  // direction a -> b of the triangle's own winding
    float sign;    // +1 if anchor == a, else -1

    static Edge between(const ScreenVertex& a, const ScreenVertex& b) {
        bool a_first = a.sx < b.sx || (a.sx == b.sx && a.sy < b.sy);
        const ScreenVertex& lo = a_first ? a : b;
        const ScreenVertex& hi = a_first ? b : a;
        return {lo.sx, lo.sy, hi.sx - lo.sx, hi.sy - lo.sy, a_first ? 1.0f : -1.0f};
    }

    float eval(float px, float py) const {
        return sign * ((dx) * (py - ay) - (dy) * (px - ax));
    }

    // Boundary pixels belong to top edges (horizontal, interior below) and
    // left edges (interior on the +x side).
    bool accepts_boundary() const {
        float ex = sign * dx;
        float ey = sign * dy;
        return (ey == 0.0f && ex > 0.0f) || ey < 0.0f;
    }
};

}  // namespace

FragmentBuffer rasterize(const TriMesh& mesh, const Camera& camera, const TransferFunction& tf,
                         const ShadingParams& shading) {
    camera.validate();
    FragmentBuffer fb(camera.width, camera.height);

    const Vec3 cam_right = camera.right();
    const Vec3 cam_up = camera.true_up();
    const Vec3 cam_fwd = camera.forward();
    auto to_view = [&](const Vec3& p) {
        Vec3 d = p - camera.eye;
        return Vec3(d.dot(cam_right), d.dot(cam_up), d.dot(cam_fwd));
    };

    // Per-pixel view directions are shared with the ray tracer's primary rays.
    std::vector<Vec3> to_eye(static_cast<size_t>(camera.width) * camera.height);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x)
            to_eye[static_cast<size_t>(y) * camera.width + x] = -camera.pixel_ray(x, y).dir;

    ClipVertex poly_a[8], poly_b[8];
    for (size_t tri = 0; tri < mesh.triangles.size(); ++tri) {
        const auto& idx = mesh.triangles[tri];
        for (int k = 0; k < 3; ++k)
            poly_a[k] = {to_view(mesh.positions[idx[k]]), mesh.normals[idx[k]],
                         mesh.attributes[idx[k]]};

        int n = clip_z_plane(poly_a, 3, camera.near, true, poly_b);
        n = clip_z_plane(poly_b, n, camera.far, false, poly_a);
        if (n < 3) continue;

        ScreenVertex sv[8];
        for (int k = 0; k < n; ++k) {
            Eigen::Vector2f s = camera.view_to_screen(poly_a[k].view);
            float inv_z = 1.0f / poly_a[k].view.z();
            sv[k] = {s.x(), s.y(), inv_z, poly_a[k].normal * inv_z, poly_a[k].attribute * inv_z};
        }

        for (int fan = 1; fan + 1 < n; ++fan) {
            ScreenVertex v0 = sv[0], v1 = sv[fan], v2 = sv[fan + 1];
            float area2 = (v1.sx - v0.sx) * (v2.sy - v0.sy) - (v1.sy - v0.sy) * (v2.sx - v0.sx);
            if (area2 == 0.0f) continue;
            if (area2 < 0.0f) {
                std::swap(v1, v2);
                area2 = -area2;
            }

            Edge e01 = Edge::between(v0, v1);
            Edge e12 = Edge::between(v1, v2);
            Edge e20 = Edge::between(v2, v0);

            int x0 = std::max(0, static_cast<int>(std::floor(std::min({v0.sx, v1.sx, v2.sx}) - 0.5f)));
            int x1 = std::min(camera.width - 1,
                              static_cast<int>(std::ceil(std::max({v0.sx, v1.sx, v2.sx}))));
            int y0 = std::max(0, static_cast<int>(std::floor(std::min({v0.sy, v1.sy, v2.sy}) - 0.5f)));
            int y1 = std::min(camera.height - 1,
                              static_cast<int>(std::ceil(std::max({v0.sy, v1.sy, v2.sy}))));

            for (int y = y0; y <= y1; ++y) {
                float py = static_cast<float>(y) + 0.5f;
                for (int x = x0; x <= x1; ++x) {
                    float px = static_cast<float>(x) + 0.5f;
                    float w0 = e12.eval(px, py);
                    float w1 = e20.eval(px, py);
                    float w2 = e01.eval(px, py);
                    bool inside = (w0 > 0.0f || (w0 == 0.0f && e12.accepts_boundary())) &&
                                  (w1 > 0.0f || (w1 == 0.0f && e20.accepts_boundary())) &&
                                  (w2 > 0.0f || (w2 == 0.0f && e01.accepts_boundary()));
                    if (!inside) continue;

                    float l0 = w0 / area2, l1 = w1 / area2, l2 = w2 / area2;
                    float inv_z = l0 * v0.inv_z + l1 * v1.inv_z + l2 * v2.inv_z;
                    float z = std::clamp(1.0f / inv_z, camera.near, camera.far);
                    float attr = (l0 * v0.attr_over_z + l1 * v1.attr_over_z + l2 * v2.attr_over_z) / inv_z;
                    Vec3 normal =
                        (l0 * v0.normal_over_z + l1 * v1.normal_over_z + l2 * v2.normal_over_z)
                            .normalized();

                    Vec4 base = apply_transfer(tf, std::clamp(attr, 0.0f, 1.0f));
                    Vec4 shaded = shade_fragment(
                        base, normal, to_eye[static_cast<size_t>(y) * camera.width + x], shading);
                    fb.push(x, y, Fragment{z, shaded.head<3>(), shaded.w(),
                                           static_cast<uint32_t>(tri)});
                }
            }
        }
    }
    return fb;
}

}  // namespace oitlab
