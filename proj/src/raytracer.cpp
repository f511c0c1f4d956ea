#include "oitlab/raytracer.hpp"

#include "oitlab/parallel.hpp"
#include "oitlab/vrc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace oitlab {

namespace {

struct BuildPrim {
    Eigen::AlignedBox3f box;
    Vec3 centroid;
    uint32_t index;
};

int build_node(std::vector<BvhNode>& nodes, std::vector<BuildPrim>& prims, size_t first,
               size_t count, int max_leaf) {
    BvhNode node;
    for (size_t i = first; i < first + count; ++i) node.box.extend(prims[i].box);
    int self = static_cast<int>(nodes.size());
    nodes.push_back(node);

    if (count <= static_cast<size_t>(max_leaf)) {
        nodes[self].first = static_cast<uint32_t>(first);
        nodes[self].count = static_cast<uint32_t>(count);
        return self;
    }

    // Median split along the axis where the centroids spread the most; ties
    // fall back to the primitive index so builds are deterministic.
    Eigen::AlignedBox3f centroid_bounds;
    for (size_t i = first; i < first + count; ++i) centroid_bounds.extend(prims[i].centroid);
    int axis = 0;
    centroid_bounds.diagonal().maxCoeff(&axis);
    std::sort(prims.begin() + first, prims.begin() + first + count,
              [axis](const BuildPrim& a, const BuildPrim& b) {
                  if (a.centroid[axis] != b.centroid[axis])
                      return a.centroid[axis] < b.centroid[axis];
                  return a.index < b.index;
              });
    size_t mid = count / 2;
    int left = build_node(nodes, prims, first, mid, max_leaf);
    int right = build_node(nodes, prims, first + mid, count - mid, max_leaf);
    nodes[self].left = left;
    nodes[self].right = right;
    return self;
}

}  // namespace

Bvh build_bvh(std::vector<Eigen::AlignedBox3f> boxes, int max_leaf_size) {
    if (boxes.empty()) throw std::invalid_argument("build_bvh: no primitives");
    std::vector<BuildPrim> prims(boxes.size());
    for (size_t i = 0; i < boxes.size(); ++i)
        prims[i] = {boxes[i], boxes[i].center(), static_cast<uint32_t>(i)};

    Bvh bvh;
    bvh.max_leaf_size = max_leaf_size;
    bvh.nodes.reserve(2 * boxes.size());
    build_node(bvh.nodes, prims, 0, prims.size(), max_leaf_size);
    bvh.prims.resize(prims.size());
    for (size_t i = 0; i < prims.size(); ++i) bvh.prims[i] = prims[i].index;
    return bvh;
}

Bvh build_bvh(const TriMesh& mesh, int max_leaf_size) {
    std::vector<Eigen::AlignedBox3f> boxes(mesh.triangles.size());
    for (size_t i = 0; i < mesh.triangles.size(); ++i) {
        for (int k = 0; k < 3; ++k) boxes[i].extend(mesh.positions[mesh.triangles[i][k]]);
    }
    return build_bvh(std::move(boxes), max_leaf_size);
}

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

// Watertight ray-triangle setup: shear the triangle into a coordinate frame
// where the ray is the +z axis (Woop-style). Edge tests that land exactly on
// zero are re-evaluated in double precision.
struct WatertightRay {
    Vec3 origin;
    int kx, ky, kz;
    float sx, sy, sz;

    explicit WatertightRay(const Ray& ray) : origin(ray.origin) {
        Vec3 ad = ray.dir.cwiseAbs();
        kz = 0;
        ad.maxCoeff(&kz);
        kx = (kz + 1) % 3;
        ky = (kx + 1) % 3;
        if (ray.dir[kz] < 0.0f) std::swap(kx, ky);
        sx = ray.dir[kx] / ray.dir[kz];
        sy = ray.dir[ky] / ray.dir[kz];
        sz = 1.0f / ray.dir[kz];
    }

    bool intersect(const Vec3& v0, const Vec3& v1, const Vec3& v2, float& t, Vec3& bary) const {
        Vec3 a = v0 - origin, b = v1 - origin, c = v2 - origin;
        float ax = a[kx] - sx * a[kz], ay = a[ky] - sy * a[kz];
        float bx = b[kx] - sx * b[kz], by = b[ky] - sy * b[kz];
        float cx = c[kx] - sx * c[kz], cy = c[ky] - sy * c[kz];

        float u = cx * by - cy * bx;
        float v = ax * cy - ay * cx;
        float w = bx * ay - by * ax;
        if (u == 0.0f || v == 0.0f || w == 0.0f) {
            u = static_cast<float>(static_cast<double>(cx) * by - static_cast<double>(cy) * bx);
            v = static_cast<float>(static_cast<double>(ax) * cy - static_cast<double>(ay) * cx);
            w = static_cast<float>(static_cast<double>(bx) * ay - static_cast<double>(by) * ax);
        }
        if ((u < 0.0f || v < 0.0f || w < 0.0f) && (u > 0.0f || v > 0.0f || w > 0.0f)) return false;
        float det = u + v + w;
        if (det == 0.0f) return false;

        float az = sz * a[kz], bz = sz * b[kz], cz = sz * c[kz];
        float t_scaled = u * az + v * bz + w * cz;
        t = t_scaled / det;
        bary = Vec3(u, v, w) / det;
        return true;
    }
};

float box_entry(const Eigen::AlignedBox3f& box, const Vec3& origin, const Vec3& inv_dir,
                float t_min, float t_best) {
    float t0 = t_min, t1 = t_best;
    for (int a = 0; a < 3; ++a) {
        float ta = (box.min()[a] - origin[a]) * inv_dir[a];
        float tb = (box.max()[a] - origin[a]) * inv_dir[a];
        if (inv_dir[a] < 0.0f) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return kInf;
    }
    return t0;
}

Vec3 safe_inverse(const Vec3& dir) {
    Vec3 inv;
    for (int a = 0; a < 3; ++a) inv[a] = dir[a] != 0.0f ? 1.0f / dir[a] : kInf;
    return inv;
}

struct StackItem {
    int32_t node;
    float t;
};

// Per-ray state reused across the restarted closest-hit queries of one blend
// loop.
struct TriangleTracer {
    const Bvh& bvh;
    const TriMesh& mesh;
    WatertightRay wt;
    Vec3 origin, inv_dir;

    TriangleTracer(const Ray& ray, const Bvh& b, const TriMesh& m)
        : bvh(b), mesh(m), wt(ray), origin(ray.origin), inv_dir(safe_inverse(ray.dir)) {}

    bool closest(float t_min, float& best_t, uint32_t& best_tri, Vec3& best_bary) const {
        best_t = kInf;
        bool found = false;
        StackItem stack[64];
        int sp = 0;
        float t_root = box_entry(bvh.nodes[0].box, origin, inv_dir, t_min, best_t);
        if (t_root == kInf) return false;
        stack[sp++] = {0, t_root};
        while (sp > 0) {
            StackItem item = stack[--sp];
            if (item.t > best_t) continue;
            const BvhNode& node = bvh.nodes[item.node];
            if (node.is_leaf()) {
                for (uint32_t i = node.first; i < node.first + node.count; ++i) {
                    uint32_t tri = bvh.prims[i];
                    const auto& idx = mesh.triangles[tri];
                    float t;
                    Vec3 bary;
                    if (!wt.intersect(mesh.positions[idx[0]], mesh.positions[idx[1]],
                                      mesh.positions[idx[2]], t, bary))
                        continue;
                    if (t <= t_min) continue;
                    if (t < best_t || (t == best_t && (!found || tri < best_tri))) {
                        best_t = t;
                        best_tri = tri;
                        best_bary = bary;
                        found = true;
                    }
                }
            } else {
                float tl = box_entry(bvh.nodes[node.left].box, origin, inv_dir, t_min, best_t);
                float tr = box_entry(bvh.nodes[node.right].box, origin, inv_dir, t_min, best_t);
                int32_t near = node.left, far = node.right;
                if (tr < tl) {
                    std::swap(near, far);
                    std::swap(tl, tr);
                }
                if (tr != kInf && tr <= best_t) stack[sp++] = {far, tr};
                if (tl != kInf && tl <= best_t) stack[sp++] = {near, tl};
            }
        }
        return found;
    }
};

Hit interpolate_hit(const TriMesh& mesh, uint32_t tri, float t, const Vec3& bary) {
    const auto& idx = mesh.triangles[tri];
    Hit hit;
    hit.t = t;
    hit.triangle = tri;
    hit.normal = (bary[0] * mesh.normals[idx[0]] + bary[1] * mesh.normals[idx[1]] +
                  bary[2] * mesh.normals[idx[2]])
                     .normalized();
    hit.attribute = bary[0] * mesh.attributes[idx[0]] + bary[1] * mesh.attributes[idx[1]] +
                    bary[2] * mesh.attributes[idx[2]];
    return hit;
}

Vec4 trace_blend_ray(const TriangleTracer& tracer, const Ray& ray, const TransferFunction& tf,
                     const Vec3& background, const RtParams& params, float eps, RtStats* stats,
                     const ShadingParams& shading) {
    Vec3 color = Vec3::Zero();
    float transmittance = 1.0f;
    float t_prev = -eps;
    size_t iterations = 0;
    while (transmittance >= params.min_transmittance) {
        float t;
        uint32_t tri;
        Vec3 bary;
        if (!tracer.closest(t_prev + eps, t, tri, bary)) break;
        if (++iterations > params.max_iterations)
            throw std::runtime_error("trace_blend: iteration cap exceeded (epsilon pathology?)");
        Hit hit = interpolate_hit(tracer.mesh, tri, t, bary);
        Vec4 base = apply_transfer(tf, std::clamp(hit.attribute, 0.0f, 1.0f));
        Vec4 shaded = shade_fragment(base, hit.normal, -ray.dir, shading);
        color += transmittance * shaded.w() * shaded.head<3>();
        transmittance *= 1.0f - shaded.w();
        t_prev = t;
    }
    if (stats) {
        stats->blended_hits += iterations;
        stats->max_hits_per_ray = std::max(stats->max_hits_per_ray, iterations);
    }
    color += transmittance * background;
    Vec4 out;
    out.head<3>() = color;
    out.w() = 1.0f - transmittance;
    return out;
}

void reduce_stats(const std::vector<RtStats>& rows, RtStats* stats) {
    if (!stats) return;
    for (const RtStats& r : rows) {
        stats->blended_hits += r.blended_hits;
        stats->max_hits_per_ray = std::max(stats->max_hits_per_ray, r.max_hits_per_ray);
    }
}

}  // namespace

std::optional<Hit> closest_hit(const Ray& ray, const Bvh& bvh, const TriMesh& mesh, float t_min) {
    TriangleTracer tracer(ray, bvh, mesh);
    float t;
    uint32_t tri;
    Vec3 bary;
    if (!tracer.closest(t_min, t, tri, bary)) return std::nullopt;
    return interpolate_hit(mesh, tri, t, bary);
}

Vec4 trace_blend(const Ray& ray, const Bvh& bvh, const TriMesh& mesh, const TransferFunction& tf,
                 const Vec3& background, const RtParams& params, RtStats* stats,
                 const ShadingParams& shading) {
    float eps = params.epsilon;
    if (eps <= 0.0f) eps = 1e-4f * bvh.nodes[0].box.diagonal().norm();
    TriangleTracer tracer(ray, bvh, mesh);
    return trace_blend_ray(tracer, ray, tf, background, params, eps, stats, shading);
}

Framebuffer raytrace_image(const TriMesh& mesh, const Bvh& bvh, const Camera& camera,
                           const TransferFunction& tf, const Vec3& background,
                           const RtParams& params, RtStats* stats, const ShadingParams& shading) {
    camera.validate();
    Framebuffer out(camera.width, camera.height, background);
    float eps = params.epsilon;
    if (eps <= 0.0f) eps = 1e-4f * bvh.nodes[0].box.diagonal().norm();

    std::vector<RtStats> row_stats(camera.height);
    parallel_for(camera.height, [&](int y) {
        RtStats local;
        for (int x = 0; x < camera.width; ++x) {
            Ray ray = camera.pixel_ray(x, y);
            TriangleTracer tracer(ray, bvh, mesh);
            Vec4 c = trace_blend_ray(tracer, ray, tf, background, params, eps, &local, shading);
            out.color.at(x, y) = c.head<3>();
            out.alpha[static_cast<size_t>(y) * camera.width + x] = c.w();
        }
        row_stats[y] = local;
    });
    reduce_stats(row_stats, stats);
    return out;
}

Framebuffer raytrace_image(const TriMesh& mesh, const Camera& camera, const TransferFunction& tf,
                           const Vec3& background, const RtParams& params, RtStats* stats,
                           const ShadingParams& shading) {
    Bvh bvh = build_bvh(mesh, params.leaf_size);
    return raytrace_image(mesh, bvh, camera, tf, background, params, stats, shading);
}

namespace {

struct TubePrim {
    Vec3 p0, p1;
    float a0, a1;
};

}  // namespace

Framebuffer raytrace_analytic(const LineSet& ls, float radius, const Camera& camera,
                              const TransferFunction& tf, const Vec3& background,
                              const RtParams& params, RtStats* stats,
                              const ShadingParams& shading) {
    camera.validate();
    std::vector<TubePrim> tubes;
    std::vector<Eigen::AlignedBox3f> boxes;
    for (const auto& run : ls.polylines) {
        for (size_t i = 0; i + 1 < run.size(); ++i) {
            const LineVertex& a = ls.vertices[run[i]];
            const LineVertex& b = ls.vertices[run[i + 1]];
            tubes.push_back({a.position, b.position, a.attribute, b.attribute});
            Eigen::AlignedBox3f box;
            box.extend(a.position);
            box.extend(b.position);
            box.min() -= Vec3::Constant(radius);
            box.max() += Vec3::Constant(radius);
            boxes.push_back(box);
        }
    }
    Bvh bvh = build_bvh(std::move(boxes), params.leaf_size);

    float eps = params.epsilon;
    if (eps <= 0.0f) eps = 1e-4f * bvh.nodes[0].box.diagonal().norm();

    auto closest_tube_hit = [&](const Ray& ray, const Vec3& inv_dir, float t_min,
                                TubeHit& best) -> bool {
        float best_t = kInf;
        bool found = false;
        StackItem stack[64];
        int sp = 0;
        float t_root = box_entry(bvh.nodes[0].box, ray.origin, inv_dir, t_min, best_t);
        if (t_root == kInf) return false;
        stack[sp++] = {0, t_root};
        while (sp > 0) {
            StackItem item = stack[--sp];
            if (item.t > best_t) continue;
            const BvhNode& node = bvh.nodes[item.node];
            if (node.is_leaf()) {
                for (uint32_t i = node.first; i < node.first + node.count; ++i) {
                    const TubePrim& tube = tubes[bvh.prims[i]];
                    TubeHit th[2];
                    int n = intersect_ray_tube(ray, tube.p0, tube.p1, radius, tube.a0, tube.a1, th);
                    for (int k = 0; k < n; ++k) {
                        if (th[k].t > t_min && th[k].t < best_t) {
                            best_t = th[k].t;
                            best = th[k];
                            found = true;
                        }
                    }
                }
            } else {
                float tl = box_entry(bvh.nodes[node.left].box, ray.origin, inv_dir, t_min, best_t);
                float tr =
                    box_entry(bvh.nodes[node.right].box, ray.origin, inv_dir, t_min, best_t);
                int32_t near = node.left, far = node.right;
                if (tr < tl) {
                    std::swap(near, far);
                    std::swap(tl, tr);
                }
                if (tr != kInf && tr <= best_t) stack[sp++] = {far, tr};
                if (tl != kInf && tl <= best_t) stack[sp++] = {near, tl};
            }
        }
        return found;
    };

    Framebuffer out(camera.width, camera.height, background);
    std::vector<RtStats> row_stats(camera.height);
    parallel_for(camera.height, [&](int y) {
        RtStats local;
        for (int x = 0; x < camera.width; ++x) {
            Ray ray = camera.pixel_ray(x, y);
            Vec3 inv_dir = safe_inverse(ray.dir);
            Vec3 color = Vec3::Zero();
            float transmittance = 1.0f;
            float t_prev = -eps;
            size_t iterations = 0;
            TubeHit hit;
            while (transmittance >= params.min_transmittance) {
                if (!closest_tube_hit(ray, inv_dir, t_prev + eps, hit)) break;
                if (++iterations > params.max_iterations)
                    throw std::runtime_error("raytrace_analytic: iteration cap exceeded");
                Vec4 base = apply_transfer(tf, std::clamp(hit.attribute, 0.0f, 1.0f));
                Vec4 shaded = shade_fragment(base, hit.normal, -ray.dir, shading);
                color += transmittance * shaded.w() * shaded.head<3>();
                transmittance *= 1.0f - shaded.w();
                t_prev = hit.t;
            }
            local.blended_hits += iterations;
            local.max_hits_per_ray = std::max(local.max_hits_per_ray, iterations);
            color += transmittance * background;
            out.color.at(x, y) = color;
            out.alpha[static_cast<size_t>(y) * camera.width + x] = 1.0f - transmittance;
        }
        row_stats[y] = local;
    });
    reduce_stats(row_stats, stats);
    return out;
}

}  // namespace oitlab
