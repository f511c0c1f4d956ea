#pragma once

#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <vector>

#include "oitlab/camera.hpp"
#include "oitlab/lineset.hpp"
#include "oitlab/rasterizer.hpp"
#include "oitlab/tube_mesh.hpp"

namespace oitlab {

struct BvhNode {
    Eigen::AlignedBox3f box;
    int32_t left = -1;
    int32_t right = -1;
    uint32_t first = 0;
    uint32_t count = 0;  // > 0 for leaves

    bool is_leaf() const { return count > 0; }
};

/// Axis-aligned bounding box hierarchy built by median split over the longest
/// axis; primitive order is a permutation referenced by leaf ranges.
struct Bvh {
    std::vector<BvhNode> nodes;
    std::vector<uint32_t> prims;
    int max_leaf_size = 4;

    const BvhNode& root() const { return nodes.front(); }
};

Bvh build_bvh(std::vector<Eigen::AlignedBox3f> boxes, int max_leaf_size = 4);
Bvh build_bvh(const TriMesh& mesh, int max_leaf_size = 4);

struct Hit {
    float t = 0.0f;
    uint32_t triangle = 0;
    Vec3 normal = Vec3::Zero();  // interpolated vertex normal, unit length
    float attribute = 0.0f;
};

/// Nearest triangle hit with t strictly greater than t_min; equal-t ties are
/// broken by triangle id. Uses a watertight ray-triangle test so shared edges
/// neither gap nor double-count.
std::optional<Hit> closest_hit(const Ray& ray, const Bvh& bvh, const TriMesh& mesh, float t_min);

struct RtParams {
    float epsilon = -1.0f;       // restart offset; < 0 means 1e-4 * scene diagonal
    float min_transmittance = 1e-3f;
    size_t max_iterations = 100000;  // guards against epsilon pathologies
    int leaf_size = 4;
};

struct RtStats {
    size_t blended_hits = 0;
    size_t max_hits_per_ray = 0;
};

// Iterative closest-hit blending: each round restarts the query just behind
// the previous hit (t_prev + epsilon) and composites front-to-back until a
// miss or the transmittance threshold. Exceeding max_iterations throws.
Vec4 trace_blend(const Ray& ray, const Bvh& bvh, const TriMesh& mesh, const TransferFunction& tf,
                 const Vec3& background, const RtParams& params, RtStats* stats = nullptr,
                 const ShadingParams& shading = {});

Framebuffer raytrace_image(const TriMesh& mesh, const Bvh& bvh, const Camera& camera,
                           const TransferFunction& tf, const Vec3& background,
                           const RtParams& params = {}, RtStats* stats = nullptr,
                           const ShadingParams& shading = {});

/// Convenience: builds the BVH internally.
Framebuffer raytrace_image(const TriMesh& mesh, const Camera& camera, const TransferFunction& tf,
                           const Vec3& background, const RtParams& params = {},
                           RtStats* stats = nullptr, const ShadingParams& shading = {});

/// Analytic tube mode over the raw polyline segments, sharing the ray-tube
/// intersector with the voxel ray caster. Used for geometry cross-checks.
Framebuffer raytrace_analytic(const LineSet& ls, float radius, const Camera& camera,
                              const TransferFunction& tf, const Vec3& background,
                              const RtParams& params = {}, RtStats* stats = nullptr,
                              const ShadingParams& shading = {});

}  // namespace oitlab
