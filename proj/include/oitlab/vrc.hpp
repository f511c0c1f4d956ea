#pragma once

#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

#include "oitlab/camera.hpp"
#include "oitlab/lineset.hpp"
#include "oitlab/rasterizer.hpp"

namespace oitlab {

/// Face-cell address of a quantized segment endpoint. Interior endpoints are
/// true curve points (polyline vertices) and keep their exact position.
struct QuantizedEndpoint {
    uint8_t face = 0;     // 0..5: -x, +x, -y, +y, -z, +z
    uint16_t cell_u = 0;  // in [0, Q)
    uint16_t cell_v = 0;
    bool interior = false;
};

struct VoxelSegment {
    Vec3 p0, p1;        // dequantized world endpoints
    float a0, a1;       // endpoint attributes
    uint32_t line_id = 0;
    uint32_t seg_id = 0;  // index along this polyline's voxel chain
    QuantizedEndpoint q0, q1;
};

struct VoxelGrid {
    Eigen::Vector3i res = Eigen::Vector3i::Zero();
    Eigen::AlignedBox3f bounds;
    int quantization = 16;
    std::vector<std::vector<VoxelSegment>> cells;

    // Largest world-space displacement any crossing endpoint received during
    // quantization, and the corresponding analytic bound.
    float max_quant_displacement = 0.0f;
    float quant_displacement_bound = 0.0f;

    Vec3 cell_size() const { return bounds.diagonal().cwiseQuotient(res.cast<float>()); }
    size_t cell_index(const Eigen::Vector3i& v) const {
        return (static_cast<size_t>(v.z()) * res.y() + v.y()) * res.x() + v.x();
    }
    bool in_range(const Eigen::Vector3i& v) const {
        return (v.array() >= 0).all() && (v.array() < res.array()).all();
    }
};

// Clips every polyline against the voxel boundaries. Face-crossing points are
// snapped to the centers of a Q x Q subdivision of the crossed face, shared
// between the two adjacent voxels so dequantized chains stay connected.
// Per-voxel lists are sorted by (line_id, seg_id).
VoxelGrid voxelize_lines(const LineSet& ls, const Eigen::Vector3i& res, int quantization,
                         const Eigen::AlignedBox3f& bounds);

/// Convenience overload using the line set bounds padded by `pad`.
VoxelGrid voxelize_lines(const LineSet& ls, const Eigen::Vector3i& res, int quantization,
                         float pad = 1e-3f);

struct VoxelStep {
    Eigen::Vector3i voxel;
    float t_entry = 0.0f;
    float t_exit = 0.0f;
};

/// Grid walk from voxel face to voxel face; steps are 6-connected and t
/// ranges are contiguous (t_exit[i] == t_entry[i+1]).
class DdaWalker {
public:
    DdaWalker(const Ray& ray, const VoxelGrid& grid);
    bool next(VoxelStep& step);

private:
    bool active_ = false;
    Eigen::Vector3i voxel_, step_, res_;
    Eigen::Vector3f t_max_, t_delta_;
    float t_cur_ = 0.0f, t_end_ = 0.0f;
};

std::vector<VoxelStep> dda_traverse(const Ray& ray, const VoxelGrid& grid);

struct TubeHit {
    float t = 0.0f;
    Vec3 normal = Vec3::Zero();
    float attribute = 0.0f;
};

// Infinite-cylinder quadratic around the segment axis, clipped by the two
// planes through the endpoints. Returns hits ascending in t (at most 2); the
// attribute is interpolated by the hit's projection onto the axis.
int intersect_ray_tube(const Ray& ray, const Vec3& p0, const Vec3& p1, float radius, float a0,
                       float a1, TubeHit out[2]);

// Binary grid dump for build-time studies. Versioned little-endian header;
// refuses files with a different version.
void save_voxel_grid(const VoxelGrid& grid, const std::string& path);
VoxelGrid load_voxel_grid(const std::string& path);

struct VrcStats {
    size_t blended_hits = 0;
    size_t tube_tests = 0;
};

// Ray casting through the voxel grid: per visited voxel the segments of the
// voxel and its six face neighbors are tested, accepted hits are clamped to
// the voxel's [t_entry, t_exit) interval so overlapping tubes never blend
// twice, hits are sorted in visibility order, and traversal stops early once
// transmittance falls below 1e-3.
Framebuffer vrc_render(const VoxelGrid& grid, float radius, const Camera& camera,
                       const TransferFunction& tf, const Vec3& background,
                       VrcStats* stats = nullptr, const ShadingParams& shading = {});

}  // namespace oitlab
