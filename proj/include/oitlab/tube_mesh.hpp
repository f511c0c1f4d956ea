#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "oitlab/lineset.hpp"

namespace oitlab {

/// Indexed triangle mesh with shared vertices and per-vertex attributes.
struct TriMesh {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;     // unit length
    std::vector<float> attributes; // scalar in [0,1]
    std::vector<std::array<uint32_t, 3>> triangles;

    Eigen::AlignedBox3f bounds() const;
};

/// Unit tangent at one polyline vertex: the normalized mean of the adjacent
/// segment directions, or the single segment direction at the endpoints.
Vec3 average_tangent(const LineSet& ls, size_t polyline, size_t vertex);

// Tubes with a 3-vertex cross-section ring per polyline vertex. Rings lie in
// the plane orthogonal to the averaged tangent; the first ring frame picks the
// coordinate axis least aligned with the tangent and is parallel-transported
// along the line to avoid twist. Consecutive rings are stitched with 6
// triangles, each tube end is closed with a single cap triangle, and the
// ring-to-center directions become the vertex normals.
TriMesh generate_tube_mesh(const LineSet& ls, float radius);

}  // namespace oitlab
