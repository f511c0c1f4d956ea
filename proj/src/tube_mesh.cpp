#include "oitlab/tube_mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace oitlab {

Eigen::AlignedBox3f TriMesh::bounds() const {
    Eigen::AlignedBox3f box;
    for (const auto& p : positions) box.extend(p);
    return box;
}

static Vec3 segment_direction(const LineSet& ls, const std::vector<uint32_t>& run, size_t seg) {
    Vec3 d = ls.vertices[run[seg + 1]].position - ls.vertices[run[seg]].position;
    float len = d.norm();
    if (len <= 0.0f) throw std::runtime_error("degenerate zero-length line segment");
    return d / len;
}

Vec3 average_tangent(const LineSet& ls, size_t polyline, size_t vertex) {
    const auto& run = ls.polylines.at(polyline);
    if (vertex >= run.size()) throw std::out_of_range("average_tangent: vertex not in polyline");
    if (vertex == 0) return segment_direction(ls, run, 0);
    if (vertex == run.size() - 1) return segment_direction(ls, run, run.size() - 2);
    Vec3 mean = segment_direction(ls, run, vertex - 1) + segment_direction(ls, run, vertex);
    float len = mean.norm();
    if (len <= 1e-12f) throw std::runtime_error("degenerate tangent: opposing segments");
    return mean / len;
}

// Ring-plane basis for the first vertex: start from the coordinate axis least
// aligned with the tangent.
static Vec3 initial_ring_axis(const Vec3& tangent) {
    Vec3 abs = tangent.cwiseAbs();
    int axis = 0;
    abs.minCoeff(&axis);
    Vec3 ref = Vec3::Zero();
    ref[axis] = 1.0f;
    Vec3 n = ref - ref.dot(tangent) * tangent;
    return n.normalized();
}

// Parallel transport: remove the new tangent component from the previous
// in-plane axis and renormalize; fall back to a fresh frame if the bend is
// close to 180 degrees.
static Vec3 transport_ring_axis(const Vec3& prev_axis, const Vec3& tangent) {
    Vec3 n = prev_axis - prev_axis.dot(tangent) * tangent;
    float len = n.norm();
    if (len < 1e-6f) return initial_ring_axis(tangent);
    return n / len;
}

TriMesh generate_tube_mesh(const LineSet& ls, float radius) {
    if (radius <= 0.0f) throw std::invalid_argument("generate_tube_mesh: radius must be > 0");

    TriMesh mesh;
    constexpr int kRing = 3;
    const float angles[kRing] = {0.0f, 2.0f * static_cast<float>(M_PI) / 3.0f,
                                 4.0f * static_cast<float>(M_PI) / 3.0f};

    for (size_t li = 0; li < ls.polylines.size(); ++li) {
        const auto& run = ls.polylines[li];
        uint32_t base = static_cast<uint32_t>(mesh.positions.size());

        Vec3 ring_axis = Vec3::Zero();
        for (size_t vi = 0; vi < run.size(); ++vi) {
            Vec3 tangent = average_tangent(ls, li, vi);
            ring_axis = vi == 0 ? initial_ring_axis(tangent) : transport_ring_axis(ring_axis, tangent);
            Vec3 binormal = tangent.cross(ring_axis);

            const LineVertex& center = ls.vertices[run[vi]];
            for (int r = 0; r < kRing; ++r) {
                Vec3 dir = std::cos(angles[r]) * ring_axis + std::sin(angles[r]) * binormal;
                mesh.positions.push_back(center.position + radius * dir);
                mesh.normals.push_back(dir);
                mesh.attributes.push_back(center.attribute);
            }
        }

        auto ring_vertex = [&](size_t ring, int corner) {
            return base + static_cast<uint32_t>(ring) * kRing + static_cast<uint32_t>(corner % kRing);
        };

        // Start cap, wound to face backwards along the tube.
        mesh.triangles.push_back({ring_vertex(0, 0), ring_vertex(0, 2), ring_vertex(0, 1)});
        for (size_t ring = 0; ring + 1 < run.size(); ++ring) {
            for (int s = 0; s < kRing; ++s) {
                uint32_t a0 = ring_vertex(ring, s);
                uint32_t a1 = ring_vertex(ring, s + 1);
                uint32_t b0 = ring_vertex(ring + 1, s);
                uint32_t b1 = ring_vertex(ring + 1, s + 1);
                mesh.triangles.push_back({a0, a1, b1});
                mesh.triangles.push_back({a0, b1, b0});
            }
        }
        size_t last = run.size() - 1;
        mesh.triangles.push_back({ring_vertex(last, 0), ring_vertex(last, 1), ring_vertex(last, 2)});
    }
    return mesh;
}

}  // namespace oitlab
