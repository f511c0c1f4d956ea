#pragma once

#include "oitlab/camera.hpp"
#include "oitlab/fragment.hpp"
#include "oitlab/lineset.hpp"
#include "oitlab/tube_mesh.hpp"

namespace oitlab {

/// Blinn-Phong constants for the headlight model.
struct ShadingParams {
    float ambient = 0.1f;
    float diffuse = 0.85f;
    float specular = 0.05f;
    float shininess = 16.0f;
};

// Headlight shading: the light direction equals the view direction. Diffuse
// uses |n.l| because transparent tubes are rendered two-sided. Opacity passes
// through untouched.
Vec4 shade_fragment(const Vec4& base, const Vec3& normal, const Vec3& view_dir,
                    const ShadingParams& params = {});

// Software perspective rasterizer. Emits one fragment per covered pixel per
// triangle, front- and back-facing alike, in primitive submission order.
// Coverage follows a top-left fill convention with canonically oriented edge
// functions so adjacent triangles never double-cover or gap a pixel. Depth
// and vertex attributes are interpolated perspective-correct; depth is the
// view-space distance along the camera forward axis, clipped to [near, far].
FragmentBuffer rasterize(const TriMesh& mesh, const Camera& camera, const TransferFunction& tf,
                         const ShadingParams& shading = {});

}  // namespace oitlab
