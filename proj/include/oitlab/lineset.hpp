#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <string>
#include <vector>

#include "oitlab/image.hpp"

namespace oitlab {

struct LineVertex {
    Vec3 position = Vec3::Zero();
    float attribute = 0.0f;  // scalar in [0,1], mapped to color/opacity
};

/// A set of polylines over a shared vertex pool.
struct LineSet {
    std::vector<LineVertex> vertices;
    std::vector<std::vector<uint32_t>> polylines;  // each run has >= 2 vertex indices

    Eigen::AlignedBox3f bounds() const;
};

enum class SynthKind { HelixBundle, VortexStreamlines, GridRods };

SynthKind parse_synth_kind(const std::string& name);

// ASCII line-set files: "v x y z a" vertices (attribute in [0,1]) and
// "l i1 i2 ..." polylines with one-based indices. '#' starts a comment.
LineSet load_lineset(const std::string& path);
void save_lineset(const LineSet& ls, const std::string& path);

/// Deterministic synthetic line sets; identical inputs give identical output.
LineSet synth_lineset(SynthKind kind, uint64_t seed, int n_lines, int n_verts);

/// Piecewise-linear RGBA ramp over the attribute range [0,1].
struct TransferFunction {
    struct ControlPoint {
        float t;
        Vec4 rgba;  // straight color + opacity, channels in [0,1]
    };
    std::vector<ControlPoint> points;  // strictly increasing t, first 0, last 1

    static TransferFunction constant(const Vec4& rgba);
    void validate() const;
};

Vec4 apply_transfer(const TransferFunction& tf, float attribute);

}  // namespace oitlab
