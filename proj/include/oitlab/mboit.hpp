#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "oitlab/fragment.hpp"

namespace oitlab {

/// Per-pixel moment state: total absorbance b0 and four power moments of the
/// warped depth, weighted by absorbance.
struct MomentPixel {
    double b0 = 0.0;
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
};

struct MboitParams {
    double beta = 0.1;   // interpolation between the absorbance bounds
    double bias = 6e-5;  // blend toward the uniform-distribution moments
};

struct MboitStats {
    size_t depth_clamps = 0;      // warp inputs outside [near, far]
    size_t hankel_fallbacks = 0;  // non-positive-definite moment matrices
    size_t zero_weight_pixels = 0;
};

constexpr float kAlphaMax = 1.0f - 1e-5f;

/// Absorbance of one fragment: -ln(1 - alpha), with alpha clamped below 1.
double absorb(float alpha);

/// Logarithmic depth warp onto [-1, 1]; out-of-range depths are clamped.
double warp_depth(float z, float near_plane, float far_plane, MboitStats* stats = nullptr);

/// Raw accumulation at a warped coordinate d in [-1, 1].
void accumulate_moments_at(MomentPixel& px, double absorbance, double d);

/// Accumulates one fragment into the pixel moments (commutative up to float
/// reordering).
void accumulate_moments(MomentPixel& px, const Fragment& f, float near_plane, float far_plane,
                        MboitStats* stats = nullptr);

/// Sharp bounds on the absorbance strictly in front of warped depth d,
/// derived from the canonical 3-point support of the biased moment problem.
struct AbsorbanceBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool fallback = false;
};

AbsorbanceBounds absorbance_bounds(const MomentPixel& px, double d, double bias,
                                   MboitStats* stats = nullptr);

/// Transmittance estimate at depth z_f: exp(-(lower + beta*(upper-lower))).
double reconstruct_transmittance(const MomentPixel& px, float z_f, double beta, double bias,
                                 float near_plane, float far_plane, MboitStats* stats = nullptr);

// Two-pass moment compositing: pass 1 accumulates per-pixel moments, pass 2
// weights every fragment by its reconstructed transmittance and resolves
//   color = (sum w*c)/(sum w) * (1 - exp(-b0)) + exp(-b0) * background,
// so the background weight is exact regardless of reconstruction quality.
Framebuffer mboit_render(const FragmentBuffer& fb, const Vec3& background,
                         const MboitParams& params, float near_plane, float far_plane,
                         MboitStats* stats = nullptr);

}  // namespace oitlab
