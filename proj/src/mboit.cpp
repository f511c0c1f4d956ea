#include "oitlab/mboit.hpp"

#include <Eigen/Cholesky>

#include "oitlab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace oitlab {

double absorb(float alpha) {
    float a = std::clamp(alpha, 0.0f, kAlphaMax);
    return -std::log1p(-static_cast<double>(a));
}

double warp_depth(float z, float near_plane, float far_plane, MboitStats* stats) {
    if (z < near_plane || z > far_plane) {
        if (stats) ++stats->depth_clamps;
        z = std::clamp(z, near_plane, far_plane);
    }
    double ln_near = std::log(static_cast<double>(near_plane));
    double ln_far = std::log(static_cast<double>(far_plane));
    return 2.0 * (std::log(static_cast<double>(z)) - ln_near) / (ln_far - ln_near) - 1.0;
}

void accumulate_moments_at(MomentPixel& px, double absorbance, double d) {
    px.b0 += absorbance;
    double p = d;
    for (int i = 0; i < 4; ++i) {
        px.b[i] += absorbance * p;
        p *= d;
    }
}

void accumulate_moments(MomentPixel& px, const Fragment& f, float near_plane, float far_plane,
                        MboitStats* stats) {
    accumulate_moments_at(px, absorb(f.alpha), warp_depth(f.z, near_plane, far_plane, stats));
}

namespace {

// Moments of the uniform distribution on [-1, 1]; the bias target that keeps
// the Hankel matrix positive definite for degenerate pixels.
const Eigen::Vector4d kUniformMoments(0.0, 1.0 / 3.0, 0.0, 1.0 / 5.0);

AbsorbanceBounds fallback_bounds(const MomentPixel& px, double d, MboitStats* stats) {
    if (stats) ++stats->hankel_fallbacks;
    double a = px.b0 * std::clamp(0.5 * (d + 1.0), 0.0, 1.0);
    return {a, a, true};
}

}  // namespace

AbsorbanceBounds absorbance_bounds(const MomentPixel& px, double d, double bias,
                                   MboitStats* stats) {
    if (px.b0 <= 0.0) return {0.0, 0.0, false};

    Eigen::Vector4d m = px.b / px.b0;
    m = (1.0 - bias) * m + bias * kUniformMoments;

    Eigen::Matrix3d hankel;
    hankel << 1.0, m[0], m[1],
              m[0], m[1], m[2],
              m[1], m[2], m[3];
    Eigen::LLT<Eigen::Matrix3d> llt(hankel);
    if (llt.info() != Eigen::Success) return fallback_bounds(px, d, stats);

    // Coefficients of the quadratic orthogonal to the moment measure with the
    // query point pinned; its roots complete the canonical 3-point support.
    Eigen::Vector3d c = llt.solve(Eigen::Vector3d(1.0, d, d * d));
    double r1, r2;
    if (std::abs(c[2]) < 1e-14) {
        if (std::abs(c[1]) < 1e-14) return fallback_bounds(px, d, stats);
        r1 = r2 = -c[0] / c[1];
    } else {
        double disc = c[1] * c[1] - 4.0 * c[2] * c[0];
        if (disc < 0.0) return fallback_bounds(px, d, stats);
        double s = std::sqrt(disc);
        double q = -0.5 * (c[1] + std::copysign(s, c[1]));
        if (q == 0.0) {
            r1 = r2 = 0.0;
        } else {
            r1 = q / c[2];
            r2 = c[0] / q;
        }
    }

    // Vandermonde weights of the support {d, r1, r2} against (1, m1, m2).
    double p[3] = {d, r1, r2};
    double sep = std::min({std::abs(p[0] - p[1]), std::abs(p[0] - p[2]), std::abs(p[1] - p[2])});
    if (sep < 1e-12) return fallback_bounds(px, d, stats);

    double w[3];
    for (int i = 0; i < 3; ++i) {
        double pj = p[(i + 1) % 3], pk = p[(i + 2) % 3];
        w[i] = (m[1] - m[0] * (pj + pk) + pj * pk) / ((p[i] - pj) * (p[i] - pk));
    }

    double below = 0.0;
    for (int i = 1; i < 3; ++i)
        if (p[i] < d) below += w[i];
    double lower = px.b0 * std::clamp(below, 0.0, 1.0);
    double upper = lower + px.b0 * std::clamp(w[0], 0.0, 1.0);
    upper = std::min(upper, px.b0);
    lower = std::min(lower, upper);
    return {lower, upper, false};
}

double reconstruct_transmittance(const MomentPixel& px, float z_f, double beta, double bias,
                                 float near_plane, float far_plane, MboitStats* stats) {
    if (px.b0 <= 0.0) return 1.0;
    double d = warp_depth(z_f, near_plane, far_plane, stats);
    AbsorbanceBounds bounds = absorbance_bounds(px, d, bias, stats);
    double a = bounds.lower + beta * (bounds.upper - bounds.lower);
    return std::exp(-a);
}

Framebuffer mboit_render(const FragmentBuffer& fb, const Vec3& background,
                         const MboitParams& params, float near_plane, float far_plane,
                         MboitStats* stats) {
    Framebuffer out(fb.width, fb.height, background);
    std::vector<MboitStats> row_stats(fb.height);
    parallel_for(fb.height, [&](int y) {
        MboitStats local;
        for (size_t i = static_cast<size_t>(y) * fb.width; i < static_cast<size_t>(y + 1) * fb.width;
             ++i) {
            const auto& stream = fb.pixels[i];

            MomentPixel moments;
            for (const Fragment& f : stream)
                accumulate_moments(moments, f, near_plane, far_plane, &local);
            if (moments.b0 <= 0.0) continue;

            Eigen::Vector3d color_sum = Eigen::Vector3d::Zero();
            double weight_sum = 0.0;
            for (const Fragment& f : stream) {
                double t = reconstruct_transmittance(moments, f.z, params.beta, params.bias,
                                                     near_plane, far_plane, &local);
                double w = t * static_cast<double>(f.alpha);
                color_sum += w * f.color.cast<double>();
                weight_sum += w;
            }

            double total_transmittance = std::exp(-moments.b0);
            if (weight_sum <= 0.0) {
                ++local.zero_weight_pixels;
                continue;  // leave the background in place
            }
            Eigen::Vector3d resolved = color_sum / weight_sum * (1.0 - total_transmittance) +
                                       total_transmittance * background.cast<double>();
            out.color.pixels[i] = resolved.cast<float>();
            out.alpha[i] = static_cast<float>(1.0 - total_transmittance);
        }
        row_stats[y] = local;
    });
    if (stats) {
        for (const MboitStats& r : row_stats) {
            stats->depth_clamps += r.depth_clamps;
            stats->hankel_fallbacks += r.hankel_fallbacks;
            stats->zero_weight_pixels += r.zero_weight_pixels;
        }
    }
    return out;
}

}  // namespace oitlab
