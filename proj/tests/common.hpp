#pragma once

// Helpers shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <vector>

#include "oitlab/camera.hpp"
#include "oitlab/fragment.hpp"
#include "oitlab/image.hpp"
#include "oitlab/parallel.hpp"
#include "oitlab/raytracer.hpp"

namespace oitlab::testutil {

/// Ray-traced hit count per pixel: full closest-hit chains with strict-t
/// progression (no restart offset), used to identify coverage mismatches.
inline std::vector<uint32_t> rt_hit_counts(const TriMesh& mesh, const Bvh& bvh,
                                           const Camera& camera, uint32_t cap = 100000) {
    std::vector<uint32_t> counts(static_cast<size_t>(camera.width) * camera.height, 0);
    parallel_for(camera.height, [&](int y) {
        for (int x = 0; x < camera.width; ++x) {
            Ray ray = camera.pixel_ray(x, y);
            float t = 0.0f;
            uint32_t n = 0;
            while (n < cap) {
                auto hit = closest_hit(ray, bvh, mesh, t);
                if (!hit) break;
                t = hit->t;
                ++n;
            }
            counts[static_cast<size_t>(y) * camera.width + x] = n;
        }
    });
    return counts;
}

// Interior pixels: the rasterized depth complexity is constant over the 3x3
// neighborhood and the ray-traced hit count agrees at the pixel. Everything
// else is a (potential) silhouette where coverage rules legitimately differ.
inline std::vector<char> interior_mask(const std::vector<uint32_t>& raster_counts,
                                       const std::vector<uint32_t>& rt_counts, int width,
                                       int height) {
    std::vector<char> mask(raster_counts.size(), 0);
    auto at = [&](int x, int y) { return raster_counts[static_cast<size_t>(y) * width + x]; };
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            size_t i = static_cast<size_t>(y) * width + x;
            if (rt_counts[i] != raster_counts[i]) continue;
            uint32_t c = at(x, y);
            bool flat = true;
            for (int dy = -1; dy <= 1 && flat; ++dy)
                for (int dx = -1; dx <= 1 && flat; ++dx) {
                    int nx = std::clamp(x + dx, 0, width - 1);
                    int ny = std::clamp(y + dy, 0, height - 1);
                    if (at(nx, ny) != c) flat = false;
                }
            mask[i] = flat ? 1 : 0;
        }
    }
    return mask;
}

inline double masked_psnr(const Image& a, const Image& b, const std::vector<char>& mask) {
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        if (!mask[i]) continue;
        sum += (a.pixels[i] - b.pixels[i]).cast<double>().squaredNorm();
        n += 3;
    }
    if (n == 0) return 0.0;
    double mse = sum / static_cast<double>(n);
    if (mse <= 0.0) return 60.0;
    return std::min(60.0, -10.0 * std::log10(mse));
}

inline float masked_max_diff(const Image& a, const Image& b, const std::vector<char>& mask) {
    float m = 0.0f;
    for (size_t i = 0; i < a.pixels.size(); ++i)
        if (mask[i]) m = std::max(m, (a.pixels[i] - b.pixels[i]).cwiseAbs().maxCoeff());
    return m;
}

inline size_t mask_count(const std::vector<char>& mask) {
    size_t n = 0;
    for (char c : mask) n += c != 0;
    return n;
}

}  // namespace oitlab::testutil
