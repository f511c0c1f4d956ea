#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace oitlab {

using Vec3 = Eigen::Vector3f;
using Vec4 = Eigen::Vector4f;

/// RGB image, linear values in [0,1], row-major with y=0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;

    Image() = default;
    Image(int w, int h, const Vec3& fill = Vec3::Zero())
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    Vec3& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return pixels.size(); }
};

/// Render target: resolved color plus per-pixel coverage (1 - transmittance).
struct Framebuffer {
    Image color;
    std::vector<float> alpha;

    Framebuffer() = default;
    Framebuffer(int w, int h, const Vec3& background)
        : color(w, h, background), alpha(static_cast<size_t>(w) * h, 0.0f) {}
};

/// Maximum per-channel absolute difference between two equally sized images.
float max_channel_diff(const Image& a, const Image& b);

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded
// half-up from linear; no gamma is applied.
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

// PFM float dumps (little-endian, bottom-up rows) for bit-level comparisons.
void write_pfm(const Image& img, const std::string& path);
Image read_pfm(const std::string& path);

/// Reads either format based on magic bytes.
Image read_image(const std::string& path);

}  // namespace oitlab
