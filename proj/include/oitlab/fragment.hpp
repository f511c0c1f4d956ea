#pragma once

#include <cstdint>
#include <vector>

#include "oitlab/image.hpp"

namespace oitlab {

/// One rasterized sample: view depth, straight (non-premultiplied) color,
/// opacity, and the submission ordinal of the primitive that produced it.
struct Fragment {
    float z = 0.0f;
    Vec3 color = Vec3::Zero();
    float alpha = 0.0f;
    uint32_t submission = 0;
};

/// Per-pixel fragment streams in submission order.
struct FragmentBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::vector<Fragment>> pixels;  // row-major
    size_t total = 0;

    FragmentBuffer() = default;
    FragmentBuffer(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}

    std::vector<Fragment>& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const std::vector<Fragment>& at(int x, int y) const {
        return pixels[static_cast<size_t>(y) * width + x];
    }

    void push(int x, int y, const Fragment& f) {
        at(x, y).push_back(f);
        ++total;
    }
};

struct DepthComplexity {
    int width = 0;
    int height = 0;
    std::vector<uint32_t> counts;
    size_t total = 0;
    uint32_t max_count = 0;
};

DepthComplexity depth_complexity(const FragmentBuffer& fb);

}  // namespace oitlab
