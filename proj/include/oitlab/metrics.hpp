#pragma once

#include <vector>

#include "oitlab/image.hpp"

namespace oitlab {

/// Peak signal-to-noise ratio in dB over all pixels and channels, clamped to
/// 60 dB (identical images hit the clamp exactly).
double psnr(const Image& render, const Image& reference);

struct SsimResult {
    double mean = 0.0;
    // Valid-region map, (width-10) x (height-10); values in [-1, 1].
    int width = 0;
    int height = 0;
    std::vector<double> map;
};

// Structural similarity on Rec.709 luminance with an 11x11 Gaussian window
// (sigma 1.5) and c1 = 0.01^2, c2 = 0.03^2 on unit dynamic range. The mean is
// taken over the valid region.
SsimResult ssim(const Image& render, const Image& reference);

// Per-pixel mean absolute channel difference, inverted and normalized so
// white is "no difference" and black marks the image maximum error.
Image abs_error_image(const Image& render, const Image& reference);

}  // namespace oitlab
