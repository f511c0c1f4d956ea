#include "oitlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oitlab {

static void require_same_size(const Image& a, const Image& b, const char* op) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument(std::string(op) + ": image dimensions differ");
}

double psnr(const Image& render, const Image& reference) {
    require_same_size(render, reference, "psnr");
    double sum = 0.0;
    for (size_t i = 0; i < render.pixels.size(); ++i) {
        Eigen::Vector3d d = (render.pixels[i] - reference.pixels[i]).cast<double>();
        sum += d.squaredNorm();
    }
    double mse = sum / (static_cast<double>(render.pixels.size()) * 3.0);
    if (mse <= 0.0) return 60.0;
    return std::min(60.0, -10.0 * std::log10(mse));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWindow * kWindow);
    double sum = 0.0;
    for (int y = 0; y < kWindow; ++y) {
        for (int x = 0; x < kWindow; ++x) {
            double dx = x - kWindow / 2, dy = y - kWindow / 2;
            double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            k[y * kWindow + x] = v;
            sum += v;
        }
    }
    for (double& v : k) v /= sum;
    return k;
}

double luminance(const Vec3& c) {
    return 0.2126 * c.x() + 0.7152 * c.y() + 0.0722 * c.z();
}

}  // namespace

SsimResult ssim(const Image& render, const Image& reference) {
    require_same_size(render, reference, "ssim");
    if (render.width < kWindow || render.height < kWindow)
        throw std::invalid_argument("ssim: images smaller than the 11x11 window");

    static const std::vector<double> kernel = gaussian_kernel();

    std::vector<double> lum_r(render.pixels.size()), lum_g(render.pixels.size());
    for (size_t i = 0; i < render.pixels.size(); ++i) {
        lum_r[i] = luminance(render.pixels[i]);
        lum_g[i] = luminance(reference.pixels[i]);
    }

    SsimResult res;
    res.width = render.width - kWindow + 1;
    res.height = render.height - kWindow + 1;
    res.map.resize(static_cast<size_t>(res.width) * res.height);

    double total = 0.0;
    for (int y = 0; y < res.height; ++y) {
        for (int x = 0; x < res.width; ++x) {
            double mu_r = 0.0, mu_g = 0.0, rr = 0.0, gg = 0.0, rg = 0.0;
            for (int wy = 0; wy < kWindow; ++wy) {
                const double* krow = &kernel[wy * kWindow];
                size_t row = static_cast<size_t>(y + wy) * render.width + x;
                for (int wx = 0; wx < kWindow; ++wx) {
                    double w = krow[wx];
                    double r = lum_r[row + wx], g = lum_g[row + wx];
                    mu_r += w * r;
                    mu_g += w * g;
                    rr += w * r * r;
                    gg += w * g * g;
                    rg += w * r * g;
                }
            }
            double var_r = rr - mu_r * mu_r;
            double var_g = gg - mu_g * mu_g;
            double cov = rg - mu_r * mu_g;
            double s = ((2.0 * mu_r * mu_g + kC1) * (2.0 * cov + kC2)) /
                       ((mu_r * mu_r + mu_g * mu_g + kC1) * (var_r + var_g + kC2));
            res.map[static_cast<size_t>(y) * res.width + x] = s;
            total += s;
        }
    }
    res.mean = total / static_cast<double>(res.map.size());
    return res;
}

Image abs_error_image(const Image& render, const Image& reference) {
    require_same_size(render, reference, "abs_error_image");
    std::vector<float> err(render.pixels.size());
    float max_err = 0.0f;
    for (size_t i = 0; i < render.pixels.size(); ++i) {
        err[i] = (render.pixels[i] - reference.pixels[i]).cwiseAbs().mean();
        max_err = std::max(max_err, err[i]);
    }
    Image out(render.width, render.height, Vec3::Ones());
    if (max_err <= 0.0f) return out;  // identical inputs stay all white
    for (size_t i = 0; i < err.size(); ++i)
        out.pixels[i] = Vec3::Constant(1.0f - err[i] / max_err);
    return out;
}

}  // namespace oitlab
