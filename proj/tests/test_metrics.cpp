#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "oitlab/metrics.hpp"

using namespace oitlab;

namespace {

Image checker(int w, int h, float lo, float hi) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = Vec3::Constant(((x / 4 + y / 4) % 2) ? hi : lo);
    return img;
}

Image add_noise(const Image& base, float amplitude, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
    Image out = base;
    for (Vec3& p : out.pixels) {
        p += amplitude * Vec3(uni(rng), uni(rng), uni(rng));
        p = p.cwiseMax(0.0f).cwiseMin(1.0f);
    }
    return out;
}

}  // namespace

TEST_CASE("psnr") {
    Image a = checker(32, 24, 0.2f, 0.8f);
    SUBCASE("identical images clamp to 60 dB exactly") {
        CHECK(psnr(a, a) == 60.0);
    }
    SUBCASE("uniform half-gray against black") {
        Image gray(16, 16, Vec3::Constant(0.5f));
        Image black(16, 16, Vec3::Zero());
        CHECK(psnr(gray, black) == doctest::Approx(6.0206).epsilon(1e-4));
    }
    SUBCASE("symmetry") {
        Image b = add_noise(a, 0.1f, 1);
        CHECK(psnr(a, b) == psnr(b, a));
    }
    SUBCASE("dimension mismatch is an error") {
        Image b(10, 10);
        CHECK_THROWS_AS(psnr(a, b), std::invalid_argument);
    }
    SUBCASE("more noise, lower psnr") {
        double prev = 61.0;
        for (float amp : {0.01f, 0.05f, 0.1f}) {
            double v = psnr(add_noise(a, amp, 7), a);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("ssim") {
    Image a = checker(48, 36, 0.25f, 0.75f);
    SUBCASE("identical images score 1") {
        SsimResult r = ssim(a, a);
        CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("negated mid-contrast pattern scores badly") {
        Image neg = a;
        for (Vec3& p : neg.pixels) p = Vec3::Ones() - p;
        CHECK(ssim(a, neg).mean < 0.5);
    }
    SUBCASE("symmetry") {
        Image b = add_noise(a, 0.08f, 3);
        CHECK(ssim(a, b).mean == doctest::Approx(ssim(b, a).mean).epsilon(1e-12));
    }
    SUBCASE("map values stay in [-1, 1] and cover the valid region") {
        Image b = add_noise(a, 0.3f, 9);
        SsimResult r = ssim(a, b);
        CHECK(r.width == a.width - 10);
        CHECK(r.height == a.height - 10);
        for (double v : r.map) {
            CHECK(v <= 1.0 + 1e-12);
            CHECK(v >= -1.0 - 1e-12);
        }
    }
    SUBCASE("images below the window size are rejected") {
        Image tiny(8, 8);
        CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
    }
}

TEST_CASE("image file round trips") {
    namespace fs = std::filesystem;
    Image img = checker(24, 18, 0.2f, 0.8f);
    img.at(3, 5) = Vec3(1.0f / 255.0f, 128.0f / 255.0f, 254.0f / 255.0f);

    SUBCASE("pfm holds floats exactly") {
        std::string path = (fs::temp_directory_path() / "oitlab_rt.pfm").string();
        write_pfm(img, path);
        Image back = read_pfm(path);
        REQUIRE(back.width == img.width);
        CHECK(max_channel_diff(img, back) == 0.0f);
        CHECK(read_image(path).width == img.width);
    }
    SUBCASE("ppm is exact for values on the 8-bit lattice") {
        std::string path = (fs::temp_directory_path() / "oitlab_rt.ppm").string();
        write_ppm(img, path);
        Image back = read_ppm(path);
        REQUIRE(back.height == img.height);
        CHECK(max_channel_diff(img, back) <= 0.5f / 255.0f);
        write_ppm(back, path);  // already quantized: second trip is exact
        CHECK(max_channel_diff(back, read_ppm(path)) == 0.0f);
    }
}

TEST_CASE("abs_error_image") {
    Image a = checker(20, 15, 0.1f, 0.9f);
    SUBCASE("identical images are all white") {
        Image e = abs_error_image(a, a);
        for (const Vec3& p : e.pixels) CHECK(p == Vec3::Ones());
    }
    SUBCASE("a single differing pixel becomes the lone black pixel") {
        Image b = a;
        b.at(7, 4) += Vec3(0.3f, 0.0f, 0.0f);
        Image e = abs_error_image(a, b);
        int non_white = 0;
        for (int y = 0; y < e.height; ++y)
            for (int x = 0; x < e.width; ++x)
                if (e.at(x, y) != Vec3::Ones()) {
                    ++non_white;
                    CHECK(x == 7);
                    CHECK(y == 4);
                    CHECK(e.at(x, y) == Vec3::Zero());  // image max maps to black
                }
        CHECK(non_white == 1);
    }
    SUBCASE("argument order does not matter") {
        Image b = add_noise(a, 0.2f, 5);
        Image e1 = abs_error_image(a, b);
        Image e2 = abs_error_image(b, a);
        CHECK(max_channel_diff(e1, e2) == 0.0f);
    }
}
