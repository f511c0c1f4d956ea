#include "oitlab/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace oitlab {

float max_channel_diff(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("max_channel_diff: image dimensions differ");
    float m = 0.0f;
    for (size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, (a.pixels[i] - b.pixels[i]).cwiseAbs().maxCoeff());
    return m;
}

static uint8_t to_byte(float v) {
    v = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::floor(v * 255.0f + 0.5f));
}

void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vec3& p = img.at(x, y);
            row[3 * x + 0] = to_byte(p.x());
            row[3 * x + 1] = to_byte(p.y());
            row[3 * x + 2] = to_byte(p.z());
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

static void skip_ppm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw std::runtime_error("read_ppm: not a P6 file: " + path);
    int w = 0, h = 0, maxval = 0;
    skip_ppm_space(in);
    in >> w;
    skip_ppm_space(in);
    in >> h;
    skip_ppm_space(in);
    in >> maxval;
    in.get();  // single whitespace after maxval
    if (!in || w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error("read_ppm: bad header in " + path);
    Image img(w, h);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), row.size());
        if (!in) throw std::runtime_error("read_ppm: truncated pixel data in " + path);
        for (int x = 0; x < w; ++x)
            img.at(x, y) = Vec3(row[3 * x], row[3 * x + 1], row[3 * x + 2]) / 255.0f;
    }
    return img;
}

void write_pfm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pfm: cannot open " + path);
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    // PFM stores rows bottom-up.
    for (int y = img.height - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(&img.at(0, y)), sizeof(Vec3) * img.width);
    if (!out) throw std::runtime_error("write_pfm: write failed for " + path);
}

Image read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pfm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "PF") throw std::runtime_error("read_pfm: not a color PFM file: " + path);
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    in.get();
    if (!in || w <= 0 || h <= 0 || scale >= 0.0)
        throw std::runtime_error("read_pfm: bad header in " + path);
    Image img(w, h);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(&img.at(0, y)), sizeof(Vec3) * w);
        if (!in) throw std::runtime_error("read_pfm: truncated pixel data in " + path);
    }
    return img;
}

Image read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_image: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    in.close();
    if (m0 == 'P' && m1 == '6') return read_ppm(path);
    if (m0 == 'P' && m1 == 'F') return read_pfm(path);
    throw std::runtime_error("read_image: unknown format: " + path);
}

}  // namespace oitlab
