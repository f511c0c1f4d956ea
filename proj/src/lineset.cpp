#include "oitlab/lineset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace oitlab {

Eigen::AlignedBox3f LineSet::bounds() const {
    Eigen::AlignedBox3f box;
    for (const auto& v : vertices) box.extend(v.position);
    return box;
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "helix-bundle") return SynthKind::HelixBundle;
    if (name == "vortex-streamlines") return SynthKind::VortexStreamlines;
    if (name == "grid-rods") return SynthKind::GridRods;
    throw std::invalid_argument("unknown synth kind: " + name);
}

static std::runtime_error parse_error(const std::string& path, int line, const std::string& msg) {
    std::ostringstream os;
    os << path << ":" << line << ": " << msg;
    return std::runtime_error(os.str());
}

LineSet load_lineset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_lineset: cannot open " + path);

    LineSet ls;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ss(raw);
        std::string tag;
        if (!(ss >> tag)) continue;

        if (tag == "v") {
            LineVertex v;
            if (!(ss >> v.position.x() >> v.position.y() >> v.position.z() >> v.attribute))
                throw parse_error(path, lineno, "vertex needs 4 numbers: x y z a");
            if (v.attribute < 0.0f || v.attribute > 1.0f)
                throw parse_error(path, lineno, "attribute outside [0,1]");
            std::string extra;
            if (ss >> extra) throw parse_error(path, lineno, "trailing tokens after vertex");
            ls.vertices.push_back(v);
        } else if (tag == "l") {
            std::vector<uint32_t> run;
            long long idx;
            while (ss >> idx) {
                if (idx < 1 || static_cast<size_t>(idx) > ls.vertices.size())
                    throw parse_error(path, lineno, "vertex index out of range");
                run.push_back(static_cast<uint32_t>(idx - 1));
            }
            if (!ss.eof()) throw parse_error(path, lineno, "non-numeric polyline index");
            if (run.size() < 2) throw parse_error(path, lineno, "polyline needs >= 2 indices");
            ls.polylines.push_back(std::move(run));
        } else {
            throw parse_error(path, lineno, "unknown record type '" + tag + "'");
        }
    }
    return ls;
}

void save_lineset(const LineSet& ls, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_lineset: cannot open " + path);
    out.precision(9);
    for (const auto& v : ls.vertices)
        out << "v " << v.position.x() << " " << v.position.y() << " " << v.position.z() << " "
            << v.attribute << "\n";
    for (const auto& run : ls.polylines) {
        out << "l";
        for (uint32_t idx : run) out << " " << idx + 1;
        out << "\n";
    }
    if (!out) throw std::runtime_error("save_lineset: write failed for " + path);
}

// mt19937_64 plus an explicit bits-to-double mapping keeps the generated
// sets byte-identical across standard libraries.
namespace {

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) {
        double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

private:
    std::mt19937_64 eng_;
};

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

LineSet synth_grid_rods(Rng&, int n_lines, int n_verts) {
    LineSet ls;
    int per_side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_lines))));
    for (int i = 0; i < n_lines; ++i) {
        int gy = i % per_side;
        int gz = i / per_side;
        float y = per_side == 1 ? 0.0f : -0.5f + static_cast<float>(gy) / (per_side - 1);
        float z = per_side == 1 ? 0.0f : -0.5f + static_cast<float>(gz) / (per_side - 1);
        float attr = n_lines == 1 ? 0.5f : static_cast<float>(i) / (n_lines - 1);
        std::vector<uint32_t> run;
        for (int k = 0; k < n_verts; ++k) {
            float s = static_cast<float>(k) / (n_verts - 1);
            run.push_back(static_cast<uint32_t>(ls.vertices.size()));
            ls.vertices.push_back({Vec3(-0.5f + s, y, z), attr});
        }
        ls.polylines.push_back(std::move(run));
    }
    return ls;
}

LineSet synth_helix_bundle(Rng& rng, int n_lines, int n_verts) {
    LineSet ls;
    for (int i = 0; i < n_lines; ++i) {
        double phase = rng.uniform(0.0, 2.0 * M_PI);
        double radius = rng.uniform(0.15, 0.5);
        double turns = rng.uniform(1.0, 3.0);
        double drift = rng.uniform(-0.08, 0.08);
        float attr_base = clamp01(rng.uniform(0.0, 1.0));
        std::vector<uint32_t> run;
        for (int k = 0; k < n_verts; ++k) {
            double s = static_cast<double>(k) / (n_verts - 1);
            double ang = phase + turns * 2.0 * M_PI * s;
            double r = radius + drift * s;
            Vec3 p(static_cast<float>(r * std::cos(ang)), static_cast<float>(r * std::sin(ang)),
                   static_cast<float>(s - 0.5));
            // Attribute sweeps along the helix so transfer ramps get exercised.
            float attr = clamp01(attr_base * 0.6 + 0.4 * s);
            run.push_back(static_cast<uint32_t>(ls.vertices.size()));
            ls.vertices.push_back({p, attr});
        }
        ls.polylines.push_back(std::move(run));
    }
    return ls;
}

// Steady analytic swirl with a vertical updraft; streamlines are integrated
// with fixed-step Euler so the result is reproducible.
Eigen::Vector3d vortex_velocity(const Eigen::Vector3d& p) {
    double r2 = p.x() * p.x() + p.y() * p.y();
    double swirl = 1.0 / (0.2 + r2);
    return {-p.y() * swirl, p.x() * swirl, 0.35 * std::exp(-2.0 * r2)};
}

LineSet synth_vortex_streamlines(Rng& rng, int n_lines, int n_verts) {
    LineSet ls;
    for (int i = 0; i < n_lines; ++i) {
        Eigen::Vector3d p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.45, 0.15));
        double step = 0.015;
        std::vector<uint32_t> run;
        for (int k = 0; k < n_verts; ++k) {
            Eigen::Vector3d vel = vortex_velocity(p);
            // Swirl speed peaks near the core, so fast lines become the
            // opaque features under the semi-transparent regime.
            float attr = clamp01(vel.norm() / 1.2);
            run.push_back(static_cast<uint32_t>(ls.vertices.size()));
            ls.vertices.push_back({p.cast<float>(), attr});
            p += step * vel.normalized();
        }
        ls.polylines.push_back(std::move(run));
    }
    return ls;
}

}  // namespace

LineSet synth_lineset(SynthKind kind, uint64_t seed, int n_lines, int n_verts) {
    if (n_lines < 1) throw std::invalid_argument("synth_lineset: n_lines must be >= 1");
    if (n_verts < 2) throw std::invalid_argument("synth_lineset: n_verts must be >= 2");
    Rng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<uint64_t>(kind) + 1);
    switch (kind) {
        case SynthKind::GridRods: return synth_grid_rods(rng, n_lines, n_verts);
        case SynthKind::HelixBundle: return synth_helix_bundle(rng, n_lines, n_verts);
        case SynthKind::VortexStreamlines: return synth_vortex_streamlines(rng, n_lines, n_verts);
    }
    throw std::logic_error("synth_lineset: unhandled kind");
}

TransferFunction TransferFunction::constant(const Vec4& rgba) {
    return TransferFunction{{{0.0f, rgba}, {1.0f, rgba}}};
}

void TransferFunction::validate() const {
    if (points.size() < 2) throw std::invalid_argument("transfer function needs >= 2 points");
    if (points.front().t != 0.0f || points.back().t != 1.0f)
        throw std::invalid_argument("transfer function must span t=0..1");
    for (size_t i = 0; i + 1 < points.size(); ++i)
        if (!(points[i].t < points[i + 1].t))
            throw std::invalid_argument("transfer function t values must strictly increase");
    for (const auto& cp : points)
        if ((cp.rgba.array() < 0.0f).any() || (cp.rgba.array() > 1.0f).any())
            throw std::invalid_argument("transfer function channels must lie in [0,1]");
}

Vec4 apply_transfer(const TransferFunction& tf, float attribute) {
    const auto& pts = tf.points;
    if (attribute <= pts.front().t) return pts.front().rgba;
    if (attribute >= pts.back().t) return pts.back().rgba;
    size_t hi = 1;
    while (pts[hi].t < attribute) ++hi;
    const auto& a = pts[hi - 1];
    const auto& b = pts[hi];
    float u = (attribute - a.t) / (b.t - a.t);
    return a.rgba + u * (b.rgba - a.rgba);
}

}  // namespace oitlab
