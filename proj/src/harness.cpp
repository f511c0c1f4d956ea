#include "oitlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "oitlab/compositing.hpp"
#include "oitlab/metrics.hpp"
#include "oitlab/vrc.hpp"

namespace oitlab {

const char* const kCsvHeader =
    "frame,technique,wall_ms,fragments,psnr_db,ssim,aux_counter_1,aux_counter_2";

Camera interpolate_path(const FlightPath& path, int frame, const Camera& proto) {
    if (path.keyframes.empty()) throw std::invalid_argument("interpolate_path: empty path");
    if (frame < 0 || frame >= path.total_frames())
        throw std::out_of_range("interpolate_path: frame out of range");

    Camera cam = proto;
    if (path.keyframes.size() == 1) {
        cam.eye = path.keyframes[0].eye;
        cam.look_at = path.keyframes[0].look_at;
        cam.up = path.keyframes[0].up.normalized();
        return cam;
    }
    int seg = std::min(frame / path.frames_per_segment,
                       static_cast<int>(path.keyframes.size()) - 2);
    float u = static_cast<float>(frame - seg * path.frames_per_segment) /
              static_cast<float>(path.frames_per_segment);
    const auto& a = path.keyframes[seg];
    const auto& b = path.keyframes[seg + 1];
    cam.eye = a.eye + u * (b.eye - a.eye);
    cam.look_at = a.look_at + u * (b.look_at - a.look_at);
    cam.up = (a.up + u * (b.up - a.up)).normalized();
    return cam;
}

Technique parse_technique(const std::string& name) {
    if (name == "dp") return Technique::DepthPeeling;
    if (name == "ll-insertion") return Technique::LLInsertion;
    if (name == "ll-shell") return Technique::LLShell;
    if (name == "ll-heap") return Technique::LLHeap;
    if (name == "mlab") return Technique::Mlab;
    if (name == "mlabdb") return Technique::Mlabdb;
    if (name == "mboit") return Technique::Mboit;
    if (name == "vrc") return Technique::Vrc;
    if (name == "rt") return Technique::Rt;
    if (name == "rt-analytic") return Technique::RtAnalytic;
    throw std::invalid_argument("unknown technique: " + name);
}

std::string technique_name(Technique t) {
    switch (t) {
        case Technique::DepthPeeling: return "dp";
        case Technique::LLInsertion: return "ll-insertion";
        case Technique::LLShell: return "ll-shell";
        case Technique::LLHeap: return "ll-heap";
        case Technique::Mlab: return "mlab";
        case Technique::Mlabdb: return "mlabdb";
        case Technique::Mboit: return "mboit";
        case Technique::Vrc: return "vrc";
        case Technique::Rt: return "rt";
        case Technique::RtAnalytic: return "rt-analytic";
    }
    return "?";
}

TransferFunction make_regime_transfer(const std::string& regime) {
    // Cool-to-warm color ramp shared by all regimes.
    const Vec3 cool(0.231f, 0.298f, 0.753f);
    const Vec3 mid(0.865f, 0.865f, 0.865f);
    const Vec3 warm(0.706f, 0.016f, 0.150f);
    auto rgba = [](const Vec3& c, float a) { return Vec4(c.x(), c.y(), c.z(), a); };

    TransferFunction tf;
    if (regime == "opaque") {
        tf.points = {{0.0f, rgba(cool, 1.0f)}, {0.5f, rgba(mid, 1.0f)}, {1.0f, rgba(warm, 1.0f)}};
    } else if (regime == "semi") {
        // Transparent context, opaque features of interest at high attribute.
        tf.points = {{0.0f, rgba(cool, 0.06f)},
                     {0.6f, rgba(mid, 0.12f)},
                     {0.72f, rgba(warm * 0.9f + mid * 0.1f, 1.0f)},
                     {1.0f, rgba(warm, 1.0f)}};
    } else if (regime == "constant-low") {
        tf.points = {{0.0f, rgba(cool, 0.12f)}, {0.5f, rgba(mid, 0.12f)}, {1.0f, rgba(warm, 0.12f)}};
    } else {
        throw std::invalid_argument("unknown regime: " + regime);
    }
    tf.validate();
    return tf;
}

void RunConfig::validate() const {
    if (scene_path.empty() == scene_kind.empty())
        throw std::invalid_argument("config: exactly one of scene.path / scene.kind is required");
    if (techniques.empty()) throw std::invalid_argument("config: techniques must not be empty");
    if (viewport_width < 16 || viewport_height < 16)
        throw std::invalid_argument("config: viewport must be at least 16x16");
    if (output_dir.empty()) throw std::invalid_argument("config: output.dir is required");
    make_regime_transfer(regime);
    mlabdb.validate();
    if (mlab_k < 1) throw std::invalid_argument("config: mlab.k must be >= 1");
    if (vrc_res < 1 || vrc_quant < 1)
        throw std::invalid_argument("config: vrc.res and vrc.quant must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

Vec3 parse_vec3(const std::string& s, const std::string& key) {
    Vec3 v;
    char comma;
    std::istringstream ss(s);
    if (!(ss >> v.x() >> comma >> v.y() >> comma >> v.z()))
        throw std::invalid_argument("config: bad vector for key " + key + ": " + s);
    return v;
}

FlightPath::Keyframe parse_keyframe(const std::string& s, const std::string& key) {
    std::istringstream ss(s);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ';')) parts.push_back(trim(part));
    if (parts.size() != 3)
        throw std::invalid_argument("config: keyframe needs eye;lookat;up for key " + key);
    return {parse_vec3(parts[0], key), parse_vec3(parts[1], key), parse_vec3(parts[2], key)};
}

class KeyMap {
public:
    explicit KeyMap(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string take(const std::string& key, const std::string& fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::string v = it->second;
        kv_.erase(it);
        return v;
    }

    template <typename T>
    T take_num(const std::string& key, T fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::istringstream ss(it->second);
        T v{};
        if (!(ss >> v)) throw std::invalid_argument("config: bad value for key " + key);
        kv_.erase(it);
        return v;
    }

    bool take_bool(const std::string& key, bool fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::string v = it->second;
        kv_.erase(it);
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        throw std::invalid_argument("config: bad boolean for key " + key);
    }

    void require_empty() const {
        if (!kv_.empty())
            throw std::invalid_argument("config: unknown key " + kv_.begin()->first);
    }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument(origin + ": bad section header at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ": expected key=value at line " +
                                        std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        if (kv.count(key))
            throw std::invalid_argument(origin + ": duplicate key " + key);
        kv[key] = value;
    }

    KeyMap keys(std::move(kv));
    RunConfig cfg;
    cfg.scene_path = keys.take("scene.path", "");
    cfg.scene_kind = keys.take("scene.kind", "");
    cfg.scene_seed = keys.take_num<uint64_t>("scene.seed", 0);
    cfg.scene_lines = keys.take_num<int>("scene.lines", cfg.scene_lines);
    cfg.scene_verts = keys.take_num<int>("scene.verts", cfg.scene_verts);
    cfg.scene_radius = keys.take_num<float>("scene.radius", cfg.scene_radius);
    cfg.regime = keys.take("regime", cfg.regime);

    std::string tech = keys.take("techniques", "");
    if (!tech.empty()) {
        std::istringstream ts(tech);
        std::string name;
        while (std::getline(ts, name, ',')) cfg.techniques.push_back(parse_technique(trim(name)));
    }
    cfg.reference = parse_technique(keys.take("reference", "dp"));

    cfg.viewport_width = keys.take_num<int>("viewport.width", cfg.viewport_width);
    cfg.viewport_height = keys.take_num<int>("viewport.height", cfg.viewport_height);

    std::string keyframes = keys.take("path.keyframes", "");
    if (!keyframes.empty()) {
        std::istringstream ks(keyframes);
        std::string one;
        while (std::getline(ks, one, '|'))
            cfg.path.keyframes.push_back(parse_keyframe(trim(one), "path.keyframes"));
    }
    cfg.path.frames_per_segment = keys.take_num<int>("path.frames_per_segment", 1);
    if (cfg.path.frames_per_segment < 1)
        throw std::invalid_argument("config: path.frames_per_segment must be >= 1");

    cfg.output_dir = keys.take("output.dir", "");
    cfg.write_pfm = keys.take_bool("output.pfm", false);
    cfg.write_depth_complexity = keys.take_bool("output.depth_complexity", false);

    cfg.mlab_k = keys.take_num<int>("mlab.k", cfg.mlab_k);
    std::string policy = keys.take("mlab.policy", "deepest");
    if (policy == "deepest")
        cfg.mlab_policy = MergePolicy::Deepest;
    else if (policy == "min-gap")
        cfg.mlab_policy = MergePolicy::MinDepthGap;
    else
        throw std::invalid_argument("config: bad value for key mlab.policy");
    cfg.mlabdb.policy = cfg.mlab_policy;

    cfg.mlabdb.tau_alpha = keys.take_num<float>("mlabdb.tau_alpha", cfg.mlabdb.tau_alpha);
    cfg.mlabdb.tau_o = keys.take_num<float>("mlabdb.tau_o", cfg.mlabdb.tau_o);
    cfg.mlabdb.front_layers = keys.take_num<int>("mlabdb.front_layers", cfg.mlabdb.front_layers);
    cfg.mlabdb.back_layers = keys.take_num<int>("mlabdb.back_layers", cfg.mlabdb.back_layers);

    cfg.mboit.beta = keys.take_num<double>("mboit.beta", cfg.mboit.beta);
    cfg.mboit.bias = keys.take_num<double>("mboit.bias", cfg.mboit.bias);

    cfg.vrc_res = keys.take_num<int>("vrc.res", cfg.vrc_res);
    cfg.vrc_quant = keys.take_num<int>("vrc.quant", cfg.vrc_quant);

    cfg.rt.epsilon = keys.take_num<float>("rt.epsilon", cfg.rt.epsilon);
    cfg.rt.leaf_size = keys.take_num<int>("rt.leaf_size", cfg.rt.leaf_size);

    keys.require_empty();
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace {

struct TechniqueOutput {
    Framebuffer fb;
    size_t fragments = 0;
    size_t aux1 = 0;
    size_t aux2 = 0;
};

struct FrameContext {
    const RunConfig& cfg;
    const TriMesh& mesh;
    const LineSet& lines;
    float radius;
    const TransferFunction& tf;
    const Camera& camera;
    const FragmentBuffer* frags;  // shared rasterization, null if unused
    const Bvh* bvh;
    const VoxelGrid* grid;
};

TechniqueOutput render_technique(Technique t, const FrameContext& ctx) {
    TechniqueOutput out;
    const Vec3& bg = ctx.cfg.background;
    switch (t) {
        case Technique::DepthPeeling: {
            CompositeStats stats;
            out.fb = depth_peel_fragments(*ctx.frags, bg, &stats);
            out.fragments = ctx.frags->total;
            out.aux1 = static_cast<size_t>(stats.peel_passes);
            out.aux2 = depth_complexity(*ctx.frags).max_count;
            break;
        }
        case Technique::LLInsertion:
        case Technique::LLShell:
        case Technique::LLHeap: {
            Sorter sorter = t == Technique::LLInsertion ? Sorter::Insertion
                            : t == Technique::LLShell   ? Sorter::Shell
                                                        : Sorter::Heap;
            CompositeStats stats;
            out.fb = render_fragment_lists(*ctx.frags, bg, sorter, &stats);
            out.fragments = ctx.frags->total;
            out.aux1 = stats.comparisons;
            out.aux2 = depth_complexity(*ctx.frags).max_count;
            break;
        }
        case Technique::Mlab: {
            MlabStats stats;
            out.fb = mlab_render(*ctx.frags, ctx.cfg.mlab_k, bg, ctx.cfg.mlab_policy, &stats);
            out.fragments = ctx.frags->total;
            out.aux1 = stats.merges;
            break;
        }
        case Technique::Mlabdb: {
            MlabStats stats;
            out.fb = mlabdb_render(*ctx.frags, ctx.cfg.mlabdb, ctx.camera.far, bg, &stats);
            out.fragments = ctx.frags->total;
            out.aux1 = stats.merges;
            out.aux2 = stats.discarded;
            break;
        }
        case Technique::Mboit: {
            MboitStats stats;
            out.fb = mboit_render(*ctx.frags, bg, ctx.cfg.mboit, ctx.camera.near, ctx.camera.far,
                                  &stats);
            out.fragments = ctx.frags->total;
            out.aux1 = stats.hankel_fallbacks;
            out.aux2 = stats.depth_clamps;
            break;
        }
        case Technique::Vrc: {
            VrcStats stats;
            out.fb = vrc_render(*ctx.grid, ctx.radius, ctx.camera, ctx.tf, bg, &stats);
            out.fragments = stats.blended_hits;
            out.aux1 = stats.blended_hits;
            out.aux2 = stats.tube_tests;
            break;
        }
        case Technique::Rt: {
            RtStats stats;
            out.fb = raytrace_image(ctx.mesh, *ctx.bvh, ctx.camera, ctx.tf, bg, ctx.cfg.rt, &stats);
            out.fragments = stats.blended_hits;
            out.aux1 = stats.blended_hits;
            out.aux2 = stats.max_hits_per_ray;
            break;
        }
        case Technique::RtAnalytic: {
            RtStats stats;
            out.fb = raytrace_analytic(ctx.lines, ctx.radius, ctx.camera, ctx.tf, bg, ctx.cfg.rt,
                                       &stats);
            out.fragments = stats.blended_hits;
            out.aux1 = stats.blended_hits;
            out.aux2 = stats.max_hits_per_ray;
            break;
        }
    }
    return out;
}

bool needs_raster(Technique t) {
    switch (t) {
        case Technique::Vrc:
        case Technique::Rt:
        case Technique::RtAnalytic: return false;
        default: return true;
    }
}

void write_depth_complexity_map(const DepthComplexity& dc, const std::string& path) {
    Image img(dc.width, dc.height, Vec3::Zero());
    float scale = dc.max_count > 0 ? 1.0f / static_cast<float>(dc.max_count) : 0.0f;
    for (size_t i = 0; i < dc.counts.size(); ++i) {
        float v = dc.counts[i] * scale;  // black (0 fragments) to bright cyan (max)
        img.pixels[i] = Vec3(0.0f, v, v);
    }
    write_ppm(img, path);
}

}  // namespace

std::string run(const RunConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (!fs::is_directory(cfg.output_dir))
        throw std::runtime_error("run: cannot create output dir " + cfg.output_dir);

    LineSet lines = cfg.scene_path.empty()
                        ? synth_lineset(parse_synth_kind(cfg.scene_kind), cfg.scene_seed,
                                        cfg.scene_lines, cfg.scene_verts)
                        : load_lineset(cfg.scene_path);
    float diag = lines.bounds().diagonal().norm();
    float radius = cfg.scene_radius > 0.0f ? cfg.scene_radius : 0.012f * diag;
    TriMesh mesh = generate_tube_mesh(lines, radius);
    TransferFunction tf = make_regime_transfer(cfg.regime);

    bool any_raster = std::any_of(cfg.techniques.begin(), cfg.techniques.end(), needs_raster) ||
                      needs_raster(cfg.reference);
    bool any_rt = std::count(cfg.techniques.begin(), cfg.techniques.end(), Technique::Rt) > 0 ||
                  cfg.reference == Technique::Rt;
    bool any_vrc = std::count(cfg.techniques.begin(), cfg.techniques.end(), Technique::Vrc) > 0 ||
                   cfg.reference == Technique::Vrc;

    Bvh bvh;
    if (any_rt) bvh = build_bvh(mesh, cfg.rt.leaf_size);
    VoxelGrid grid;
    if (any_vrc)
        grid = voxelize_lines(lines, Eigen::Vector3i::Constant(cfg.vrc_res), cfg.vrc_quant);

    FlightPath path = cfg.path;
    Camera proto;
    proto.width = cfg.viewport_width;
    proto.height = cfg.viewport_height;
    if (path.keyframes.empty()) {
        Camera framed = frame_box(mesh.bounds(), Vec3(0.35f, -0.3f, 0.9f), cfg.viewport_width,
                                  cfg.viewport_height);
        proto = framed;
        path.keyframes.push_back({framed.eye, framed.look_at, framed.up});
    } else {
        Eigen::AlignedBox3f box = mesh.bounds();
        float r = std::max(box.diagonal().norm(), 1e-3f);
        float reach = 0.0f;
        for (const auto& kf : path.keyframes)
            reach = std::max(reach, (kf.eye - box.center()).norm());
        proto.near = std::max(1e-3f, 1e-3f * r);
        proto.far = reach + 2.0f * r;
    }

    std::string csv_path = cfg.output_dir + "/results.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("run: cannot write " + csv_path);
    csv << kCsvHeader << "\n";

    int frames = path.total_frames();
    for (int frame = 0; frame < frames; ++frame) {
        Camera camera = interpolate_path(path, frame, proto);
        camera.validate();

        FragmentBuffer frags;
        if (any_raster) frags = rasterize(mesh, camera, tf);

        FrameContext ctx{cfg, mesh, lines, radius, tf, camera, &frags, &bvh, &grid};

        // The reference image is rendered once per frame for the metric rows.
        TechniqueOutput ref = render_technique(cfg.reference, ctx);

        if (cfg.write_depth_complexity && any_raster) {
            char name[64];
            std::snprintf(name, sizeof(name), "frame_%04d_depth_complexity.ppm", frame);
            write_depth_complexity_map(depth_complexity(frags), cfg.output_dir + "/" + name);
        }

        for (Technique t : cfg.techniques) {
            auto t0 = std::chrono::steady_clock::now();
            TechniqueOutput out = t == cfg.reference ? ref : render_technique(t, ctx);
            auto t1 = std::chrono::steady_clock::now();
            double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

            char name[64];
            std::snprintf(name, sizeof(name), "frame_%04d_%s", frame, technique_name(t).c_str());
            write_ppm(out.fb.color, cfg.output_dir + "/" + name + std::string(".ppm"));
            if (cfg.write_pfm)
                write_pfm(out.fb.color, cfg.output_dir + "/" + name + std::string(".pfm"));

            double p = psnr(out.fb.color, ref.fb.color);
            double s = ssim(out.fb.color, ref.fb.color).mean;
            char row[256];
            std::snprintf(row, sizeof(row), "%d,%s,%.3f,%zu,%.4f,%.6f,%zu,%zu", frame,
                          technique_name(t).c_str(), wall_ms, out.fragments, p, s, out.aux1,
                          out.aux2);
            csv << row << "\n";
        }
    }
    csv.close();
    return csv_path;
}

}  // namespace oitlab
