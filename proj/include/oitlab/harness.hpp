#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oitlab/camera.hpp"
#include "oitlab/lineset.hpp"
#include "oitlab/mboit.hpp"
#include "oitlab/mlab.hpp"
#include "oitlab/raytracer.hpp"

namespace oitlab {

/// Piecewise-linear camera flight through ordered keyframes.
struct FlightPath {
    struct Keyframe {
        Vec3 eye, look_at, up;
    };
    std::vector<Keyframe> keyframes;
    int frames_per_segment = 1;

    int total_frames() const {
        if (keyframes.size() < 2) return 1;
        return static_cast<int>(keyframes.size() - 1) * frames_per_segment + 1;
    }
};

/// Camera for one frame of the path; `proto` supplies fov, planes, viewport.
Camera interpolate_path(const FlightPath& path, int frame, const Camera& proto);

enum class Technique {
    DepthPeeling,
    LLInsertion,
    LLShell,
    LLHeap,
    Mlab,
    Mlabdb,
    Mboit,
    Vrc,
    Rt,
    RtAnalytic,
};

Technique parse_technique(const std::string& name);
std::string technique_name(Technique t);

// Transparency regimes: fully opaque lines, semi-transparent context with
// opaque features of interest, or constant low transparency (alpha <= 0.15).
TransferFunction make_regime_transfer(const std::string& regime);

struct RunConfig {
    // scene
    std::string scene_path;
    std::string scene_kind;
    uint64_t scene_seed = 0;
    int scene_lines = 100;
    int scene_verts = 32;
    float scene_radius = -1.0f;  // < 0: derived from the scene bounds

    std::string regime = "semi";
    std::vector<Technique> techniques;
    Technique reference = Technique::DepthPeeling;
    int viewport_width = 320;
    int viewport_height = 180;
    FlightPath path;  // empty keyframes: one auto-framed view

    std::string output_dir;
    bool write_pfm = false;
    bool write_depth_complexity = false;

    // per-technique parameters
    int mlab_k = 8;
    MergePolicy mlab_policy = MergePolicy::Deepest;
    MlabdbParams mlabdb;
    MboitParams mboit;
    int vrc_res = 64;
    int vrc_quant = 16;
    RtParams rt;

    Vec3 background = Vec3::Ones();

    void validate() const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Renders every frame with every configured technique and writes images plus
/// one CSV row per (frame, technique). Returns the CSV path.
std::string run(const RunConfig& config);

/// Fixed CSV header shared by run() and downstream tooling.
extern const char* const kCsvHeader;

}  // namespace oitlab
