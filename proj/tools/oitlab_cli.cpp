#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "oitlab/harness.hpp"
#include "oitlab/metrics.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Transparent line-set rendering lab"};
    app.require_subcommand(1);

    std::string config_path;
    auto* render = app.add_subcommand("render", "Render a configured scene along its flight path");
    render->add_option("--config", config_path, "Config file (key=value with [section] headers)")
        ->required();

    std::string ref_path, test_path;
    auto* metrics = app.add_subcommand("metrics", "Compare two images (PPM or PFM)");
    metrics->add_option("--ref", ref_path, "Reference image")->required();
    metrics->add_option("--test", test_path, "Test image")->required();

    std::string synth_kind = "helix-bundle", synth_out;
    uint64_t synth_seed = 0;
    int synth_lines = 100, synth_verts = 32;
    auto* synth = app.add_subcommand("synth", "Write a synthetic line-set file");
    synth->add_option("--kind", synth_kind, "helix-bundle | vortex-streamlines | grid-rods");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--lines", synth_lines, "Number of polylines");
    synth->add_option("--verts", synth_verts, "Vertices per polyline");
    synth->add_option("--out", synth_out, "Output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (render->parsed()) {
            std::string csv = oitlab::run(oitlab::parse_config(config_path));
            std::printf("wrote %s\n", csv.c_str());
        } else if (metrics->parsed()) {
            oitlab::Image ref = oitlab::read_image(ref_path);
            oitlab::Image test = oitlab::read_image(test_path);
            std::printf("psnr_db=%.4f ssim=%.6f\n", oitlab::psnr(test, ref),
                        oitlab::ssim(test, ref).mean);
        } else if (synth->parsed()) {
            oitlab::LineSet ls = oitlab::synth_lineset(oitlab::parse_synth_kind(synth_kind),
                                                       synth_seed, synth_lines, synth_verts);
            oitlab::save_lineset(ls, synth_out);
            std::printf("wrote %s (%zu polylines, %zu vertices)\n", synth_out.c_str(),
                        ls.polylines.size(), ls.vertices.size());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
