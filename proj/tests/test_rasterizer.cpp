#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oitlab/compositing.hpp"
#include "oitlab/rasterizer.hpp"
#include "oitlab/tube_mesh.hpp"

using namespace oitlab;

namespace {

// Shading that passes the base color through unchanged.
const ShadingParams kFlat{1.0f, 0.0f, 0.0f, 1.0f};

Camera test_camera(int w = 64, int h = 48) {
    Camera cam;
    cam.eye = Vec3(0, 0, 0);
    cam.look_at = Vec3(0, 0, 1);
    cam.up = Vec3(0, 1, 0);
    cam.near = 0.1f;
    cam.far = 10.0f;
    cam.width = w;
    cam.height = h;
    return cam;
}

// Single triangle at view depth z spanning [-extent, extent]^2.
void add_triangle(TriMesh& mesh, float z, float extent, float attribute) {
    uint32_t base = static_cast<uint32_t>(mesh.positions.size());
    mesh.positions.push_back(Vec3(-extent, -extent, z));
    mesh.positions.push_back(Vec3(3 * extent, -extent, z));
    mesh.positions.push_back(Vec3(-extent, 3 * extent, z));
    for (int i = 0; i < 3; ++i) {
        mesh.normals.push_back(Vec3(0, 0, -1));
        mesh.attributes.push_back(attribute);
    }
    mesh.triangles.push_back({base, base + 1, base + 2});
}

}  // namespace

TEST_CASE("full-viewport triangle covers every pixel exactly once") {
    Camera cam = test_camera();
    TriMesh mesh;
    add_triangle(mesh, 1.0f, 20.0f, 0.5f);
    FragmentBuffer fb = rasterize(mesh, cam, TransferFunction::constant(Vec4(1, 0, 0, 1)), kFlat);
    CHECK(fb.total == static_cast<size_t>(cam.width) * cam.height);
    for (const auto& px : fb.pixels) {
        REQUIRE(px.size() == 1);
        CHECK(px[0].z == doctest::Approx(1.0f).epsilon(1e-4));
        CHECK(px[0].color == Vec3(1, 0, 0));
        CHECK(px[0].alpha == 1.0f);
    }
}

TEST_CASE("stacked triangles preserve submission order per pixel") {
    Camera cam = test_camera();
    TriMesh mesh;
    add_triangle(mesh, 2.0f, 30.0f, 0.5f);  // submitted first but farther
    add_triangle(mesh, 1.0f, 20.0f, 0.5f);
    FragmentBuffer fb = rasterize(mesh, cam, TransferFunction::constant(Vec4(1, 1, 1, 0.5f)), kFlat);
    for (const auto& px : fb.pixels) {
        REQUIRE(px.size() == 2);
        CHECK(px[0].submission == 0);
        CHECK(px[1].submission == 1);
        CHECK(px[0].z > px[1].z);  // submission order, not depth order
    }
}

TEST_CASE("geometry behind the far plane produces no fragments") {
    Camera cam = test_camera();
    TriMesh mesh;
    add_triangle(mesh, 50.0f, 100.0f, 0.5f);
    FragmentBuffer fb = rasterize(mesh, cam, TransferFunction::constant(Vec4::Ones()), kFlat);
    CHECK(fb.total == 0);

    TriMesh behind;
    add_triangle(behind, -1.0f, 5.0f, 0.5f);  // behind the eye
    CHECK(rasterize(behind, cam, TransferFunction::constant(Vec4::Ones()), kFlat).total == 0);
}

TEST_CASE("shade_fragment formula") {
    Vec4 base(0.6f, 0.4f, 0.2f, 0.37f);
    SUBCASE("grazing normal with no ambient goes black, alpha untouched") {
        ShadingParams p{0.0f, 0.8f, 0.0f, 16.0f};
        Vec4 out = shade_fragment(base, Vec3(1, 0, 0), Vec3(0, 0, 1), p);
        CHECK(out.head<3>() == Vec3(0, 0, 0));
        CHECK(out.w() == base.w());
    }
    SUBCASE("head-on normal reproduces the base color when ka + kd = 1") {
        ShadingParams p{0.2f, 0.8f, 0.0f, 16.0f};
        Vec4 out = shade_fragment(base, Vec3(0, 0, 1), Vec3(0, 0, 1), p);
        CHECK(out.head<3>().isApprox(base.head<3>(), 1e-6f));
    }
    SUBCASE("back-facing normals light like front-facing ones") {
        ShadingParams p{0.0f, 1.0f, 0.0f, 16.0f};
        Vec4 front = shade_fragment(base, Vec3(0, 0, 1), Vec3(0, 0, 1), p);
        Vec4 back = shade_fragment(base, Vec3(0, 0, -1), Vec3(0, 0, 1), p);
        CHECK(front.head<3>() == back.head<3>());
    }
    SUBCASE("alpha is never altered") {
        for (float a : {0.0f, 0.25f, 1.0f}) {
            Vec4 b(0.5f, 0.5f, 0.5f, a);
            CHECK(shade_fragment(b, Vec3(0, 1, 0), Vec3(0, 0, 1)).w() == a);
        }
    }
}

TEST_CASE("depth_complexity matches the fragment buffer") {
    Camera cam = test_camera(32, 24);
    SUBCASE("empty buffer is all zeros") {
        FragmentBuffer fb(cam.width, cam.height);
        DepthComplexity dc = depth_complexity(fb);
        CHECK(dc.total == 0);
        CHECK(dc.max_count == 0);
        for (uint32_t c : dc.counts) CHECK(c == 0);
    }
    SUBCASE("stacked scene counts two everywhere") {
        TriMesh mesh;
        add_triangle(mesh, 1.0f, 20.0f, 0.5f);
        add_triangle(mesh, 2.0f, 30.0f, 0.5f);
        FragmentBuffer fb = rasterize(mesh, cam, TransferFunction::constant(Vec4::Ones()), kFlat);
        DepthComplexity dc = depth_complexity(fb);
        CHECK(dc.total == fb.total);
        CHECK(dc.max_count == 2);
        for (uint32_t c : dc.counts) CHECK(c == 2);
    }
}

TEST_CASE("fill convention: a quad split both ways covers identical pixels") {
    Camera cam = test_camera(97, 71);
    Vec3 c0(-0.437f, -0.291f, 1.0f), c1(0.513f, -0.308f, 1.0f);
    Vec3 c2(0.471f, 0.322f, 1.0f), c3(-0.449f, 0.287f, 1.0f);

    auto make_quad = [&](bool diag_a) {
        TriMesh mesh;
        for (const Vec3& p : {c0, c1, c2, c3}) {
            mesh.positions.push_back(p);
            mesh.normals.push_back(Vec3(0, 0, -1));
            mesh.attributes.push_back(0.5f);
        }
        if (diag_a) {
            mesh.triangles.push_back({0, 1, 2});
            mesh.triangles.push_back({0, 2, 3});
        } else {
            mesh.triangles.push_back({0, 1, 3});
            mesh.triangles.push_back({1, 2, 3});
        }
        return mesh;
    };

    TransferFunction tf = TransferFunction::constant(Vec4::Ones());
    FragmentBuffer fa = rasterize(make_quad(true), cam, tf, kFlat);
    FragmentBuffer fb = rasterize(make_quad(false), cam, tf, kFlat);
    CHECK(fa.total == fb.total);
    CHECK(fa.total > 0);
    for (size_t i = 0; i < fa.pixels.size(); ++i) {
        CHECK(fa.pixels[i].size() == fb.pixels[i].size());
        CHECK(fa.pixels[i].size() <= 1);  // shared diagonal must not double-cover
    }
}

TEST_CASE("rasterization is deterministic and submission-ordered") {
    LineSet ls = synth_lineset(SynthKind::HelixBundle, 2, 12, 16);
    TriMesh mesh = generate_tube_mesh(ls, 0.04f);
    Camera cam = frame_box(mesh.bounds(), Vec3(0.2f, -0.3f, 1.0f), 80, 60);
    TransferFunction tf = TransferFunction::constant(Vec4(0.8f, 0.7f, 0.2f, 0.5f));

    FragmentBuffer a = rasterize(mesh, cam, tf);
    FragmentBuffer b = rasterize(mesh, cam, tf);
    REQUIRE(a.total == b.total);
    CHECK(a.total > 0);
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        REQUIRE(a.pixels[i].size() == b.pixels[i].size());
        for (size_t k = 0; k < a.pixels[i].size(); ++k) {
            CHECK(a.pixels[i][k].z == b.pixels[i][k].z);
            CHECK(a.pixels[i][k].color == b.pixels[i][k].color);
            CHECK(a.pixels[i][k].submission == b.pixels[i][k].submission);
            if (k > 0) CHECK(a.pixels[i][k].submission > a.pixels[i][k - 1].submission);
        }
        CHECK(a.pixels[i].size() <= static_cast<size_t>(mesh.triangles.size()));
    }
}

TEST_CASE("opaque nearest-fragment-wins equals the sorted compositor") {
    LineSet ls = synth_lineset(SynthKind::GridRods, 1, 9, 4);
    TriMesh mesh = generate_tube_mesh(ls, 0.03f);
    Camera cam = frame_box(mesh.bounds(), Vec3(0.4f, -0.5f, 1.0f), 96, 64);
    TransferFunction tf = TransferFunction::constant(Vec4(0.9f, 0.3f, 0.1f, 1.0f));  // all opaque
    Vec3 bg(0.0f, 0.0f, 0.25f);

    FragmentBuffer fb = rasterize(mesh, cam, tf);
    Framebuffer sorted = render_fragment_lists(fb, bg, Sorter::Insertion);

    // Independent z-buffer pass: nearest fragment wins, ties by submission.
    for (size_t i = 0; i < fb.pixels.size(); ++i) {
        Vec3 zbuf = bg;
        SortKey best{std::numeric_limits<float>::infinity(), UINT32_MAX};
        for (const Fragment& f : fb.pixels[i]) {
            if (sort_key(f) < best) {
                best = sort_key(f);
                zbuf = f.color;
            }
        }
        CHECK((zbuf - sorted.color.pixels[i]).cwiseAbs().maxCoeff() <= 1e-6f);
    }
}
