#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "oitlab/compositing.hpp"
#include "oitlab/mlab.hpp"

using namespace oitlab;

namespace {

Fragment frag(float z, float alpha, Vec3 color, uint32_t submission) {
    return Fragment{z, color, alpha, submission};
}

Vec4 exact_resolve(std::vector<Fragment> stream, const Vec3& bg) {
    sort_insertion(stream);
    return composite_front_to_back(stream, bg);
}

}  // namespace

TEST_CASE("mlab insert converts fragments to layers") {
    BlendArray array(4);
    array.insert(frag(2.5f, 0.4f, Vec3(1.0f, 0.5f, 0.0f), 0));
    REQUIRE(array.occupancy() == 1);
    const BlendLayer& l = array.layers()[0];
    CHECK(l.color.isApprox(0.4f * Vec3(1.0f, 0.5f, 0.0f), 1e-6f));
    CHECK(l.transmittance == doctest::Approx(0.6f));
    CHECK(l.depth == 2.5f);
}

TEST_CASE("mlab overflow merges the two deepest adjacent layers") {
    BlendArray array(2);
    Vec3 c1(1, 0, 0), c2(0, 1, 0), c3(0, 0, 1);
    array.insert(frag(1.0f, 0.5f, c1, 0));
    array.insert(frag(2.0f, 0.5f, c2, 1));
    array.insert(frag(3.0f, 0.5f, c3, 2));
    REQUIRE(array.occupancy() == 2);
    CHECK(array.layers()[0].depth == 1.0f);
    CHECK(array.layers()[1].depth == 2.0f);  // merged layer keeps the front depth
    CHECK(array.layers()[1].transmittance == doctest::Approx(0.25f));
    Vec3 merged = 0.5f * c2 + 0.5f * (0.5f * c3);
    CHECK(array.layers()[1].color.isApprox(merged, 1e-6f));
    CHECK(array.merge_count() == 1);
}

TEST_CASE("mlab stays depth-sorted after every insert") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    BlendArray array(6);
    for (uint32_t i = 0; i < 200; ++i) {
        array.insert(frag(uni(rng) * 10.0f, uni(rng), Vec3(uni(rng), uni(rng), uni(rng)), i));
        auto layers = array.layers();
        CHECK(layers.size() <= 6);
        for (size_t k = 0; k + 1 < layers.size(); ++k)
            CHECK(layers[k].depth <= layers[k + 1].depth);
    }
}

TEST_CASE("mlab resolve") {
    Vec3 bg(0.2f, 0.3f, 0.4f);
    SUBCASE("empty array resolves to the background") {
        BlendArray array(8);
        Vec4 out = array.resolve(bg);
        CHECK(out.head<3>() == bg);
        CHECK(out.w() == 0.0f);
    }
    SUBCASE("at most k fragments in any order equal the exact compositor") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<float> uni(0.0f, 1.0f);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<Fragment> stream;
            size_t n = 1 + trial % 8;
            for (uint32_t i = 0; i < n; ++i)
                stream.push_back(
                    frag(uni(rng) * 5.0f, uni(rng), Vec3(uni(rng), uni(rng), uni(rng)), i));
            BlendArray array(8);
            for (const Fragment& f : stream) array.insert(f);
            CHECK(array.merge_count() == 0);
            Vec4 got = array.resolve(bg);
            Vec4 want = exact_resolve(stream, bg);
            CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-5f);
        }
    }
    SUBCASE("prefix transmittance never increases") {
        std::mt19937 rng(23);
        std::uniform_real_distribution<float> uni(0.0f, 1.0f);
        BlendArray array(8);
        for (uint32_t i = 0; i < 40; ++i)
            array.insert(frag(uni(rng) * 9.0f, uni(rng), Vec3::Ones(), i));
        float t = 1.0f;
        for (const BlendLayer& l : array.layers()) {
            float next = t * l.transmittance;
            CHECK(next <= t + 1e-7f);
            t = next;
        }
    }
}

TEST_CASE("min-gap merge policy collapses the closest pair instead") {
    // Depths 1, 1.1, 5 with k = 2: the deepest policy merges (1.1, 5), the
    // min-gap policy merges (1, 1.1).
    auto run = [](MergePolicy policy) {
        BlendArray array(2, policy);
        array.insert(frag(1.0f, 0.5f, Vec3(1, 0, 0), 0));
        array.insert(frag(1.1f, 0.5f, Vec3(0, 1, 0), 1));
        array.insert(frag(5.0f, 0.5f, Vec3(0, 0, 1), 2));
        return array;
    };
    BlendArray deepest = run(MergePolicy::Deepest);
    BlendArray min_gap = run(MergePolicy::MinDepthGap);
    REQUIRE(deepest.occupancy() == 2);
    REQUIRE(min_gap.occupancy() == 2);
    CHECK(deepest.layers()[1].depth == 1.1f);
    CHECK(min_gap.layers()[0].depth == 1.0f);
    CHECK(min_gap.layers()[1].depth == 5.0f);
    CHECK(min_gap.layers()[0].transmittance == doctest::Approx(0.25f));
    Vec3 merged_front = 0.5f * Vec3(1, 0, 0) + 0.5f * (0.5f * Vec3(0, 1, 0));
    CHECK(min_gap.layers()[0].color.isApprox(merged_front, 1e-6f));
}

TEST_CASE("mlab order sensitivity exists for equal-depth overflows") {
    // Three fragments, two at equal depth, k = 2: arrival order changes the
    // merge operands and therefore the result.
    Vec3 bg(0, 0, 0);
    Fragment a = frag(1.0f, 0.5f, Vec3(1, 0, 0), 0);
    Fragment b = frag(2.0f, 0.5f, Vec3(0, 1, 0), 1);
    Fragment c = frag(2.0f, 0.5f, Vec3(0, 0, 1), 2);

    auto run = [&](std::vector<Fragment> order) {
        BlendArray array(2);
        for (const Fragment& f : order) array.insert(f);
        return array.resolve(bg);
    };
    Vec4 abc = run({a, b, c});
    Vec4 acb = run({a, c, b});
    CHECK((abc - acb).cwiseAbs().maxCoeff() > 1e-3f);
}

TEST_CASE("mlabdb pass 1 finds the bucket bounds") {
    float far_plane = 100.0f;
    SUBCASE("thresholds pick the nearest qualifying fragments") {
        std::vector<Fragment> stream = {frag(1, 0.1f, Vec3::Ones(), 0),
                                        frag(2, 0.4f, Vec3::Ones(), 1),
                                        frag(3, 0.95f, Vec3::Ones(), 2)};
        BucketBounds b = mlabdb_pass1(stream, 0.3f, 0.9f, far_plane);
        CHECK(b.z_min == 2.0f);
        CHECK(b.z_o == 3.0f);
    }
    SUBCASE("no qualifying fragment leaves the far sentinel") {
        std::vector<Fragment> stream = {frag(1, 0.05f, Vec3::Ones(), 0)};
        BucketBounds b = mlabdb_pass1(stream, 0.3f, 0.9f, far_plane);
        CHECK(b.z_min == far_plane);
        CHECK(b.z_o == far_plane);
    }
    SUBCASE("all-opaque stream: both bounds at the nearest fragment") {
        std::vector<Fragment> stream = {frag(4, 1.0f, Vec3::Ones(), 0),
                                        frag(2, 1.0f, Vec3::Ones(), 1),
                                        frag(7, 1.0f, Vec3::Ones(), 2)};
        BucketBounds b = mlabdb_pass1(stream, 0.3f, 0.9f, far_plane);
        CHECK(b.z_min == 2.0f);
        CHECK(b.z_o == 2.0f);
    }
}

namespace {

// Submission-order stream mimicking an opaque shell drawn after the interior:
// hidden transparents (reversed depth), context transparents (reversed
// depth), then the opaque fragment in between them in depth.
std::vector<Fragment> adversarial_stream() {
    std::vector<Fragment> s;
    uint32_t sub = 0;
    for (int z = 16; z >= 11; --z)
        s.push_back(frag(static_cast<float>(z), 0.45f, Vec3(1, 0, 0), sub++));  // hidden
    for (int z = 9; z >= 4; --z)
        s.push_back(frag(static_cast<float>(z), 0.45f, Vec3(0, 0, 1), sub++));  // context
    s.push_back(frag(10.0f, 1.0f, Vec3(1, 1, 0), sub++));                       // opaque shell
    return s;
}

}  // namespace

TEST_CASE("mlabdb fixes the reversed-order reveal that breaks mlab") {
    Vec3 bg(1, 1, 1);
    std::vector<Fragment> stream = adversarial_stream();
    Vec4 exact = exact_resolve(stream, bg);

    BucketBounds bounds = mlabdb_pass1(stream, 0.2f, 0.98f, 100.0f);
    CHECK(bounds.z_o == 10.0f);
    Vec4 db = mlabdb_pass2(stream, bounds, 2, 4, bg);
    CHECK((db - exact).cwiseAbs().maxCoeff() <= 1e-5f);

    BlendArray mlab(6);
    for (const Fragment& f : stream) mlab.insert(f);
    Vec4 plain = mlab.resolve(bg);
    CHECK((plain - exact).cwiseAbs().maxCoeff() > 1e-2f);  // hidden red leaks through
}

TEST_CASE("mlabdb discards fragments behind z_o bit-identically") {
    Vec3 bg(0.5f, 0.5f, 0.5f);
    std::vector<Fragment> stream = adversarial_stream();
    BucketBounds bounds = mlabdb_pass1(stream, 0.2f, 0.98f, 100.0f);

    Vec4 base = mlabdb_pass2(stream, bounds, 2, 4, bg);

    std::vector<Fragment> extended = stream;
    extended.push_back(frag(12.5f, 0.9f, Vec3(0, 1, 0), 99));
    extended.push_back(frag(55.0f, 0.3f, Vec3(1, 0, 1), 100));
    BucketBounds bounds2 = mlabdb_pass1(extended, 0.2f, 0.98f, 100.0f);
    CHECK(bounds2.z_min == bounds.z_min);
    CHECK(bounds2.z_o == bounds.z_o);
    Vec4 ext = mlabdb_pass2(extended, bounds2, 2, 4, bg);
    CHECK(memcmp(ext.data(), base.data(), sizeof(Vec4)) == 0);

    SUBCASE("permuting the discarded tail changes nothing") {
        std::vector<Fragment> permuted = stream;
        permuted.insert(permuted.begin(), frag(55.0f, 0.3f, Vec3(1, 0, 1), 100));
        permuted.insert(permuted.begin() + 4, frag(12.5f, 0.9f, Vec3(0, 1, 0), 99));
        Vec4 perm = mlabdb_pass2(permuted, mlabdb_pass1(permuted, 0.2f, 0.98f, 100.0f), 2, 4, bg);
        CHECK(memcmp(perm.data(), base.data(), sizeof(Vec4)) == 0);
    }
}

TEST_CASE("mlabdb equals the exact compositor when the nearest fragment is opaque") {
    Vec3 bg(0, 0, 0);
    std::mt19937 rng(31);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Fragment> stream;
        uint32_t sub = 0;
        for (int i = 0; i < 12; ++i)
            stream.push_back(frag(2.0f + 8.0f * uni(rng), 0.3f + 0.5f * uni(rng),
                                  Vec3(uni(rng), uni(rng), uni(rng)), sub++));
        stream.push_back(frag(1.0f, 1.0f, Vec3(uni(rng), uni(rng), uni(rng)), sub++));

        BucketBounds bounds = mlabdb_pass1(stream, 0.2f, 0.98f, 100.0f);
        Vec4 db = mlabdb_pass2(stream, bounds, 2, 4, bg);
        Vec4 exact = exact_resolve(stream, bg);
        CHECK((db - exact).cwiseAbs().maxCoeff() <= 1e-5f);
    }
}

TEST_CASE("mlabdb parameter validation") {
    MlabdbParams p;
    p.front_layers = 3;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.front_layers = 1;
    p.back_layers = 6;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.back_layers = 5;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("full-image mlab equals the exact image when depth complexity <= k") {
    LineSet ls = synth_lineset(SynthKind::GridRods, 3, 4, 2);
    TriMesh mesh = generate_tube_mesh(ls, 0.02f);
    Camera cam = frame_box(mesh.bounds(), Vec3(0.25f, -0.4f, 1.0f), 96, 64);
    TransferFunction tf = TransferFunction::constant(Vec4(0.8f, 0.5f, 0.3f, 0.6f));
    FragmentBuffer fb = rasterize(mesh, cam, tf);
    REQUIRE(depth_complexity(fb).max_count <= 8);
    REQUIRE(fb.total > 0);

    Vec3 bg(1, 1, 1);
    Framebuffer approx = mlab_render(fb, 8, bg);
    Framebuffer exact = render_fragment_lists(fb, bg, Sorter::Heap);
    CHECK(max_channel_diff(approx.color, exact.color) <= 1e-5f);
}
