#include "oitlab/mlab.hpp"

#include "oitlab/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace oitlab {

BlendArray::BlendArray(int capacity, MergePolicy policy) : capacity_(capacity), policy_(policy) {
    if (capacity < 1) throw std::invalid_argument("BlendArray: capacity must be >= 1");
    layers_.reserve(static_cast<size_t>(capacity) + 1);
}

void BlendArray::insert(const Fragment& f) {
    BlendLayer layer = to_layer(f);
    // Equal depths keep arrival order: insert after existing layers at the
    // same depth.
    auto pos = std::upper_bound(layers_.begin(), layers_.end(), layer.depth,
                                [](float z, const BlendLayer& l) { return z < l.depth; });
    layers_.insert(pos, layer);
    if (layers_.size() <= static_cast<size_t>(capacity_)) return;

    size_t i = layers_.size() - 2;  // deepest adjacent pair
    if (policy_ == MergePolicy::MinDepthGap) {
        float best = layers_[i + 1].depth - layers_[i].depth;
        for (size_t j = 0; j + 1 < layers_.size(); ++j) {
            float gap = layers_[j + 1].depth - layers_[j].depth;
            if (gap < best) {
                best = gap;
                i = j;
            }
        }
    }
    layers_[i] = merge_layers(layers_[i], layers_[i + 1]);
    layers_.erase(layers_.begin() + static_cast<ptrdiff_t>(i) + 1);
    ++merges_;
}

Vec4 BlendArray::resolve(const Vec3& background) const {
    Vec3 color = Vec3::Zero();
    float transmittance = 1.0f;
    for (const BlendLayer& l : layers_) {
        color += transmittance * l.color;
        transmittance *= l.transmittance;
    }
    color += transmittance * background;
    Vec4 out;
    out.head<3>() = color;
    out.w() = 1.0f - transmittance;
    return out;
}

void MlabdbParams::validate() const {
    if (front_layers != 1 && front_layers != 2)
        throw std::invalid_argument("mlabdb: front_layers must be 1 or 2");
    if (back_layers != 4 && back_layers != 5)
        throw std::invalid_argument("mlabdb: back_layers must be 4 or 5");
    if (tau_alpha < 0.0f || tau_alpha > 1.0f || tau_o < 0.0f || tau_o > 1.0f)
        throw std::invalid_argument("mlabdb: thresholds must lie in [0,1]");
}

BucketBounds mlabdb_pass1(std::span<const Fragment> stream, float tau_alpha, float tau_o,
                          float far_plane) {
    BucketBounds b{far_plane, far_plane};
    bool have_min = false, have_o = false;
    for (const Fragment& f : stream) {
        if (f.alpha >= tau_alpha && (!have_min || f.z < b.z_min)) {
            b.z_min = f.z;
            have_min = true;
        }
        if (f.alpha >= tau_o && (!have_o || f.z < b.z_o)) {
            b.z_o = f.z;
            have_o = true;
        }
    }
    return b;
}

Vec4 mlabdb_pass2(std::span<const Fragment> stream, const BucketBounds& bounds, int n_front,
                  int n_back, const Vec3& background, MergePolicy policy, size_t* merges) {
    BlendArray front(n_front, policy);
    BlendArray back(n_back, policy);
    for (const Fragment& f : stream) {
        if (f.z > bounds.z_o) continue;  // occluded by the first opaque fragment
        if (f.z < bounds.z_min)
            front.insert(f);
        else
            back.insert(f);
    }
    if (merges) *merges += front.merge_count() + back.merge_count();

    Vec3 color = Vec3::Zero();
    float transmittance = 1.0f;
    for (const BlendArray* bucket : {&front, &back}) {
        for (const BlendLayer& l : bucket->layers()) {
            color += transmittance * l.color;
            transmittance *= l.transmittance;
        }
    }
    color += transmittance * background;
    Vec4 out;
    out.head<3>() = color;
    out.w() = 1.0f - transmittance;
    return out;
}

Framebuffer mlab_render(const FragmentBuffer& fb, int k, const Vec3& background,
                        MergePolicy policy, MlabStats* stats) {
    Framebuffer out(fb.width, fb.height, background);
    std::vector<size_t> row_merges(fb.height, 0);
    parallel_for(fb.height, [&](int y) {
        size_t merges = 0;
        for (size_t i = static_cast<size_t>(y) * fb.width; i < static_cast<size_t>(y + 1) * fb.width;
             ++i) {
            BlendArray array(k, policy);
            for (const Fragment& f : fb.pixels[i]) array.insert(f);
            Vec4 resolved = array.resolve(background);
            out.color.pixels[i] = resolved.head<3>();
            out.alpha[i] = resolved.w();
            merges += array.merge_count();
        }
        row_merges[y] = merges;
    });
    if (stats)
        for (size_t m : row_merges) stats->merges += m;
    return out;
}

Framebuffer mlabdb_render(const FragmentBuffer& fb, const MlabdbParams& params, float far_plane,
                          const Vec3& background, MlabStats* stats) {
    params.validate();
    Framebuffer out(fb.width, fb.height, background);
    std::vector<MlabStats> row_stats(fb.height);
    parallel_for(fb.height, [&](int y) {
        MlabStats local;
        for (size_t i = static_cast<size_t>(y) * fb.width; i < static_cast<size_t>(y + 1) * fb.width;
             ++i) {
            const auto& stream = fb.pixels[i];
            BucketBounds bounds = mlabdb_pass1(stream, params.tau_alpha, params.tau_o, far_plane);
            for (const Fragment& f : stream)
                if (f.z > bounds.z_o) ++local.discarded;
            Vec4 resolved = mlabdb_pass2(stream, bounds, params.front_layers, params.back_layers,
                                         background, params.policy, &local.merges);
            out.color.pixels[i] = resolved.head<3>();
            out.alpha[i] = resolved.w();
        }
        row_stats[y] = local;
    });
    if (stats) {
        for (const MlabStats& r : row_stats) {
            stats->merges += r.merges;
            stats->discarded += r.discarded;
        }
    }
    return out;
}

}  // namespace oitlab
