#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oitlab/fragment.hpp"

namespace oitlab {

/// One blending-array slot: accumulated premultiplied color, transmittance of
/// everything merged into the slot, and the depth it is filed under.
struct BlendLayer {
    Vec3 color = Vec3::Zero();  // premultiplied
    float transmittance = 1.0f;
    float depth = 0.0f;
};

inline BlendLayer to_layer(const Fragment& f) {
    return {f.alpha * f.color, 1.0f - f.alpha, f.z};
}

/// Front-to-back composition of two adjacent layers; keeps the front depth.
inline BlendLayer merge_layers(const BlendLayer& front, const BlendLayer& back) {
    return {front.color + front.transmittance * back.color,
            front.transmittance * back.transmittance, front.depth};
}

enum class MergePolicy {
    Deepest,    // merge the two deepest adjacent layers (default)
    MinDepthGap // merge the adjacent pair with the smallest depth gap
};

/// Fixed-capacity array of layers kept sorted ascending by depth.
class BlendArray {
public:
    explicit BlendArray(int capacity, MergePolicy policy = MergePolicy::Deepest);

    void insert(const Fragment& f);
    Vec4 resolve(const Vec3& background) const;

    int capacity() const { return capacity_; }
    size_t occupancy() const { return layers_.size(); }
    size_t merge_count() const { return merges_; }
    std::span<const BlendLayer> layers() const { return layers_; }

private:
    int capacity_;
    MergePolicy policy_;
    std::vector<BlendLayer> layers_;
    size_t merges_ = 0;
};

/// Depth interval boundaries for the two MLABDB buckets. A missing boundary
/// is represented by the far-plane sentinel.
struct BucketBounds {
    float z_min = 0.0f;  // depth of the nearest fragment with alpha >= tau_alpha
    float z_o = 0.0f;    // depth of the nearest fragment with alpha >= tau_o
};

struct MlabdbParams {
    float tau_alpha = 0.2f;
    float tau_o = 0.98f;
    int front_layers = 2;  // 1 or 2
    int back_layers = 4;   // 4 or 5
    MergePolicy policy = MergePolicy::Deepest;

    void validate() const;
};

/// First pass: scan the stream and find the bucket boundaries.
BucketBounds mlabdb_pass1(std::span<const Fragment> stream, float tau_alpha, float tau_o,
                          float far_plane);

/// Second pass: route fragments into the front bucket (z < z_min) or back
/// bucket (z_min <= z <= z_o), discard everything behind z_o, then blend the
/// buckets front-to-back over the background.
Vec4 mlabdb_pass2(std::span<const Fragment> stream, const BucketBounds& bounds, int n_front,
                  int n_back, const Vec3& background, MergePolicy policy = MergePolicy::Deepest,
                  size_t* merges = nullptr);

struct MlabStats {
    size_t merges = 0;
    size_t discarded = 0;
};

Framebuffer mlab_render(const FragmentBuffer& fb, int k, const Vec3& background,
                        MergePolicy policy = MergePolicy::Deepest, MlabStats* stats = nullptr);

Framebuffer mlabdb_render(const FragmentBuffer& fb, const MlabdbParams& params, float far_plane,
                          const Vec3& background, MlabStats* stats = nullptr);

}  // namespace oitlab
