#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oitlab/camera.hpp"
#include "oitlab/fragment.hpp"
#include "oitlab/rasterizer.hpp"

namespace oitlab {

/// Total order for fragment visibility: depth first, submission ordinal as
/// tiebreaker so equal-depth fragments blend deterministically.
struct SortKey {
    float z = 0.0f;
    uint32_t submission = 0;

    friend bool operator<(const SortKey& a, const SortKey& b) {
        if (a.z != b.z) return a.z < b.z;
        return a.submission < b.submission;
    }
    friend bool operator==(const SortKey& a, const SortKey& b) {
        return a.z == b.z && a.submission == b.submission;
    }
};

inline SortKey sort_key(const Fragment& f) { return {f.z, f.submission}; }

/// Front-to-back blend over a depth-sorted fragment run:
/// C += T * a_i * c_i, T *= (1 - a_i), then the background catches T.
/// Returns (color, 1 - T).
Vec4 composite_front_to_back(std::span<const Fragment> sorted, const Vec3& background);

enum class Sorter { Insertion, Shell, Heap };

Sorter parse_sorter(const std::string& name);

// Each sorter orders fragments ascending by SortKey and reports how many key
// comparisons it spent; the counter is part of the contract so speedups can
// be asserted machine-independently.
size_t sort_insertion(std::vector<Fragment>& frags);
size_t sort_shell(std::vector<Fragment>& frags);  // gap sequence 24, 9, 4, 1
size_t sort_heap(std::vector<Fragment>& frags);

/// Min-heap keyed by SortKey; exposed so the heap invariant can be audited.
class FragmentMinHeap {
public:
    void push(const Fragment& f);
    Fragment pop_min();
    bool empty() const { return items_.empty(); }
    size_t size() const { return items_.size(); }
    size_t comparisons() const { return comparisons_; }
    const std::vector<Fragment>& storage() const { return items_; }

private:
    void sift_up(size_t i);
    void sift_down(size_t i);
    bool less(size_t a, size_t b) {
        ++comparisons_;
        return sort_key(items_[a]) < sort_key(items_[b]);
    }

    std::vector<Fragment> items_;
    size_t comparisons_ = 0;
};

struct CompositeStats {
    size_t comparisons = 0;
    int peel_passes = 0;
    size_t peeled_fragments = 0;
};

/// Quantizes fragment colors and opacity to 8 bits per channel in place,
/// reproducing the packed 32-bit fragment storage used to cut memory.
void pack_fragment_colors(FragmentBuffer& fb);

/// Sorted per-pixel fragment-list compositing (the exact reference path).
Framebuffer render_fragment_lists(const FragmentBuffer& fb, const Vec3& background, Sorter sorter,
                                  CompositeStats* stats = nullptr);

// Multi-pass peeling: pass i blends, per pixel, the nearest fragment whose
// (z, submission) key is strictly greater than the key stored by pass i-1,
// and the loop runs until a pass yields no fragment anywhere (or max_passes,
// when positive; capped runs can miss deep opaque layers). The rasterized
// fragment streams are produced once and re-scanned each pass.
Framebuffer depth_peel(const TriMesh& mesh, const Camera& camera, const TransferFunction& tf,
                       const Vec3& background, CompositeStats* stats = nullptr,
                       const ShadingParams& shading = {}, int max_passes = 0);

/// Peeling core over an existing fragment buffer.
Framebuffer depth_peel_fragments(const FragmentBuffer& fb, const Vec3& background,
                                 CompositeStats* stats = nullptr, int max_passes = 0);

}  // namespace oitlab
