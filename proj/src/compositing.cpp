#include "oitlab/compositing.hpp"

#include "oitlab/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oitlab {

Vec4 composite_front_to_back(std::span<const Fragment> sorted, const Vec3& background) {
#ifndef NDEBUG
    for (size_t i = 0; i + 1 < sorted.size(); ++i)
        assert(!(sort_key(sorted[i + 1]) < sort_key(sorted[i])) &&
               "composite_front_to_back: input not sorted");
#endif
    Vec3 color = Vec3::Zero();
    float transmittance = 1.0f;
    for (const Fragment& f : sorted) {
        color += transmittance * f.alpha * f.color;
        transmittance *= 1.0f - f.alpha;
    }
    color += transmittance * background;
    Vec4 out;
    out.head<3>() = color;
    out.w() = 1.0f - transmittance;
    return out;
}

Sorter parse_sorter(const std::string& name) {
    if (name == "insertion") return Sorter::Insertion;
    if (name == "shell") return Sorter::Shell;
    if (name == "heap") return Sorter::Heap;
    throw std::invalid_argument("unknown sorter: " + name);
}

size_t sort_insertion(std::vector<Fragment>& frags) {
    size_t comparisons = 0;
    for (size_t i = 1; i < frags.size(); ++i) {
        Fragment key = frags[i];
        SortKey k = sort_key(key);
        size_t j = i;
        while (j > 0) {
            ++comparisons;
            if (!(k < sort_key(frags[j - 1]))) break;
            frags[j] = frags[j - 1];
            --j;
        }
        frags[j] = key;
    }
    return comparisons;
}

size_t sort_shell(std::vector<Fragment>& frags) {
    static constexpr size_t kGaps[] = {24, 9, 4, 1};
    size_t comparisons = 0;
    size_t n = frags.size();
    for (size_t gap : kGaps) {
        if (gap >= n) continue;
        for (size_t i = gap; i < n; ++i) {
            Fragment key = frags[i];
            SortKey k = sort_key(key);
            size_t j = i;
            while (j >= gap) {
                ++comparisons;
                if (!(k < sort_key(frags[j - gap]))) break;
                frags[j] = frags[j - gap];
                j -= gap;
            }
            frags[j] = key;
        }
    }
    return comparisons;
}

void FragmentMinHeap::push(const Fragment& f) {
    items_.push_back(f);
    sift_up(items_.size() - 1);
}

Fragment FragmentMinHeap::pop_min() {
    assert(!items_.empty());
    Fragment top = items_.front();
    items_.front() = items_.back();
    items_.pop_back();
    if (!items_.empty()) sift_down(0);
    return top;
}

void FragmentMinHeap::sift_up(size_t i) {
    while (i > 0) {
        size_t parent = (i - 1) / 2;
        if (!less(i, parent)) break;
        std::swap(items_[i], items_[parent]);
        i = parent;
    }
}

void FragmentMinHeap::sift_down(size_t i) {
    size_t n = items_.size();
    for (;;) {
        size_t left = 2 * i + 1;
        size_t right = left + 1;
        if (left >= n) break;
        size_t child = left;
        if (right < n && less(right, left)) child = right;
        if (!less(child, i)) break;
        std::swap(items_[i], items_[child]);
        i = child;
    }
}

size_t sort_heap(std::vector<Fragment>& frags) {
    FragmentMinHeap heap;
    for (const Fragment& f : frags) heap.push(f);
    for (size_t i = 0; i < frags.size(); ++i) frags[i] = heap.pop_min();
    return heap.comparisons();
}

Framebuffer render_fragment_lists(const FragmentBuffer& fb, const Vec3& background, Sorter sorter,
                                  CompositeStats* stats) {
    Framebuffer out(fb.width, fb.height, background);
    std::vector<size_t> row_comparisons(fb.height, 0);
    parallel_for(fb.height, [&](int y) {
        size_t comparisons = 0;
        std::vector<Fragment> scratch;
        for (size_t i = static_cast<size_t>(y) * fb.width; i < static_cast<size_t>(y + 1) * fb.width;
             ++i) {
            scratch = fb.pixels[i];
            switch (sorter) {
                case Sorter::Insertion: comparisons += sort_insertion(scratch); break;
                case Sorter::Shell: comparisons += sort_shell(scratch); break;
                case Sorter::Heap: comparisons += sort_heap(scratch); break;
            }
            Vec4 resolved = composite_front_to_back(scratch, background);
            out.color.pixels[i] = resolved.head<3>();
            out.alpha[i] = resolved.w();
        }
        row_comparisons[y] = comparisons;
    });
    if (stats)
        for (size_t c : row_comparisons) stats->comparisons += c;
    return out;
}

void pack_fragment_colors(FragmentBuffer& fb) {
    auto q8 = [](float v) {
        return std::floor(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f) / 255.0f;
    };
    for (auto& px : fb.pixels) {
        for (Fragment& f : px) {
            f.color = Vec3(q8(f.color.x()), q8(f.color.y()), q8(f.color.z()));
            f.alpha = q8(f.alpha);
        }
    }
}

Framebuffer depth_peel_fragments(const FragmentBuffer& fb, const Vec3& background,
                                 CompositeStats* stats, int max_passes) {
    size_t npix = fb.pixels.size();
    std::vector<SortKey> prev_key(npix, SortKey{-std::numeric_limits<float>::infinity(), 0});
    std::vector<Vec3> accum(npix, Vec3::Zero());
    std::vector<float> transmittance(npix, 1.0f);

    int passes = 0;
    size_t total_peeled = 0;
    std::vector<size_t> row_peeled(fb.height, 0);
    std::vector<char> exhausted(npix, 0);  // prev_key only grows; misses are final
    for (;;) {
        ++passes;
        parallel_for(fb.height, [&](int y) {
            size_t peeled = 0;
            for (size_t i = static_cast<size_t>(y) * fb.width;
                 i < static_cast<size_t>(y + 1) * fb.width; ++i) {
                if (exhausted[i]) continue;
                // Second depth test: nearest fragment strictly behind the
                // previous pass's stored key.
                const Fragment* best = nullptr;
                SortKey best_key{};
                for (const Fragment& f : fb.pixels[i]) {
                    SortKey k = sort_key(f);
                    if (prev_key[i] < k && (!best || k < best_key)) {
                        best = &f;
                        best_key = k;
                    }
                }
                if (!best) {
                    exhausted[i] = 1;
                    continue;
                }
                ++peeled;
                prev_key[i] = best_key;
                accum[i] += transmittance[i] * best->alpha * best->color;
                transmittance[i] *= 1.0f - best->alpha;
            }
            row_peeled[y] = peeled;
        });
        size_t peeled = 0;
        for (size_t p : row_peeled) peeled += p;
        total_peeled += peeled;
        if (peeled == 0) break;
        if (max_passes > 0 && passes >= max_passes) break;
    }

    Framebuffer out(fb.width, fb.height, background);
    for (size_t i = 0; i < npix; ++i) {
        out.color.pixels[i] = accum[i] + transmittance[i] * background;
        out.alpha[i] = 1.0f - transmittance[i];
    }
    if (stats) {
        stats->peel_passes = passes;
        stats->peeled_fragments = total_peeled;
    }
    return out;
}

Framebuffer depth_peel(const TriMesh& mesh, const Camera& camera, const TransferFunction& tf,
                       const Vec3& background, CompositeStats* stats,
                       const ShadingParams& shading, int max_passes) {
    FragmentBuffer fb = rasterize(mesh, camera, tf, shading);
    return depth_peel_fragments(fb, background, stats, max_passes);
}

}  // namespace oitlab
