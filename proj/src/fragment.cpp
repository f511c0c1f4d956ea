#include "oitlab/fragment.hpp"

#include <algorithm>

namespace oitlab {

DepthComplexity depth_complexity(const FragmentBuffer& fb) {
    DepthComplexity dc;
    dc.width = fb.width;
    dc.height = fb.height;
    dc.counts.resize(fb.pixels.size());
    for (size_t i = 0; i < fb.pixels.size(); ++i) {
        dc.counts[i] = static_cast<uint32_t>(fb.pixels[i].size());
        dc.total += dc.counts[i];
        dc.max_count = std::max(dc.max_count, dc.counts[i]);
    }
    return dc;
}

}  // namespace oitlab
