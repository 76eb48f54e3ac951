#pragma once

// Small generators shared by the unit tests.

#include <cstdint>

#include "mapsight/gridmap.hpp"
#include "mapsight/rng.hpp"

namespace mapsight::testing {

inline RgbImage random_image(Rng& rng, int w, int h) {
    RgbImage img(w, h);
    for (auto& p : img.pixels()) {
        p = {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
             static_cast<std::uint8_t>(rng.below(256))};
    }
    return img;
}

inline SemanticGrid random_grid(Rng& rng, int w, int h, const Colormap& cmap) {
    std::vector<Label> labels(static_cast<std::size_t>(w) * h);
    for (auto& l : labels) l = static_cast<Label>(rng.below(cmap.size()));
    return SemanticGrid(w, h, cmap, std::move(labels));
}

/// Random patch mask with at least one visible patch.
inline PatchMask random_mask(Rng& rng, int per_side, int patch = kDefaultPatch) {
    PatchMask m(per_side, patch, false);
    const double p = rng.uniform();
    for (int r = 0; r < per_side; ++r) {
        for (int c = 0; c < per_side; ++c) m.set_visible(r, c, rng.bernoulli(p));
    }
    if (m.visible_count() == 0) m.set_visible(static_cast<int>(rng.below(per_side)), static_cast<int>(rng.below(per_side)), true);
    return m;
}

}  // namespace mapsight::testing
