#pragma once

#include <vector>

#include "ssia/actsel.hpp"
#include "ssia/image.hpp"
#include "ssia/net.hpp"
#include "ssia/world.hpp"

namespace ssia {

// Side-by-side qualitative composite, six tiles at input resolution:
// (a) input rgb, (b) interaction-score heatmap, (c) predicted mass colormap
// (red light / green medium / blue heavy, weighted by score confidence),
// (d) instance proposals with seed dots, (e) reachable ground truth,
// (f) self-supervision masks. Tiles without data render dimmed.
struct PanelData {
    const ImageRGB* input = nullptr;
    const UNet<float>::Out* out = nullptr;
    int batch_index = 0;
    const std::vector<ActionProposal>* proposals = nullptr;
    const std::vector<GroundTruthInstance>* gts = nullptr;
    const std::vector<const BinaryMask*>* selfsup_masks = nullptr;
};

ImageRGB render_panel(const PanelData& pd);

}  // namespace ssia
