#include "ssia/panel.hpp"

#include <algorithm>
#include <cmath>

namespace ssia {

namespace {

constexpr int kSep = 2;

void blit(ImageRGB& panel, const ImageRGB& tile, int tile_index) {
    const int x0 = tile_index * (tile.w + kSep);
    for (int y = 0; y < tile.h; ++y)
        for (int x = 0; x < tile.w; ++x)
            for (int c = 0; c < 3; ++c) panel.at(y, x0 + x, c) = tile.at(y, x, c);
}

ImageRGB dimmed(const ImageRGB& input, float factor) {
    ImageRGB out = input;
    for (float& v : out.px) v *= factor;
    return out;
}

// Distinct overlay colors for instances.
void instance_color(int i, float& r, float& g, float& b) {
    hsv_to_rgb(std::fmod(0.13f + 0.41f * i, 1.f), 0.95f, 1.f, r, g, b);
}

void overlay_mask_cell(ImageRGB& tile, int cy, int cx, int factor, float r, float g, float b,
                       float alpha) {
    for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) {
            const int y = cy * factor + dy, x = cx * factor + dx;
            tile.at(y, x, 0) = (1 - alpha) * tile.at(y, x, 0) + alpha * r;
            tile.at(y, x, 1) = (1 - alpha) * tile.at(y, x, 1) + alpha * g;
            tile.at(y, x, 2) = (1 - alpha) * tile.at(y, x, 2) + alpha * b;
        }
}

void draw_dot(ImageRGB& tile, int cy, int cx, float r, float g, float b) {
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
            const int y = cy + dy, x = cx + dx;
            if (y < 0 || y >= tile.h || x < 0 || x >= tile.w) continue;
            tile.at(y, x, 0) = r;
            tile.at(y, x, 1) = g;
            tile.at(y, x, 2) = b;
        }
}

}  // namespace

ImageRGB render_panel(const PanelData& pd) {
    const ImageRGB& input = *pd.input;
    const int res = input.h;
    ImageRGB panel(res, 6 * res + 5 * kSep);

    blit(panel, input, 0);

    const int out_h = pd.out ? pd.out->s.h : 0;
    const int factor = out_h > 0 ? res / out_h : 1;
    const size_t plane = static_cast<size_t>(out_h) * out_h;

    // (b) score heatmap: brighter green = higher confidence
    {
        ImageRGB tile = dimmed(input, 0.25f);
        if (pd.out) {
            const float* s = pd.out->s.data() + pd.batch_index * plane;
            for (int y = 0; y < out_h; ++y)
                for (int x = 0; x < out_h; ++x) {
                    const float p = 1.f / (1.f + std::exp(-s[y * out_h + x]));
                    overlay_mask_cell(tile, y, x, factor, 0.1f, 1.f, 0.1f, 0.75f * p);
                }
        }
        blit(panel, tile, 1);
    }

    // (c) mass colormap at the argmax force class
    {
        ImageRGB tile = dimmed(input, 0.25f);
        if (pd.out) {
            const float* s = pd.out->s.data() + pd.batch_index * plane;
            const float* m = pd.out->m.data() + pd.batch_index * 3 * plane;
            for (int y = 0; y < out_h; ++y)
                for (int x = 0; x < out_h; ++x) {
                    const size_t i = static_cast<size_t>(y) * out_h + x;
                    int cls = 0;
                    for (int c = 1; c < 3; ++c)
                        if (m[c * plane + i] > m[cls * plane + i]) cls = c;
                    const float p = 1.f / (1.f + std::exp(-s[i]));
                    overlay_mask_cell(tile, y, x, factor, cls == 0, cls == 1, cls == 2, 0.75f * p);
                }
        }
        blit(panel, tile, 2);
    }

    // (d) instance proposals + seed dots
    {
        ImageRGB tile = dimmed(input, 0.45f);
        if (pd.proposals) {
            for (size_t i = 0; i < pd.proposals->size(); ++i) {
                const ActionProposal& p = (*pd.proposals)[i];
                float r, g, b;
                instance_color(static_cast<int>(i), r, g, b);
                for (int y = 0; y < p.mask.h; ++y)
                    for (int x = 0; x < p.mask.w; ++x)
                        if (p.mask.at(y, x)) overlay_mask_cell(tile, y, x, factor, r, g, b, 0.55f);
            }
            for (size_t i = 0; i < pd.proposals->size(); ++i) {
                const ActionProposal& p = (*pd.proposals)[i];
                draw_dot(tile, p.iv, p.iu, 1.f, 1.f, 1.f);
            }
        }
        blit(panel, tile, 3);
    }

    // (e) reachable ground truth at input resolution
    {
        ImageRGB tile = dimmed(input, 0.45f);
        if (pd.gts) {
            int k = 0;
            for (const GroundTruthInstance& gt : *pd.gts) {
                if (!gt.reachable) continue;
                float r, g, b;
                instance_color(k++, r, g, b);
                for (int y = 0; y < gt.mask.h; ++y)
                    for (int x = 0; x < gt.mask.w; ++x)
                        if (gt.mask.at(y, x)) {
                            tile.at(y, x, 0) = 0.45f * tile.at(y, x, 0) + 0.55f * r;
                            tile.at(y, x, 1) = 0.45f * tile.at(y, x, 1) + 0.55f * g;
                            tile.at(y, x, 2) = 0.45f * tile.at(y, x, 2) + 0.55f * b;
                        }
            }
        }
        blit(panel, tile, 4);
    }

    // (f) self-supervision masks
    {
        ImageRGB tile = dimmed(input, 0.45f);
        if (pd.selfsup_masks) {
            int k = 0;
            for (const BinaryMask* m : *pd.selfsup_masks) {
                if (!m) continue;
                float r, g, b;
                instance_color(k++, r, g, b);
                const int f = m->h > 0 ? res / m->h : 1;
                for (int y = 0; y < m->h; ++y)
                    for (int x = 0; x < m->w; ++x)
                        if (m->at(y, x)) overlay_mask_cell(tile, y, x, f, r, g, b, 0.55f);
            }
        }
        blit(panel, tile, 5);
    }

    return panel;
}

}  // namespace ssia
