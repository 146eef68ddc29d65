#pragma once

#include "ssia/image.hpp"

namespace ssia {

// Threshold on the pooled squared HSV difference for the raw change mask.
constexpr float kChangeThreshold = 0.01f;
// Minimum kernel-weighted mask mass around the interaction point for an
// interaction to count as successful.
constexpr float kSuccessThreshold = 1.5f;
// A superpixel joins B+ when at least this fraction of it is covered by B.
constexpr float kSuperpixelOverlap = 0.25f;

struct SupervisionResult {
    BinaryMask B;       // raw change mask, output resolution
    BinaryMask Bplus;   // superpixel-aligned mask, output resolution
    bool successful = false;
};

struct SelfSupParams {
    float felz_k = 300.f;
    float felz_sigma = 0.8f;
    int felz_min_size = 60;
    bool use_superpixels = true;  // off: B+ := B (ablation)
};

// B = 1(|pooled hsv_diff|^2 > 0.01) at 1/3 the input resolution.
BinaryMask change_mask(const ImageRGB& before, const ImageRGB& after);

// Superpixels live at full resolution: B is upsampled 3x nearest-neighbor,
// each superpixel covered >= 25% joins, and the union is majority-pooled
// back down (a cell is set when >= 5 of its 9 pixels are).
BinaryMask align_superpixels(const BinaryMask& B, const LabelMap& superpixels);

// Kernel-weighted sum of B+ over the 5x5 neighborhood of the point
// (zero outside bounds) compared against the 1.5 threshold.
bool success_test(const BinaryMask& Bplus, int u, int v);

// Full pipeline for one before/after pair. Superpixels are computed on
// `before` unless a precomputed label map is supplied (the trainer passes the
// superpixels of the location's first view).
SupervisionResult supervise(const ImageRGB& before, const ImageRGB& after, int u, int v,
                            const SelfSupParams& params, const LabelMap* superpixels = nullptr);

}  // namespace ssia
