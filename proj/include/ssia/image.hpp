#pragma once

#include <cstdint>
#include <vector>

namespace ssia {

// Interleaved 3-channel float image, values in [0,1]. Also used for HSV
// content and for signed channel differences (then values may be negative).
struct ImageRGB {
    int h = 0, w = 0;
    std::vector<float> px;  // h*w*3, rgb interleaved

    ImageRGB() = default;
    ImageRGB(int h_, int w_) : h(h_), w(w_), px(static_cast<size_t>(h_) * w_ * 3, 0.f) {}

    float& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    float at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    bool same_shape(const ImageRGB& o) const { return h == o.h && w == o.w; }
};

// Per-pixel depth in meters, >= 0.
struct DepthMap {
    int h = 0, w = 0;
    std::vector<float> d;

    DepthMap() = default;
    DepthMap(int h_, int w_) : h(h_), w(w_), d(static_cast<size_t>(h_) * w_, 0.f) {}

    float& at(int y, int x) { return d[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return d[static_cast<size_t>(y) * w + x]; }
};

// Single-channel real grid (score maps, kernels, pooled differences).
struct Grid {
    int h = 0, w = 0;
    std::vector<float> v;

    Grid() = default;
    Grid(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.f) {}

    float& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> m;

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), m(static_cast<size_t>(h_) * w_, 0) {}

    uint8_t& at(int y, int x) { return m[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return m[static_cast<size_t>(y) * w + x]; }
    int count() const {
        int n = 0;
        for (uint8_t b : m) n += b != 0;
        return n;
    }
};

// Superpixel labeling: ids contiguous 0..n_labels-1, one id per pixel.
struct LabelMap {
    int h = 0, w = 0;
    int n_labels = 0;
    std::vector<int32_t> ids;

    LabelMap() = default;
    LabelMap(int h_, int w_) : h(h_), w(w_), ids(static_cast<size_t>(h_) * w_, 0) {}

    int32_t& at(int y, int x) { return ids[static_cast<size_t>(y) * w + x]; }
    int32_t at(int y, int x) const { return ids[static_cast<size_t>(y) * w + x]; }
};

// Hexcone HSV, all channels scaled to [0,1]. Gray pixels get h=0, s=0.
ImageRGB rgb_to_hsv(const ImageRGB& img);

// Single-pixel inverse (palette construction, heatmap rendering).
void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b);

// Componentwise difference a-b for s and v; hue uses the minimal circular
// difference (wrapped into [-0.5, 0.5], signed along the shorter arc).
ImageRGB hsv_diff(const ImageRGB& a, const ImageRGB& b);

// Block mean over factor x factor cells, per channel. Dimensions must divide.
ImageRGB mean_pool(const ImageRGB& img, int factor);
Grid mean_pool(const Grid& g, int factor);

// The fixed 5x5 filter exp(-u^2-v^2), u,v in [-2,2]. Deliberately unnormalized.
Grid gaussian_kernel5();

// Same-shape correlation with a 5x5 kernel, zero padding at borders.
// All kernels used here are symmetric, so correlation equals convolution.
Grid convolve5(const Grid& g, const Grid& kernel);

// Graph-based superpixel segmentation (Gaussian presmoothing, 8-connected
// color-distance edges, adaptive-threshold merging, min-size cleanup).
// Edge weights are computed on the 8-bit color scale, so k is comparable to
// the values commonly used for byte images.
LabelMap felzenszwalb(const ImageRGB& img, float k, float sigma, int min_size);

}  // namespace ssia
