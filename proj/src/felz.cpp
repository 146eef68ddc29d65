#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ssia/image.hpp"

namespace ssia {

namespace {

struct Edge {
    float w;
    int32_t a, b;
};

// Union-find with the adaptive merge threshold of graph-based segmentation.
struct Forest {
    std::vector<int32_t> parent;
    std::vector<int32_t> size;
    std::vector<float> thresh;  // Int(C) + k/|C|

    Forest(int n, float k) : parent(n), size(n, 1), thresh(n, k) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int32_t find(int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void join(int32_t a, int32_t b, float w, float k) {
        if (size[a] >= size[b]) {
            parent[b] = a;
            size[a] += size[b];
            thresh[a] = w + k / size[a];
        } else {
            parent[a] = b;
            size[b] += size[a];
            thresh[b] = w + k / size[b];
        }
    }
};

// Separable Gaussian presmoothing with replicated borders.
ImageRGB presmooth(const ImageRGB& img, float sigma) {
    if (sigma <= 0.f) return img;
    const int r = std::max(1, static_cast<int>(std::ceil(3.f * sigma)));
    std::vector<float> k(2 * r + 1);
    float sum = 0.f;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5f * i * i / (sigma * sigma));
        sum += k[i + r];
    }
    for (float& v : k) v /= sum;

    ImageRGB tmp(img.h, img.w), out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float s = 0.f;
                for (int i = -r; i <= r; ++i) {
                    const int xx = std::clamp(x + i, 0, img.w - 1);
                    s += k[i + r] * img.at(y, xx, c);
                }
                tmp.at(y, x, c) = s;
            }
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float s = 0.f;
                for (int i = -r; i <= r; ++i) {
                    const int yy = std::clamp(y + i, 0, img.h - 1);
                    s += k[i + r] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = s;
            }
    return out;
}

inline float color_dist(const ImageRGB& img, int a, int b) {
    float s = 0.f;
    for (int c = 0; c < 3; ++c) {
        const float d = (img.px[a * 3 + c] - img.px[b * 3 + c]) * 255.f;
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

LabelMap felzenszwalb(const ImageRGB& img, float k, float sigma, int min_size) {
    if (k <= 0.f || min_size < 1) throw std::invalid_argument("felzenszwalb: k > 0, min_size >= 1 required");
    const int h = img.h, w = img.w;
    const ImageRGB sm = presmooth(img, sigma);

    std::vector<Edge> edges;
    edges.reserve(static_cast<size_t>(h) * w * 4);
    auto idx = [w](int y, int x) { return y * w + x; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int a = idx(y, x);
            if (x + 1 < w) edges.push_back({color_dist(sm, a, idx(y, x + 1)), a, idx(y, x + 1)});
            if (y + 1 < h) edges.push_back({color_dist(sm, a, idx(y + 1, x)), a, idx(y + 1, x)});
            if (x + 1 < w && y + 1 < h)
                edges.push_back({color_dist(sm, a, idx(y + 1, x + 1)), a, idx(y + 1, x + 1)});
            if (x > 0 && y + 1 < h)
                edges.push_back({color_dist(sm, a, idx(y + 1, x - 1)), a, idx(y + 1, x - 1)});
        }
    // Tie-break on endpoints so the merge order is fully deterministic.
    std::sort(edges.begin(), edges.end(), [](const Edge& e1, const Edge& e2) {
        if (e1.w != e2.w) return e1.w < e2.w;
        if (e1.a != e2.a) return e1.a < e2.a;
        return e1.b < e2.b;
    });

    Forest f(h * w, k);
    for (const Edge& e : edges) {
        const int32_t a = f.find(e.a), b = f.find(e.b);
        if (a == b) continue;
        if (e.w <= f.thresh[a] && e.w <= f.thresh[b]) f.join(a, b, e.w, k);
    }
    for (const Edge& e : edges) {
        const int32_t a = f.find(e.a), b = f.find(e.b);
        if (a == b) continue;
        if (f.size[a] < min_size || f.size[b] < min_size) f.join(a, b, e.w, k);
    }

    LabelMap out(h, w);
    std::vector<int32_t> remap(static_cast<size_t>(h) * w, -1);
    int32_t next = 0;
    for (int i = 0; i < h * w; ++i) {
        const int32_t root = f.find(i);
        if (remap[root] < 0) remap[root] = next++;
        out.ids[i] = remap[root];
    }
    out.n_labels = next;
    return out;
}

}  // namespace ssia
