#include "ssia/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssia {

ImageRGB rgb_to_hsv(const ImageRGB& img) {
    ImageRGB out(img.h, img.w);
    const size_t n = static_cast<size_t>(img.h) * img.w;
    for (size_t i = 0; i < n; ++i) {
        const float r = img.px[i * 3 + 0];
        const float g = img.px[i * 3 + 1];
        const float b = img.px[i * 3 + 2];
        const float mx = std::max({r, g, b});
        const float mn = std::min({r, g, b});
        const float c = mx - mn;
        float h = 0.f;
        if (c > 0.f) {
            if (mx == r)
                h = (g - b) / c;
            else if (mx == g)
                h = 2.f + (b - r) / c;
            else
                h = 4.f + (r - g) / c;
            h /= 6.f;
            if (h < 0.f) h += 1.f;
        }
        const float s = mx > 0.f ? c / mx : 0.f;
        out.px[i * 3 + 0] = h;
        out.px[i * 3 + 1] = s;
        out.px[i * 3 + 2] = mx;
    }
    return out;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    h -= std::floor(h);
    const float hh = h * 6.f;
    const int i = std::min(5, static_cast<int>(hh));
    const float f = hh - i;
    const float p = v * (1.f - s);
    const float q = v * (1.f - s * f);
    const float t = v * (1.f - s * (1.f - f));
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

ImageRGB hsv_diff(const ImageRGB& a, const ImageRGB& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("hsv_diff: shape mismatch");
    ImageRGB out(a.h, a.w);
    const size_t n = static_cast<size_t>(a.h) * a.w;
    for (size_t i = 0; i < n; ++i) {
        float dh = a.px[i * 3] - b.px[i * 3];
        if (dh > 0.5f) dh -= 1.f;
        if (dh < -0.5f) dh += 1.f;
        out.px[i * 3 + 0] = dh;
        out.px[i * 3 + 1] = a.px[i * 3 + 1] - b.px[i * 3 + 1];
        out.px[i * 3 + 2] = a.px[i * 3 + 2] - b.px[i * 3 + 2];
    }
    return out;
}

ImageRGB mean_pool(const ImageRGB& img, int factor) {
    if (factor <= 0 || img.h % factor != 0 || img.w % factor != 0)
        throw std::invalid_argument("mean_pool: dimensions not divisible by factor");
    ImageRGB out(img.h / factor, img.w / factor);
    const float inv = 1.f / (factor * factor);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float s = 0.f;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        s += img.at(y * factor + dy, x * factor + dx, c);
                out.at(y, x, c) = s * inv;
            }
    return out;
}

Grid mean_pool(const Grid& g, int factor) {
    if (factor <= 0 || g.h % factor != 0 || g.w % factor != 0)
        throw std::invalid_argument("mean_pool: dimensions not divisible by factor");
    Grid out(g.h / factor, g.w / factor);
    const float inv = 1.f / (factor * factor);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            float s = 0.f;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx) s += g.at(y * factor + dy, x * factor + dx);
            out.at(y, x) = s * inv;
        }
    return out;
}

Grid gaussian_kernel5() {
    Grid k(5, 5);
    for (int u = -2; u <= 2; ++u)
        for (int v = -2; v <= 2; ++v) k.at(u + 2, v + 2) = std::exp(static_cast<float>(-u * u - v * v));
    return k;
}

Grid convolve5(const Grid& g, const Grid& kernel) {
    if (kernel.h != 5 || kernel.w != 5) throw std::invalid_argument("convolve5: kernel must be 5x5");
    Grid out(g.h, g.w);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
            float s = 0.f;
            for (int u = -2; u <= 2; ++u) {
                const int yy = y + u;
                if (yy < 0 || yy >= g.h) continue;
                for (int v = -2; v <= 2; ++v) {
                    const int xx = x + v;
                    if (xx < 0 || xx >= g.w) continue;
                    s += g.at(yy, xx) * kernel.at(u + 2, v + 2);
                }
            }
            out.at(y, x) = s;
        }
    return out;
}

}  // namespace ssia
