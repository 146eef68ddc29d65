#include "ssia/selfsup.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ssia {

BinaryMask change_mask(const ImageRGB& before, const ImageRGB& after) {
    if (!before.same_shape(after)) throw std::invalid_argument("change_mask: shape mismatch");
    const ImageRGB j = mean_pool(hsv_diff(rgb_to_hsv(before), rgb_to_hsv(after)), 3);
    BinaryMask b(j.h, j.w);
    for (int y = 0; y < j.h; ++y)
        for (int x = 0; x < j.w; ++x) {
            const float dh = j.at(y, x, 0), ds = j.at(y, x, 1), dv = j.at(y, x, 2);
            b.at(y, x) = dh * dh + ds * ds + dv * dv > kChangeThreshold;
        }
    return b;
}

BinaryMask align_superpixels(const BinaryMask& B, const LabelMap& sp) {
    if (sp.h != B.h * 3 || sp.w != B.w * 3)
        throw std::invalid_argument("align_superpixels: superpixels must be 3x the mask resolution");

    std::vector<int> size(sp.n_labels, 0), covered(sp.n_labels, 0);
    for (int y = 0; y < sp.h; ++y)
        for (int x = 0; x < sp.w; ++x) {
            const int32_t id = sp.at(y, x);
            ++size[id];
            covered[id] += B.at(y / 3, x / 3) != 0;
        }
    std::vector<uint8_t> joins(sp.n_labels, 0);
    for (int32_t id = 0; id < sp.n_labels; ++id)
        joins[id] = 4 * covered[id] >= size[id];  // the 25% rule in integers

    BinaryMask out(B.h, B.w);
    for (int y = 0; y < B.h; ++y)
        for (int x = 0; x < B.w; ++x) {
            int votes = 0;
            for (int dy = 0; dy < 3; ++dy)
                for (int dx = 0; dx < 3; ++dx) votes += joins[sp.at(y * 3 + dy, x * 3 + dx)];
            out.at(y, x) = votes >= 5;
        }
    return out;
}

bool success_test(const BinaryMask& Bplus, int u, int v) {
    if (u < 0 || u >= Bplus.w || v < 0 || v >= Bplus.h)
        throw std::invalid_argument("success_test: point out of bounds");
    float sum = 0.f;
    for (int du = -2; du <= 2; ++du) {
        const int x = u + du;
        if (x < 0 || x >= Bplus.w) continue;
        for (int dv = -2; dv <= 2; ++dv) {
            const int y = v + dv;
            if (y < 0 || y >= Bplus.h) continue;
            if (Bplus.at(y, x)) sum += std::exp(static_cast<float>(-du * du - dv * dv));
        }
    }
    return sum >= kSuccessThreshold;
}

SupervisionResult supervise(const ImageRGB& before, const ImageRGB& after, int u, int v,
                            const SelfSupParams& params, const LabelMap* superpixels) {
    SupervisionResult res;
    res.B = change_mask(before, after);
    if (params.use_superpixels) {
        LabelMap local;
        if (!superpixels) {
            local = felzenszwalb(before, params.felz_k, params.felz_sigma, params.felz_min_size);
            superpixels = &local;
        }
        res.Bplus = align_superpixels(res.B, *superpixels);
    } else {
        res.Bplus = res.B;
    }
    res.successful = success_test(res.Bplus, u, v);
    return res;
}

}  // namespace ssia
