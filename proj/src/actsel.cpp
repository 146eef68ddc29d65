#include "ssia/actsel.hpp"

#include <cmath>

namespace ssia {

HeadView head_view(const UNet<float>::Out& out, int batch_index) {
    HeadView hv;
    hv.h = out.s.h;
    hv.w = out.s.w;
    hv.dim = out.e.c;
    const size_t plane = static_cast<size_t>(hv.h) * hv.w;
    hv.s = out.s.data() + static_cast<size_t>(batch_index) * plane;
    hv.m = out.m.data() + static_cast<size_t>(batch_index) * out.m.c * plane;
    hv.e = out.e.data() + static_cast<size_t>(batch_index) * out.e.c * plane;
    return hv;
}

SelectResult select_actions(const HeadView& hv, int n_max, float theta) {
    SelectResult res;
    const int h = hv.h, w = hv.w, dim = hv.dim;
    const size_t plane = static_cast<size_t>(h) * w;
    std::vector<uint8_t> suppressed(plane, 0);
    std::vector<double> mean(dim);

    for (int iter = 0; iter < n_max; ++iter) {
        // step 1: highest unsuppressed interaction score, row-major ties
        int seed = -1;
        float best = 0.f;
        for (size_t i = 0; i < plane; ++i) {
            if (suppressed[i]) continue;
            if (seed < 0 || hv.s[i] > best) {
                seed = static_cast<int>(i);
                best = hv.s[i];
            }
        }
        if (seed < 0 || best < theta) break;

        int r = 0;
        for (int c = 1; c < 3; ++c)
            if (hv.m[c * plane + seed] > hv.m[r * plane + seed]) r = c;

        // step 3: neighborhood within embedding distance 1 of the seed
        std::fill(mean.begin(), mean.end(), 0.0);
        int n_near = 0;
        for (size_t i = 0; i < plane; ++i) {
            if (suppressed[i]) continue;
            double d = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double diff = hv.e[c * plane + i] - hv.e[c * plane + seed];
                d += diff * diff;
            }
            if (d < 1.0) {
                ++n_near;
                for (int c = 0; c < dim; ++c) mean[c] += hv.e[c * plane + i];
            }
        }
        for (double& c : mean) c /= n_near;  // seed itself is always in the set

        // step 4: final cluster around the refined mean
        ActionProposal p;
        p.mask = BinaryMask(h, w);
        bool seed_in = false;
        for (size_t i = 0; i < plane; ++i) {
            if (suppressed[i]) continue;
            double d = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double diff = hv.e[c * plane + i] - mean[c];
                d += diff * diff;
            }
            if (d < 1.0) {
                p.mask.m[i] = 1;
                if (static_cast<int>(i) == seed) seed_in = true;
            }
        }
        if (!seed_in) {
            // Degenerate refinement: keep the seed in its own proposal so the
            // suppression step always makes progress.
            p.mask.m[seed] = 1;
            ++res.degenerate_seeds;
        }

        p.u = seed % w;
        p.v = seed / w;
        p.iu = p.u * 3 + 1;
        p.iv = p.v * 3 + 1;
        p.force_class = r;
        p.confidence = 1.f / (1.f + std::exp(-best));

        // step 5: suppress the cluster
        for (size_t i = 0; i < plane; ++i)
            if (p.mask.m[i]) suppressed[i] = 1;
        res.proposals.push_back(std::move(p));
    }
    return res;
}

std::vector<RandomAction> random_actions(int n, int h, int w, std::mt19937_64& rng) {
    std::vector<RandomAction> out;
    out.reserve(n);
    std::uniform_int_distribution<int> du(0, w - 1), dv(0, h - 1), dc(0, 2);
    for (int i = 0; i < n; ++i) {
        RandomAction a;
        a.u = du(rng);
        a.v = dv(rng);
        a.force_class = dc(rng);
        out.push_back(a);
    }
    return out;
}

}  // namespace ssia
