#include "ssia/headgrads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssia {

const char* feedback_name(Feedback f) {
    switch (f) {
        case Feedback::correct: return "correct";
        case Feedback::too_small: return "too_small";
        case Feedback::too_large: return "too_large";
        case Feedback::unsuccessful: return "unsuccessful";
    }
    return "?";
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// 5x5 kernel exp(-u^2-v^2) applied to a double field, zero padded.
void conv_kernel5(const std::vector<double>& in, int h, int w, std::vector<double>& out) {
    static const double k[5] = {std::exp(-4.0), std::exp(-1.0), 1.0, std::exp(-1.0), std::exp(-4.0)};
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double val = in[static_cast<size_t>(y) * w + x];
            if (val == 0.0) continue;
            for (int du = -2; du <= 2; ++du) {
                const int yy = y + du;
                if (yy < 0 || yy >= h) continue;
                for (int dv = -2; dv <= 2; ++dv) {
                    const int xx = x + dv;
                    if (xx < 0 || xx >= w) continue;
                    out[static_cast<size_t>(yy) * w + xx] += val * k[du + 2] * k[dv + 2];
                }
            }
        }
}

}  // namespace

double score_grad_scalar(double fg, double bg, double s) {
    const double pos = fg * sigmoid(-s) * std::exp(-0.5 * std::max(s, 0.0) * std::max(s, 0.0));
    const double neg = bg * sigmoid(s) * std::exp(-0.5 * std::min(s, 0.0) * std::min(s, 0.0));
    return pos - neg;
}

double force_grad_scalar(double ft, double m) {
    double g = 0.0;
    if (ft > 0.0)
        g = ft * sigmoid(-m) * std::exp(-0.5 * std::max(m, 0.0) * std::max(m, 0.0));
    else if (ft < 0.0)
        g = ft * sigmoid(m) * std::exp(-0.5 * std::min(m, 0.0) * std::min(m, 0.0));
    return 0.1 * g;
}

double embed_dist_grad_scalar(bool on_mask, double d) {
    if (on_mask) return -1.5 * d / (1.0 + d);
    const double q = d / 1.5;
    const double q2 = q * q;
    return std::exp(-q2 * q2);
}

void build_fg_bg(const std::vector<PointRec>& successful, const std::vector<PointRec>& unsuccessful,
                 int h, int w, std::vector<double>& fg, std::vector<double>& bg) {
    std::vector<double> imp(static_cast<size_t>(h) * w, 0.0);
    for (const PointRec& p : successful) imp[static_cast<size_t>(p.v) * w + p.u] += 1.0;
    conv_kernel5(imp, h, w, fg);
    std::fill(imp.begin(), imp.end(), 0.0);
    for (const PointRec& p : unsuccessful) imp[static_cast<size_t>(p.v) * w + p.u] += 1.0;
    conv_kernel5(imp, h, w, bg);
}

std::vector<double> build_force_targets(const std::vector<ForceRec>& records, int h, int w) {
    const size_t plane = static_cast<size_t>(h) * w;
    std::vector<double> pre(3 * plane, 0.0);
    for (const ForceRec& rec : records) {
        if (rec.fb == Feedback::unsuccessful) continue;
        if (rec.fb == Feedback::too_small && rec.r == 2)
            throw std::invalid_argument("force target: too_small with r=2 cannot occur");
        if (rec.fb == Feedback::too_large && rec.r == 0)
            throw std::invalid_argument("force target: too_large with r=0 cannot occur");
        double col[3] = {0, 0, 0};
        for (int c = 0; c < 3; ++c) {
            switch (rec.fb) {
                case Feedback::correct: col[c] = c == rec.r; break;
                case Feedback::too_small: col[c] = c > rec.r; break;
                case Feedback::too_large: col[c] = c < rec.r; break;
                default: break;
            }
        }
        const double mean = (col[0] + col[1] + col[2]) / 3.0;
        double l1 = 0.0;
        for (double& c : col) {
            c -= mean;
            l1 += std::fabs(c);
        }
        if (l1 == 0.0) continue;
        const size_t at = static_cast<size_t>(rec.v) * w + rec.u;
        for (int c = 0; c < 3; ++c) pre[c * plane + at] += col[c] / l1;
    }
    std::vector<double> ft(3 * plane, 0.0), tmp(plane), conv;
    for (int c = 0; c < 3; ++c) {
        std::copy_n(pre.begin() + c * plane, plane, tmp.begin());
        conv_kernel5(tmp, h, w, conv);
        std::copy_n(conv.begin(), plane, ft.begin() + c * plane);
    }
    return ft;
}

std::vector<double> score_grad(const float* s, const double* fg, const double* bg, int h, int w) {
    const size_t n = static_cast<size_t>(h) * w;
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) g[i] = score_grad_scalar(fg[i], bg[i], s[i]);
    return g;
}

std::vector<double> force_grad(const float* m, const double* ft, int h, int w) {
    const size_t n = static_cast<size_t>(h) * w * 3;
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) g[i] = force_grad_scalar(ft[i], m[i]);
    return g;
}

std::vector<double> embed_sq_distances(const float* e, int dim, int h, int w, const BinaryMask& mask) {
    const size_t plane = static_cast<size_t>(h) * w;
    std::vector<double> mean(dim, 0.0);
    int area = 0;
    for (size_t i = 0; i < plane; ++i) {
        if (!mask.m[i]) continue;
        ++area;
        for (int c = 0; c < dim; ++c) mean[c] += e[c * plane + i];
    }
    std::vector<double> d(plane, 0.0);
    if (area == 0) return d;
    for (double& c : mean) c /= area;
    for (size_t i = 0; i < plane; ++i) {
        double s = 0.0;
        for (int c = 0; c < dim; ++c) {
            const double diff = e[c * plane + i] - mean[c];
            s += diff * diff;
        }
        d[i] = s;
    }
    return d;
}

std::vector<double> embed_grad(const float* e, int dim, int h, int w,
                               const std::vector<MaskTarget>& targets) {
    const size_t plane = static_cast<size_t>(h) * w;
    std::vector<double> g(static_cast<size_t>(dim) * plane, 0.0);
    for (const MaskTarget& t : targets) {
        if (!t.mask || t.area < 1) continue;
        std::vector<double> mean(dim, 0.0);
        for (size_t i = 0; i < plane; ++i) {
            if (!t.mask->m[i]) continue;
            for (int c = 0; c < dim; ++c) mean[c] += e[c * plane + i];
        }
        for (double& c : mean) c /= t.area;
        const double wgt = 1.0 / t.area;
        for (size_t i = 0; i < plane; ++i) {
            double d = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double diff = e[c * plane + i] - mean[c];
                d += diff * diff;
            }
            const double gd = embed_dist_grad_scalar(t.mask->m[i] != 0, d);
            if (gd == 0.0) continue;
            for (int c = 0; c < dim; ++c) {
                const double diff = e[c * plane + i] - mean[c];
                const double dd = std::clamp(2.0 * diff, -1.0, 1.0);  // huber_square backward
                g[c * plane + i] += wgt * gd * dd;
            }
        }
    }
    return g;
}

}  // namespace ssia
