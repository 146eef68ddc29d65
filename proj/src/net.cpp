#include "ssia/net.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ssia {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using CMatMap = Eigen::Map<const RowMat<T>>;

void same_pad(int h, int w, int k, int s, int& ho, int& wo, int& padt, int& padl) {
    ho = (h + s - 1) / s;
    wo = (w + s - 1) / s;
    padt = std::max((ho - 1) * s + k - h, 0) / 2;
    padl = std::max((wo - 1) * s + k - w, 0) / 2;
}

template <class T>
void im2col(const T* x, int c, int h, int w, int k, int stride, int padt, int padl, int ho, int wo,
            T* col) {
    // col is (c*k*k) x (ho*wo), row-major
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col + (static_cast<size_t>(ch) * k * k + ky * k + kx) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - padt + ky;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst + static_cast<size_t>(oy) * wo, dst + static_cast<size_t>(oy + 1) * wo, T(0));
                        continue;
                    }
                    const T* src = x + (static_cast<size_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - padl + kx;
                        dst[static_cast<size_t>(oy) * wo + ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
}

template <class T>
void col2im(const T* col, int c, int h, int w, int k, int stride, int padt, int padl, int ho, int wo,
            T* x) {
    for (int ch = 0; ch < c; ++ch)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col + (static_cast<size_t>(ch) * k * k + ky * k + kx) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - padt + ky;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = x + (static_cast<size_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - padl + kx;
                        if (ix >= 0 && ix < w) dst[ix] += src[static_cast<size_t>(oy) * wo + ox];
                    }
                }
            }
}

template <class T>
struct Conv {
    int in_c = 0, out_c = 0, k = 3, stride = 1;
    bool bias = false;
    Tensor<T> w, gw, b, gb;  // w: (out_c, in_c, k, k)

    void configure(int ic, int oc, int k_, int s_, bool bias_) {
        in_c = ic;
        out_c = oc;
        k = k_;
        stride = s_;
        bias = bias_;
        w.resize(oc, ic, k_, k_);
        gw.resize(oc, ic, k_, k_);
        if (bias) {
            b.resize(1, oc, 1, 1);
            gb.resize(1, oc, 1, 1);
        }
    }

    void init(std::mt19937_64& rng) {
        const T limit = std::sqrt(T(6) / (in_c * k * k));
        std::uniform_real_distribution<double> u(-static_cast<double>(limit), static_cast<double>(limit));
        for (T& x : w.v) x = static_cast<T>(u(rng));
        if (bias) b.zero();
    }

    void forward(const Tensor<T>& x, Tensor<T>& y, std::vector<T>& colbuf) const {
        int ho, wo, padt, padl;
        same_pad(x.h, x.w, k, stride, ho, wo, padt, padl);
        y.resize(x.n, out_c, ho, wo);
        const size_t plane = static_cast<size_t>(ho) * wo;
        CMatMap<T> W(w.data(), out_c, static_cast<Eigen::Index>(in_c) * k * k);
        for (int nn = 0; nn < x.n; ++nn) {
            const T* xin = x.data() + static_cast<size_t>(nn) * x.c * x.h * x.w;
            MatMap<T> Y(y.data() + static_cast<size_t>(nn) * out_c * plane, out_c, plane);
            if (k == 1 && stride == 1) {
                CMatMap<T> X(xin, in_c, plane);
                Y.noalias() = W * X;
            } else {
                colbuf.resize(static_cast<size_t>(in_c) * k * k * plane);
                im2col(xin, in_c, x.h, x.w, k, stride, padt, padl, ho, wo, colbuf.data());
                CMatMap<T> C(colbuf.data(), static_cast<Eigen::Index>(in_c) * k * k, plane);
                Y.noalias() = W * C;
            }
            if (bias)
                for (int oc = 0; oc < out_c; ++oc)
                    Y.row(oc).array() += b.v[oc];
        }
    }

    // dx may be null when the input gradient is not needed.
    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx, std::vector<T>& colbuf) {
        int ho, wo, padt, padl;
        same_pad(x.h, x.w, k, stride, ho, wo, padt, padl);
        const size_t plane = static_cast<size_t>(ho) * wo;
        CMatMap<T> W(w.data(), out_c, static_cast<Eigen::Index>(in_c) * k * k);
        MatMap<T> GW(gw.data(), out_c, static_cast<Eigen::Index>(in_c) * k * k);
        if (dx) dx->resize(x.n, x.c, x.h, x.w);
        std::vector<T> dcol;
        for (int nn = 0; nn < x.n; ++nn) {
            const T* xin = x.data() + static_cast<size_t>(nn) * x.c * x.h * x.w;
            CMatMap<T> DY(dy.data() + static_cast<size_t>(nn) * out_c * plane, out_c, plane);
            if (k == 1 && stride == 1) {
                CMatMap<T> X(xin, in_c, plane);
                GW.noalias() += DY * X.transpose();
                if (dx) {
                    MatMap<T> DX(dx->data() + static_cast<size_t>(nn) * in_c * plane, in_c, plane);
                    DX.noalias() = W.transpose() * DY;
                }
            } else {
                colbuf.resize(static_cast<size_t>(in_c) * k * k * plane);
                im2col(xin, in_c, x.h, x.w, k, stride, padt, padl, ho, wo, colbuf.data());
                CMatMap<T> C(colbuf.data(), static_cast<Eigen::Index>(in_c) * k * k, plane);
                GW.noalias() += DY * C.transpose();
                if (dx) {
                    dcol.resize(colbuf.size());
                    MatMap<T> DC(dcol.data(), static_cast<Eigen::Index>(in_c) * k * k, plane);
                    DC.noalias() = W.transpose() * DY;
                    col2im(dcol.data(), in_c, x.h, x.w, k, stride, padt, padl, ho, wo,
                           dx->data() + static_cast<size_t>(nn) * x.c * x.h * x.w);
                }
            }
            if (bias)
                for (int oc = 0; oc < out_c; ++oc) gb.v[oc] += DY.row(oc).sum();
        }
    }
};

// 2x2 stride-2 transposed convolution; output cropped to the encoder size it
// restores. Weight rows are indexed (oc*4 + 2*u + v).
template <class T>
struct TConv {
    int in_c = 0, out_c = 0;
    Tensor<T> w, gw;  // (out_c*4, in_c, 1, 1)

    void configure(int ic, int oc) {
        in_c = ic;
        out_c = oc;
        w.resize(oc * 4, ic, 1, 1);
        gw.resize(oc * 4, ic, 1, 1);
    }

    void init(std::mt19937_64& rng) {
        const T limit = std::sqrt(T(6) / in_c);
        std::uniform_real_distribution<double> u(-static_cast<double>(limit), static_cast<double>(limit));
        for (T& x : w.v) x = static_cast<T>(u(rng));
    }

    void forward(const Tensor<T>& x, Tensor<T>& y, int th, int tw, std::vector<T>& buf) const {
        y.resize(x.n, out_c, th, tw);
        const size_t in_plane = static_cast<size_t>(x.h) * x.w;
        buf.resize(static_cast<size_t>(out_c) * 4 * in_plane);
        CMatMap<T> W(w.data(), out_c * 4, in_c);
        for (int nn = 0; nn < x.n; ++nn) {
            CMatMap<T> X(x.data() + static_cast<size_t>(nn) * in_c * in_plane, in_c, in_plane);
            MatMap<T> Y2(buf.data(), out_c * 4, in_plane);
            Y2.noalias() = W * X;
            T* yout = y.data() + static_cast<size_t>(nn) * out_c * th * tw;
            for (int oc = 0; oc < out_c; ++oc)
                for (int u = 0; u < 2; ++u)
                    for (int vv = 0; vv < 2; ++vv) {
                        const T* src = buf.data() + (static_cast<size_t>(oc) * 4 + u * 2 + vv) * in_plane;
                        for (int iy = 0; iy < x.h; ++iy) {
                            const int oy = 2 * iy + u;
                            if (oy >= th) continue;
                            for (int ix = 0; ix < x.w; ++ix) {
                                const int ox = 2 * ix + vv;
                                if (ox >= tw) continue;
                                yout[(static_cast<size_t>(oc) * th + oy) * tw + ox] =
                                    src[static_cast<size_t>(iy) * x.w + ix];
                            }
                        }
                    }
        }
    }

    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx, std::vector<T>& buf) {
        const size_t in_plane = static_cast<size_t>(x.h) * x.w;
        const int th = dy.h, tw = dy.w;
        dx.resize(x.n, in_c, x.h, x.w);
        buf.resize(static_cast<size_t>(out_c) * 4 * in_plane);
        CMatMap<T> W(w.data(), out_c * 4, in_c);
        MatMap<T> GW(gw.data(), out_c * 4, in_c);
        for (int nn = 0; nn < x.n; ++nn) {
            // gather dy into the (out_c*4) x (h*w) layout, zeros where cropped
            for (int oc = 0; oc < out_c; ++oc)
                for (int u = 0; u < 2; ++u)
                    for (int vv = 0; vv < 2; ++vv) {
                        T* dst = buf.data() + (static_cast<size_t>(oc) * 4 + u * 2 + vv) * in_plane;
                        const T* dsrc =
                            dy.data() + (static_cast<size_t>(nn) * out_c + oc) * th * tw;
                        for (int iy = 0; iy < x.h; ++iy) {
                            const int oy = 2 * iy + u;
                            for (int ix = 0; ix < x.w; ++ix) {
                                const int ox = 2 * ix + vv;
                                dst[static_cast<size_t>(iy) * x.w + ix] =
                                    (oy < th && ox < tw) ? dsrc[static_cast<size_t>(oy) * tw + ox] : T(0);
                            }
                        }
                    }
            CMatMap<T> DY2(buf.data(), out_c * 4, in_plane);
            CMatMap<T> X(x.data() + static_cast<size_t>(nn) * in_c * in_plane, in_c, in_plane);
            GW.noalias() += DY2 * X.transpose();
            MatMap<T> DX(dx.data() + static_cast<size_t>(nn) * in_c * in_plane, in_c, in_plane);
            DX.noalias() = W.transpose() * DY2;
        }
    }
};

template <class T>
struct BN {
    int c = 0;
    T momentum = T(0.1), eps = T(1e-5);
    Tensor<T> gamma, ggamma, beta, gbeta, rmean, rvar;

    struct Cache {
        std::vector<T> mean, invstd;
        bool batch_mode = false;
    };

    void configure(int c_) {
        c = c_;
        gamma.resize(1, c, 1, 1);
        ggamma.resize(1, c, 1, 1);
        beta.resize(1, c, 1, 1);
        gbeta.resize(1, c, 1, 1);
        rmean.resize(1, c, 1, 1);
        rvar.resize(1, c, 1, 1);
        std::fill(gamma.v.begin(), gamma.v.end(), T(1));
        std::fill(rvar.v.begin(), rvar.v.end(), T(1));
    }

    void forward(const Tensor<T>& x, Tensor<T>& y, bool train, Cache& cache) {
        y.resize(x.n, x.c, x.h, x.w);
        const size_t plane = static_cast<size_t>(x.h) * x.w;
        const size_t m = static_cast<size_t>(x.n) * plane;
        cache.mean.resize(c);
        cache.invstd.resize(c);
        cache.batch_mode = train;
        for (int ch = 0; ch < c; ++ch) {
            T mean, var;
            if (train) {
                T s = 0, s2 = 0;
                for (int nn = 0; nn < x.n; ++nn) {
                    const T* p = x.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        s += p[i];
                        s2 += p[i] * p[i];
                    }
                }
                mean = s / static_cast<T>(m);
                var = std::max(T(0), s2 / static_cast<T>(m) - mean * mean);
                rmean.v[ch] = (T(1) - momentum) * rmean.v[ch] + momentum * mean;
                const T unbiased = m > 1 ? var * static_cast<T>(m) / static_cast<T>(m - 1) : var;
                rvar.v[ch] = (T(1) - momentum) * rvar.v[ch] + momentum * unbiased;
            } else {
                mean = rmean.v[ch];
                var = rvar.v[ch];
            }
            const T invstd = T(1) / std::sqrt(var + eps);
            cache.mean[ch] = mean;
            cache.invstd[ch] = invstd;
            const T g = gamma.v[ch], bb = beta.v[ch];
            for (int nn = 0; nn < x.n; ++nn) {
                const T* p = x.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                T* q = y.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                for (size_t i = 0; i < plane; ++i) q[i] = (p[i] - mean) * invstd * g + bb;
            }
        }
    }

    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx, const Cache& cache) {
        dx.resize(x.n, x.c, x.h, x.w);
        const size_t plane = static_cast<size_t>(x.h) * x.w;
        const size_t m = static_cast<size_t>(x.n) * plane;
        for (int ch = 0; ch < c; ++ch) {
            const T mean = cache.mean[ch], invstd = cache.invstd[ch];
            const T g = gamma.v[ch];
            T sum_dy = 0, sum_dy_xh = 0;
            for (int nn = 0; nn < x.n; ++nn) {
                const T* px = x.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                const T* pdy = dy.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    sum_dy += pdy[i];
                    sum_dy_xh += pdy[i] * (px[i] - mean) * invstd;
                }
            }
            ggamma.v[ch] += sum_dy_xh;
            gbeta.v[ch] += sum_dy;
            if (cache.batch_mode) {
                const T k1 = g * invstd / static_cast<T>(m);
                for (int nn = 0; nn < x.n; ++nn) {
                    const T* px = x.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                    const T* pdy = dy.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                    T* pdx = dx.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        const T xh = (px[i] - mean) * invstd;
                        pdx[i] = k1 * (static_cast<T>(m) * pdy[i] - sum_dy - xh * sum_dy_xh);
                    }
                }
            } else {
                const T k1 = g * invstd;
                for (int nn = 0; nn < x.n; ++nn) {
                    const T* pdy = dy.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                    T* pdx = dx.data() + (static_cast<size_t>(nn) * c + ch) * plane;
                    for (size_t i = 0; i < plane; ++i) pdx[i] = k1 * pdy[i];
                }
            }
        }
    }
};

template <class T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y) {
    y.resize(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
}

// dx = dy masked by the stored post-activation output.
template <class T>
void relu_backward(const Tensor<T>& out, Tensor<T>& dy) {
    for (size_t i = 0; i < out.v.size(); ++i)
        if (out.v[i] <= T(0)) dy.v[i] = T(0);
}

template <class T>
void concat2(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& y) {
    y.resize(a.n, a.c + b.c, a.h, a.w);
    const size_t pa = static_cast<size_t>(a.c) * a.h * a.w;
    const size_t pb = static_cast<size_t>(b.c) * b.h * b.w;
    for (int nn = 0; nn < a.n; ++nn) {
        std::copy_n(a.data() + nn * pa, pa, y.data() + nn * (pa + pb));
        std::copy_n(b.data() + nn * pb, pb, y.data() + nn * (pa + pb) + pa);
    }
}

template <class T>
void split2(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db, int ca, int cb) {
    da.resize(dy.n, ca, dy.h, dy.w);
    db.resize(dy.n, cb, dy.h, dy.w);
    const size_t pa = static_cast<size_t>(ca) * dy.h * dy.w;
    const size_t pb = static_cast<size_t>(cb) * dy.h * dy.w;
    for (int nn = 0; nn < dy.n; ++nn) {
        std::copy_n(dy.data() + nn * (pa + pb), pa, da.data() + nn * pa);
        std::copy_n(dy.data() + nn * (pa + pb) + pa, pb, db.data() + nn * pb);
    }
}

template <class T>
void add_into(Tensor<T>& y, const Tensor<T>& b) {
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += b.v[i];
}

// Two coordinate channels, each linear in [-1,1] across the grid.
template <class T>
void fill_coords(Tensor<T>& coords, int n, int h, int w) {
    coords.resize(n, 2, h, w);
    for (int nn = 0; nn < n; ++nn)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                coords.at(nn, 0, y, x) = w > 1 ? T(-1) + T(2) * x / (w - 1) : T(0);
                coords.at(nn, 1, y, x) = h > 1 ? T(-1) + T(2) * y / (h - 1) : T(0);
            }
}

}  // namespace

template <class T>
struct UNet<T>::Impl {
    struct Block {
        Conv<T> c1, mid, c2;
        BN<T> bn1, bnm, bn2;
    };
    struct Dec {
        TConv<T> up;
        BN<T> bnu;
        Conv<T> conv;
        BN<T> bnc;
    };

    Conv<T> stem;
    BN<T> bn_stem;
    std::array<Block, 3> blk;
    std::array<Dec, 3> dec;  // dec[0] deepest
    Conv<T> trunk;
    BN<T> bn_trunk;
    Conv<T> head_s, head_m, head_e;
    std::vector<T> scratch;

    explicit Impl(const ModelConfig& cfg) {
        const int s = cfg.stem_ch;
        const auto& bc = cfg.block_ch;
        stem.configure(4, s, 5, 3, false);
        bn_stem.configure(s);
        const int in_ch[3] = {s, bc[0], bc[1]};
        for (int i = 0; i < 3; ++i) {
            blk[i].c1.configure(in_ch[i], in_ch[i], 3, 1, false);
            blk[i].bn1.configure(in_ch[i]);
            blk[i].mid.configure(in_ch[i], in_ch[i], 1, 1, false);
            blk[i].bnm.configure(in_ch[i]);
            blk[i].c2.configure(in_ch[i], bc[i], 3, 2, false);
            blk[i].bn2.configure(bc[i]);
        }
        const int final_dec = 2 * s;  // 64 channels at the default width
        dec[0].up.configure(bc[2], bc[1]);
        dec[0].bnu.configure(bc[1]);
        dec[0].conv.configure(2 * bc[1], bc[1], 3, 1, false);
        dec[0].bnc.configure(bc[1]);
        dec[1].up.configure(bc[1], bc[0]);
        dec[1].bnu.configure(bc[0]);
        dec[1].conv.configure(2 * bc[0], bc[0], 3, 1, false);
        dec[1].bnc.configure(bc[0]);
        dec[2].up.configure(bc[0], s);
        dec[2].bnu.configure(s);
        dec[2].conv.configure(2 * s, final_dec, 3, 1, false);
        dec[2].bnc.configure(final_dec);
        trunk.configure(final_dec + 2, cfg.trunk_ch, 1, 1, false);
        bn_trunk.configure(cfg.trunk_ch);
        head_s.configure(cfg.trunk_ch, 1, 1, 1, true);
        head_m.configure(cfg.trunk_ch, cfg.force_classes, 1, 1, true);
        head_e.configure(cfg.trunk_ch, cfg.embed_dim, 1, 1, true);
    }
};

template <class T>
struct UNet<T>::Acts {
    Tensor<T> x;
    Tensor<T> stem_co, stem_out;
    typename BN<T>::Cache stem_bnc;
    struct BlockActs {
        Tensor<T> c1_co, c1_out, mid_co, mid_out, sum, c2_co, c2_out;
        typename BN<T>::Cache bn1c, bnmc, bn2c;
    };
    std::array<BlockActs, 3> ba;
    struct DecActs {
        Tensor<T> up_co, up_out, cat, conv_co, out;
        typename BN<T>::Cache bnuc, bncc;
    };
    std::array<DecActs, 3> da;
    Tensor<T> coords, trunk_cat, trunk_co, trunk_out;
    typename BN<T>::Cache trunk_bnc;
};

template <class T>
UNet<T>::UNet(const ModelConfig& cfg) : cfg_(cfg), impl_(std::make_unique<Impl>(cfg)) {}
template <class T>
UNet<T>::~UNet() = default;
template <class T>
UNet<T>::UNet(UNet&&) noexcept = default;
template <class T>
UNet<T>& UNet<T>::operator=(UNet&&) noexcept = default;

template <class T>
void UNet<T>::init(uint64_t seed) {
    std::mt19937_64 rng(seed);
    Impl& im = *impl_;
    im.stem.init(rng);
    for (auto& b : im.blk) {
        b.c1.init(rng);
        b.mid.init(rng);
        b.c2.init(rng);
    }
    for (auto& d : im.dec) {
        d.up.init(rng);
        d.conv.init(rng);
    }
    im.trunk.init(rng);
    im.head_s.init(rng);
    im.head_m.init(rng);
    im.head_e.init(rng);
}

template <class T>
void UNet<T>::ActsDeleter::operator()(Acts* a) const {
    delete a;
}

template <class T>
typename UNet<T>::ActsPtr UNet<T>::new_acts() const {
    return ActsPtr(new Acts());
}

template <class T>
typename UNet<T>::Out UNet<T>::forward(const Tensor<T>& x, bool train, Acts* acts) {
    if (x.c != 4 || x.h != cfg_.input_res || x.w != cfg_.input_res)
        throw std::invalid_argument("UNet::forward: input must be (N,4,R,R) at the configured resolution");
    std::unique_ptr<Acts> local;
    if (!acts) {
        local = std::make_unique<Acts>();
        acts = local.get();
    }
    Impl& im = *impl_;
    Acts& a = *acts;
    std::vector<T> colbuf;

    a.x = x;
    im.stem.forward(a.x, a.stem_co, colbuf);
    {
        Tensor<T> bn;
        im.bn_stem.forward(a.stem_co, bn, train, a.stem_bnc);
        relu_forward(bn, a.stem_out);
    }

    const Tensor<T>* cur = &a.stem_out;
    for (int i = 0; i < 3; ++i) {
        auto& B = im.blk[i];
        auto& BA = a.ba[i];
        im.blk[i].c1.forward(*cur, BA.c1_co, colbuf);
        {
            Tensor<T> bn;
            B.bn1.forward(BA.c1_co, bn, train, BA.bn1c);
            relu_forward(bn, BA.c1_out);
        }
        B.mid.forward(BA.c1_out, BA.mid_co, colbuf);
        {
            Tensor<T> bn;
            B.bnm.forward(BA.mid_co, bn, train, BA.bnmc);
            relu_forward(bn, BA.mid_out);
        }
        BA.sum = BA.mid_out;
        add_into(BA.sum, *cur);  // residual: block input joins the last conv's input
        B.c2.forward(BA.sum, BA.c2_co, colbuf);
        {
            Tensor<T> bn;
            B.bn2.forward(BA.c2_co, bn, train, BA.bn2c);
            relu_forward(bn, BA.c2_out);
        }
        cur = &BA.c2_out;
    }

    // Decoder: lateral concat with each block's input.
    const Tensor<T>* laterals[3] = {&a.ba[1].c2_out, &a.ba[0].c2_out, &a.stem_out};
    for (int i = 0; i < 3; ++i) {
        auto& D = im.dec[i];
        auto& DA = a.da[i];
        const Tensor<T>& lat = *laterals[i];
        D.up.forward(*cur, DA.up_co, lat.h, lat.w, im.scratch);
        {
            Tensor<T> bn;
            D.bnu.forward(DA.up_co, bn, train, DA.bnuc);
            relu_forward(bn, DA.up_out);
        }
        concat2(DA.up_out, lat, DA.cat);
        D.conv.forward(DA.cat, DA.conv_co, colbuf);
        {
            Tensor<T> bn;
            D.bnc.forward(DA.conv_co, bn, train, DA.bncc);
            relu_forward(bn, DA.out);
        }
        cur = &DA.out;
    }

    fill_coords(a.coords, cur->n, cur->h, cur->w);
    concat2(*cur, a.coords, a.trunk_cat);
    im.trunk.forward(a.trunk_cat, a.trunk_co, colbuf);
    {
        Tensor<T> bn;
        im.bn_trunk.forward(a.trunk_co, bn, train, a.trunk_bnc);
        relu_forward(bn, a.trunk_out);
    }

    Out out;
    im.head_s.forward(a.trunk_out, out.s, colbuf);
    im.head_m.forward(a.trunk_out, out.m, colbuf);
    im.head_e.forward(a.trunk_out, out.e, colbuf);
    return out;
}

template <class T>
void UNet<T>::backward(Acts& a, const Out& ascent, Tensor<T>* dx_out) {
    Impl& im = *impl_;
    std::vector<T> colbuf;
    const T scale = T(-1) / static_cast<T>(a.x.n);  // descent, mean over batch

    Tensor<T> gs = ascent.s, gm = ascent.m, ge = ascent.e;
    for (T& v : gs.v) v *= scale;
    for (T& v : gm.v) v *= scale;
    for (T& v : ge.v) v *= scale;

    Tensor<T> dtrunk_out, tmp;
    im.head_s.backward(a.trunk_out, gs, &dtrunk_out, colbuf);
    im.head_m.backward(a.trunk_out, gm, &tmp, colbuf);
    add_into(dtrunk_out, tmp);
    im.head_e.backward(a.trunk_out, ge, &tmp, colbuf);
    add_into(dtrunk_out, tmp);

    relu_backward(a.trunk_out, dtrunk_out);
    Tensor<T> d_trunk_co;
    im.bn_trunk.backward(a.trunk_co, dtrunk_out, d_trunk_co, a.trunk_bnc);
    Tensor<T> d_trunk_cat;
    im.trunk.backward(a.trunk_cat, d_trunk_co, &d_trunk_cat, colbuf);

    Tensor<T> dcur, dcoords;
    split2(d_trunk_cat, dcur, dcoords, d_trunk_cat.c - 2, 2);

    const Tensor<T>* laterals[3] = {&a.ba[1].c2_out, &a.ba[0].c2_out, &a.stem_out};
    Tensor<T> dlat[3];
    for (int i = 2; i >= 0; --i) {
        auto& D = im.dec[i];
        auto& DA = a.da[i];
        relu_backward(DA.out, dcur);
        Tensor<T> d_conv_co;
        D.bnc.backward(DA.conv_co, dcur, d_conv_co, DA.bncc);
        Tensor<T> d_cat;
        D.conv.backward(DA.cat, d_conv_co, &d_cat, colbuf);
        Tensor<T> d_up_out;
        split2(d_cat, d_up_out, dlat[i], DA.up_out.c, laterals[i]->c);
        relu_backward(DA.up_out, d_up_out);
        Tensor<T> d_up_co;
        D.bnu.backward(DA.up_co, d_up_out, d_up_co, DA.bnuc);
        const Tensor<T>& up_in = i == 0 ? a.ba[2].c2_out : a.da[i - 1].out;
        D.up.backward(up_in, d_up_co, dcur, im.scratch);
    }
    // dcur now holds the gradient at block3's output; laterals feed in below.

    Tensor<T> dprev;
    for (int i = 2; i >= 0; --i) {
        auto& B = im.blk[i];
        auto& BA = a.ba[i];
        if (i == 1) add_into(dcur, dlat[0]);  // block2 output is dec0's lateral
        if (i == 0) add_into(dcur, dlat[1]);
        relu_backward(BA.c2_out, dcur);
        Tensor<T> d_c2_co;
        B.bn2.backward(BA.c2_co, dcur, d_c2_co, BA.bn2c);
        Tensor<T> d_sum;
        B.c2.backward(BA.sum, d_c2_co, &d_sum, colbuf);
        // residual: d_sum flows to mid_out and to the block input
        Tensor<T> d_mid_out = d_sum;
        relu_backward(BA.mid_out, d_mid_out);
        Tensor<T> d_mid_co;
        B.bnm.backward(BA.mid_co, d_mid_out, d_mid_co, BA.bnmc);
        Tensor<T> d_c1_out;
        B.mid.backward(BA.c1_out, d_mid_co, &d_c1_out, colbuf);
        relu_backward(BA.c1_out, d_c1_out);
        Tensor<T> d_c1_co;
        B.bn1.backward(BA.c1_co, d_c1_out, d_c1_co, BA.bn1c);
        const Tensor<T>& block_in = i == 0 ? a.stem_out : a.ba[i - 1].c2_out;
        B.c1.backward(block_in, d_c1_co, &dprev, colbuf);
        add_into(dprev, d_sum);  // residual path
        dcur = std::move(dprev);
    }

    add_into(dcur, dlat[2]);  // stem output is dec2's lateral
    relu_backward(a.stem_out, dcur);
    Tensor<T> d_stem_co;
    im.bn_stem.backward(a.stem_co, dcur, d_stem_co, a.stem_bnc);
    Tensor<T> dx;
    im.stem.backward(a.x, d_stem_co, dx_out ? &dx : nullptr, colbuf);
    if (dx_out) *dx_out = std::move(dx);
}

template <class T>
std::vector<ParamRef<T>> UNet<T>::params() {
    Impl& im = *impl_;
    std::vector<ParamRef<T>> out;
    auto add = [&out](const std::string& name, Tensor<T>& w, Tensor<T>& g) {
        out.push_back({name, &w, &g});
    };
    auto add_bn = [&](const std::string& p, BN<T>& bn) {
        add(p + ".gamma", bn.gamma, bn.ggamma);
        add(p + ".beta", bn.beta, bn.gbeta);
    };
    add("stem.w", im.stem.w, im.stem.gw);
    add_bn("stem.bn", im.bn_stem);
    for (int i = 0; i < 3; ++i) {
        const std::string p = "block" + std::to_string(i + 1);
        add(p + ".c1.w", im.blk[i].c1.w, im.blk[i].c1.gw);
        add_bn(p + ".c1.bn", im.blk[i].bn1);
        add(p + ".mid.w", im.blk[i].mid.w, im.blk[i].mid.gw);
        add_bn(p + ".mid.bn", im.blk[i].bnm);
        add(p + ".c2.w", im.blk[i].c2.w, im.blk[i].c2.gw);
        add_bn(p + ".c2.bn", im.blk[i].bn2);
    }
    for (int i = 0; i < 3; ++i) {
        const std::string p = "dec" + std::to_string(3 - i);
        add(p + ".up.w", im.dec[i].up.w, im.dec[i].up.gw);
        add_bn(p + ".up.bn", im.dec[i].bnu);
        add(p + ".conv.w", im.dec[i].conv.w, im.dec[i].conv.gw);
        add_bn(p + ".conv.bn", im.dec[i].bnc);
    }
    add("trunk.w", im.trunk.w, im.trunk.gw);
    add_bn("trunk.bn", im.bn_trunk);
    add("head_score.w", im.head_s.w, im.head_s.gw);
    add("head_score.b", im.head_s.b, im.head_s.gb);
    add("head_force.w", im.head_m.w, im.head_m.gw);
    add("head_force.b", im.head_m.b, im.head_m.gb);
    add("head_embed.w", im.head_e.w, im.head_e.gw);
    add("head_embed.b", im.head_e.b, im.head_e.gb);
    return out;
}

template <class T>
std::vector<ParamRef<T>> UNet<T>::norm_buffers() {
    Impl& im = *impl_;
    std::vector<ParamRef<T>> out;
    auto add_bn = [&out](const std::string& p, BN<T>& bn) {
        out.push_back({p + ".rmean", &bn.rmean, nullptr});
        out.push_back({p + ".rvar", &bn.rvar, nullptr});
    };
    add_bn("stem.bn", im.bn_stem);
    for (int i = 0; i < 3; ++i) {
        const std::string p = "block" + std::to_string(i + 1);
        add_bn(p + ".c1.bn", im.blk[i].bn1);
        add_bn(p + ".mid.bn", im.blk[i].bnm);
        add_bn(p + ".c2.bn", im.blk[i].bn2);
    }
    for (int i = 0; i < 3; ++i) {
        const std::string p = "dec" + std::to_string(3 - i);
        add_bn(p + ".up.bn", im.dec[i].bnu);
        add_bn(p + ".conv.bn", im.dec[i].bnc);
    }
    add_bn("trunk.bn", im.bn_trunk);
    return out;
}

template <class T>
void UNet<T>::zero_grads() {
    for (auto& p : params()) p.g->zero();
}

template <class T>
void UNet<T>::copy_from(UNet& other) {
    if (!(cfg_ == other.cfg_)) throw std::invalid_argument("UNet::copy_from: config mismatch");
    auto dst = params(), src = other.params();
    for (size_t i = 0; i < dst.size(); ++i) dst[i].w->v = src[i].w->v;
    auto dbuf = norm_buffers(), sbuf = other.norm_buffers();
    for (size_t i = 0; i < dbuf.size(); ++i) dbuf[i].w->v = sbuf[i].w->v;
}

template <class T>
int64_t UNet<T>::parameter_count() {
    int64_t n = 0;
    for (auto& p : params()) n += static_cast<int64_t>(p.w->numel());
    return n;
}

template <class T>
void Adam<T>::step(std::vector<ParamRef<T>> params, T lr, T weight_decay) {
    if (m.empty()) {
        m.resize(params.size());
        v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m[i].assign(params[i].w->numel(), T(0));
            v[i].assign(params[i].w->numel(), T(0));
        }
    }
    ++t;
    const T bc1 = T(1) - std::pow(beta1, static_cast<T>(t));
    const T bc2 = T(1) - std::pow(beta2, static_cast<T>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        T* w = params[i].w->data();
        const T* g = params[i].g->data();
        const size_t n = params[i].w->numel();
        for (size_t j = 0; j < n; ++j) {
            const T grad = g[j] + weight_decay * w[j];
            m[i][j] = beta1 * m[i][j] + (T(1) - beta1) * grad;
            v[i][j] = beta2 * v[i][j] + (T(1) - beta2) * grad * grad;
            const T mhat = m[i][j] / bc1;
            const T vhat = v[i][j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template <class T>
void fill_input(Tensor<T>& x, int batch_index, const ImageRGB& rgb, const DepthMap& depth) {
    const int h = rgb.h, w = rgb.w;
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            for (int c = 0; c < 3; ++c) x.at(batch_index, c, y, xx) = static_cast<T>(rgb.at(y, xx, c));
            x.at(batch_index, 3, y, xx) = static_cast<T>(depth.at(y, xx) / 5.f);
        }
}

template class UNet<float>;
template class UNet<double>;
template struct Adam<float>;
template struct Adam<double>;
template void fill_input(Tensor<float>&, int, const ImageRGB&, const DepthMap&);
template void fill_input(Tensor<double>&, int, const ImageRGB&, const DepthMap&);

}  // namespace ssia
