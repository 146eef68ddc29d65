#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssia/image.hpp"

namespace ssia {

template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }
    void resize(int n_, int c_, int h_, int w_) {
        n = n_;
        c = c_;
        h = h_;
        w = w_;
        v.assign(numel(), T(0));
    }
    size_t numel() const { return static_cast<size_t>(n) * c * h * w; }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T& at(int n_, int c_, int y, int x) {
        return v[((static_cast<size_t>(n_) * c + c_) * h + y) * w + x];
    }
    T at(int n_, int c_, int y, int x) const {
        return v[((static_cast<size_t>(n_) * c + c_) * h + y) * w + x];
    }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

struct ModelConfig {
    int input_res = 300;
    int stem_ch = 32;
    std::array<int, 3> block_ch{64, 128, 256};
    int trunk_ch = 128;
    int embed_dim = 16;
    int force_classes = 3;

    int output_res() const { return input_res / 3; }
    bool operator==(const ModelConfig&) const = default;

    // Small enough for finite-difference checks in seconds.
    static ModelConfig tiny() {
        ModelConfig c;
        c.input_res = 18;
        c.stem_ch = 4;
        c.block_ch = {6, 8, 10};
        c.trunk_ch = 12;
        c.embed_dim = 5;
        return c;
    }
};

template <class T>
struct ParamRef {
    std::string name;
    Tensor<T>* w = nullptr;
    Tensor<T>* g = nullptr;
};

// UNet-style backbone with three 1x1 heads (interaction score, force logits,
// pixel embeddings). Gradients enter at the heads as ascent directions on the
// outputs; backward() hands the optimizer descent gradients dtheta = J^T(-g).
template <class T>
class UNet {
  public:
    struct Out {
        Tensor<T> s;  // (N, 1, Ho, Wo) interaction score logits
        Tensor<T> m;  // (N, 3, Ho, Wo) force logits
        Tensor<T> e;  // (N, embed_dim, Ho, Wo) embeddings
    };
    struct Acts;  // retained activations, opaque
    struct ActsDeleter {
        void operator()(Acts* a) const;
    };
    using ActsPtr = std::unique_ptr<Acts, ActsDeleter>;

    explicit UNet(const ModelConfig& cfg);
    ~UNet();
    UNet(UNet&&) noexcept;
    UNet& operator=(UNet&&) noexcept;

    void init(uint64_t seed);  // He-uniform convs, BN gamma 1 / beta 0

    ActsPtr new_acts() const;

    // train=true normalizes with batch statistics and updates running stats;
    // train=false uses running statistics and is a pure function (safe for
    // concurrent readers). Pass acts to retain what backward needs.
    Out forward(const Tensor<T>& x, bool train, Acts* acts = nullptr);

    // Backward through the retained pass. Normalization statistics follow the
    // mode of the forward that filled `acts` (eval-mode forward => frozen
    // statistics in backward). Accumulates into parameter grads; mean over
    // the batch. Optionally reports the input gradient.
    void backward(Acts& acts, const Out& ascent, Tensor<T>* dx = nullptr);

    std::vector<ParamRef<T>> params();            // learnable tensors
    std::vector<ParamRef<T>> norm_buffers();      // running mean/var (not learned)
    void zero_grads();
    int64_t parameter_count();                    // learnable scalars

    // Parameter snapshot for rollout workers (same config required).
    void copy_from(UNet& other);

    const ModelConfig& config() const { return cfg_; }

  private:
    ModelConfig cfg_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

template <class T>
struct Adam {
    T beta1 = T(0.9), beta2 = T(0.999), eps = T(1e-8);
    int64_t t = 0;
    std::vector<std::vector<T>> m, v;

    // Classic Adam with coupled L2 weight decay (decay added to the gradient).
    void step(std::vector<ParamRef<T>> params, T lr, T weight_decay);
};

// (N,4,H,W) input from RGB + depth; depth is normalized by the 5 m far plane.
template <class T>
void fill_input(Tensor<T>& x, int batch_index, const ImageRGB& rgb, const DepthMap& depth);

}  // namespace ssia
