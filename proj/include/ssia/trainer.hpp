#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "ssia/membank.hpp"
#include "ssia/net.hpp"
#include "ssia/selfsup.hpp"
#include "ssia/world.hpp"

namespace ssia {

enum class OracleMode : uint8_t { none, interactions, masks, both };

struct TrainConfig {
    Split split = Split::NovelLayouts;
    SceneStyle scene_style = SceneStyle::standard;
    int input_res = 300;
    float view_m = 4.0f;
    float arm_length = 1.5f;
    bool noise = true;
    float light_jitter = 0.02f;
    float pixel_noise = 0.02f;

    // Schedule: an initial bank fill, then cycles of locations followed by K
    // sampled batches; K is annealed linearly per phase. Phase 1 trains
    // segmentation only (force gradients zeroed); phase 2 trains jointly.
    int initial_fill = 3000;
    int locations_per_cycle = 70;
    int phase1_locations = 62000;
    int phase2_locations = 0;
    int batch_size = 64;
    int k1_start = 15, k1_end = 45;
    int k2_start = 15, k2_end = 35;
    int n_greedy1 = 10, n_random1 = 10;
    int n_greedy2 = 5, n_random2 = 5;

    float lr = 5e-4f;
    float weight_decay = 1e-4f;
    float theta = 0.0f;

    bool use_superpixels = true;  // off: B+ := B (ablation)
    bool prioritized = true;      // off: uniform bank sampling (ablation)
    OracleMode oracle = OracleMode::none;

    float felz_k = 300.f;
    float felz_sigma = 0.8f;
    int felz_min_size = 60;

    size_t bank_capacity = 20000;
    uint64_t seed = 1;
    int jobs = 1;
    int checkpoint_every_cycles = 0;  // 0: phase ends only

    ModelConfig model_config() const {
        ModelConfig m;
        m.input_res = input_res;
        return m;
    }
    SelfSupParams selfsup_params() const {
        return {felz_k, felz_sigma, felz_min_size, use_superpixels};
    }
};

struct EscalationResult {
    Feedback fb = Feedback::unsuccessful;
    BinaryMask bplus;             // mask of the first successful step
    int moving_class = -1;        // class of the force that caused the change
    std::array<bool, 3> applied{};  // which force classes were applied
};

// The three-step force probe: f^{r-1} (when r>0), then f^r, then f^2 (when
// r<2), stopping at the first detected change. One direction per interaction.
// `frame` holds the latest render and is updated as forces are applied.
EscalationResult escalate(WorldState& world, const Camera& cam, int iu, int iv, int r, int direction,
                          const SelfSupParams& ss, const LabelMap* superpixels, ImageRGB& frame,
                          DepthMap& frame_depth, bool noise, std::mt19937_64& rng);

// One location: render the first view, pick greedy + random actions on it,
// run the escalations sequentially (state accumulates), return the bank entry.
BankEntry run_location(WorldState& world, const Camera& cam, UNet<float>& net, const TrainConfig& cfg,
                       int n_greedy, int n_random, std::mt19937_64& episode_rng);

struct TrainResult {
    int64_t steps = 0;
    int64_t locations = 0;
    std::string ckpt_phase1;
    std::string ckpt_final;
    std::string metrics_path;
};

TrainResult train(const TrainConfig& cfg, const std::string& out_dir);

}  // namespace ssia
