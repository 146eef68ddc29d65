#pragma once

#include <random>
#include <vector>

#include "ssia/image.hpp"
#include "ssia/net.hpp"

namespace ssia {

struct ActionProposal {
    int u = 0, v = 0;      // seed pixel, output resolution
    int iu = 0, iv = 0;    // input-resolution counterpart (center of the 3x block)
    int force_class = 0;   // argmax of the force logits at the seed
    BinaryMask mask;       // output resolution; disjoint across proposals
    float confidence = 0;  // logistic of the seed's interaction score
};

struct SelectResult {
    std::vector<ActionProposal> proposals;
    // Seeds that fell outside their refined cluster (mask kept them anyway).
    int degenerate_seeds = 0;
};

// One sample's head outputs, class-major planes.
struct HeadView {
    const float* s = nullptr;
    const float* m = nullptr;
    const float* e = nullptr;
    int dim = 16;
    int h = 0, w = 0;
};

HeadView head_view(const UNet<float>::Out& out, int batch_index);

// Greedy clustering inference: pick the highest-score unsuppressed pixel,
// read its force class, refine once through the embedding neighborhood
// (distance < 1 to the seed, then < 1 to that set's mean), emit the cluster
// as a mask proposal and suppress it. Stops after n_max proposals or when all
// remaining scores fall below theta. Argmax ties break row-major.
SelectResult select_actions(const HeadView& hv, int n_max, float theta);

struct RandomAction {
    int u = 0, v = 0;  // output resolution
    int force_class = 0;
};

// Exploration actions: uniform pixels, uniform force classes.
std::vector<RandomAction> random_actions(int n, int h, int w, std::mt19937_64& rng);

}  // namespace ssia
