#pragma once

#include <array>
#include <string>
#include <vector>

#include "ssia/actsel.hpp"
#include "ssia/image.hpp"
#include "ssia/net.hpp"
#include "ssia/world.hpp"

namespace ssia {

struct Detection {
    BinaryMask mask;  // output resolution
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    float confidence = 0.f;
    int mass_class = 0;
};

struct GtInstance {
    BinaryMask mask;  // output resolution
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    int mass_class = 0;
};

struct ImageDetections {
    std::vector<Detection> dets;
    std::vector<GtInstance> gts;
};

double iou_mask(const BinaryMask& a, const BinaryMask& b);
double iou_box(int ax0, int ay0, int ax1, int ay1, int bx0, int by0, int bx1, int by1);

// Class-agnostic single-category AP: greedy matching in descending confidence,
// each ground truth matched at most once, 101-point interpolated precision.
// require_mass_match additionally demands the detection's mass class equal the
// ground truth's for a match to count.
double average_precision(const std::vector<ImageDetections>& images, double iou_thr, bool use_mask,
                         bool require_mass_match = false);

// Mean over IoU thresholds 0.5:0.05:0.95.
double integrated_ap(const std::vector<ImageDetections>& images, bool use_mask);

struct MassMetrics {
    double mean_per_class_acc = 0.0;                     // over classes present in gt matches
    std::array<std::array<double, 3>, 3> confusion{};    // row-normalized, rows = gt class
    std::array<std::array<int, 3>, 3> counts{};          // raw matched pairs
    double ap_mass_bbox = 0.0;                           // bbox AP@0.5 requiring mass match
    int n_matched = 0;
};

// Matches detections to ground truth at bbox IoU 0.5 (confidence order).
MassMetrics mass_metrics(const std::vector<ImageDetections>& images);

struct MetricsReport {
    double bbox_ap50 = 0, bbox_ap = 0, mask_ap50 = 0, mask_ap = 0;
    MassMetrics mass;
    int n_images = 0, n_gt = 0, n_det = 0;
    int gt_dropped_subcell = 0;  // reachable instances below one output cell
    std::string to_text() const;
};

MetricsReport compute_report(const std::vector<ImageDetections>& images);

struct EvalOptions {
    int n_actions = 10;
    float theta = 0.f;
    int input_res = 300;
    float view_m = 4.0f;
    float reach = 1.5f;
    uint64_t seed = 0;
    bool noise = true;
    std::string panels_dir;  // when set, write a composite per scene
    int max_panels = 12;
};

// Converts one proposal list + reachable ground truth into the match inputs.
// Ground-truth masks are majority-downsampled to the output resolution;
// sub-cell instances are dropped and counted.
ImageDetections collect_image(const std::vector<ActionProposal>& proposals,
                              const std::vector<GroundTruthInstance>& gts, int out_res,
                              int* dropped = nullptr);

// Single-observation inference over a scene set: render (noise on), forward,
// cluster, match against reachable ground truth. Never applies forces.
MetricsReport evaluate(UNet<float>& net, const std::vector<SceneSpec>& scenes,
                       const EvalOptions& opt);

BinaryMask downsample_majority(const BinaryMask& m, int factor);

}  // namespace ssia
