#pragma once

#include <cstdint>
#include <vector>

#include "ssia/image.hpp"

namespace ssia {

enum class Feedback : uint8_t { correct, too_small, too_large, unsuccessful };
const char* feedback_name(Feedback f);

struct PointRec {
    int u = 0, v = 0;  // output-resolution pixel
};

struct ForceRec {
    int u = 0, v = 0;
    int r = 0;  // predicted force class at interaction time
    Feedback fb = Feedback::correct;
};

struct MaskTarget {
    const BinaryMask* mask = nullptr;  // B+ at output resolution
    int area = 0;
};

// All gradient fields are ascent directions on the head outputs and are
// computed in double so they can be checked against high-precision
// re-evaluations. Fields are row-major h*w (score), 3*h*w (force, class-major)
// and dim*h*w (embedding).

// Impulse maps of interaction points convolved with the unnormalized 5x5
// gaussian kernel. Repeated points accumulate.
void build_fg_bg(const std::vector<PointRec>& successful, const std::vector<PointRec>& unsuccessful,
                 int h, int w, std::vector<double>& fg, std::vector<double>& bg);

// Per-record class column: correct -> {r}; too_small -> classes above r;
// too_large -> classes below r. Each column is made zero-mean with unit L1
// norm, summed into the field, and the field is then kernel-convolved per
// class. Throws on the two combinations the escalation protocol cannot emit.
std::vector<double> build_force_targets(const std::vector<ForceRec>& records, int h, int w);

std::vector<double> score_grad(const float* s, const double* fg, const double* bg, int h, int w);

// Includes the 0.1 damping factor relative to the other heads.
std::vector<double> force_grad(const float* m, const double* ft, int h, int w);

// Per mask: squared-distance field to the mask-mean embedding (the mean is a
// constant, no gradient flows into it), the on/off-mask gradient on that
// distance, chain through the clamped +/-1 squared-norm backward, weight by
// 1/area, and sum over masks. Empty target list yields a zero field.
std::vector<double> embed_grad(const float* e, int dim, int h, int w,
                               const std::vector<MaskTarget>& targets);

// d_p = squared L2 distance of each pixel's embedding to the mask mean
// (shared by the embedding gradient, bank scoring, and tests).
std::vector<double> embed_sq_distances(const float* e, int dim, int h, int w, const BinaryMask& mask);

// Scalar kernels (exposed for the oracle suites).
double score_grad_scalar(double fg, double bg, double s);
double force_grad_scalar(double ft, double m);
double embed_dist_grad_scalar(bool on_mask, double d);

}  // namespace ssia
