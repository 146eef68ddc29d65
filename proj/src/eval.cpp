#include "ssia/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "ssia/imageio.hpp"
#include "ssia/panel.hpp"

namespace ssia {

double iou_mask(const BinaryMask& a, const BinaryMask& b) {
    int inter = 0, uni = 0;
    for (size_t i = 0; i < a.m.size(); ++i) {
        const bool x = a.m[i], y = b.m[i];
        inter += x && y;
        uni += x || y;
    }
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

double iou_box(int ax0, int ay0, int ax1, int ay1, int bx0, int by0, int bx1, int by1) {
    if (ax1 < ax0 || bx1 < bx0) return 0.0;
    const int ix0 = std::max(ax0, bx0), iy0 = std::max(ay0, by0);
    const int ix1 = std::min(ax1, bx1), iy1 = std::min(ay1, by1);
    const long inter = std::max(0, ix1 - ix0 + 1) * static_cast<long>(std::max(0, iy1 - iy0 + 1));
    const long area_a = (ax1 - ax0 + 1) * static_cast<long>(ay1 - ay0 + 1);
    const long area_b = (bx1 - bx0 + 1) * static_cast<long>(by1 - by0 + 1);
    const long uni = area_a + area_b - inter;
    return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

namespace {

struct PooledDet {
    float conf;
    int image;
    int index;
};

// Greedy matcher for one threshold; returns tp flags in pooled order.
void match_all(const std::vector<ImageDetections>& images, double iou_thr, bool use_mask,
               bool require_mass, std::vector<PooledDet>& pooled, std::vector<uint8_t>& tp,
               int& n_gt) {
    pooled.clear();
    n_gt = 0;
    for (size_t im = 0; im < images.size(); ++im) {
        n_gt += static_cast<int>(images[im].gts.size());
        for (size_t d = 0; d < images[im].dets.size(); ++d)
            pooled.push_back({images[im].dets[d].confidence, static_cast<int>(im), static_cast<int>(d)});
    }
    std::stable_sort(pooled.begin(), pooled.end(), [](const PooledDet& a, const PooledDet& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        if (a.image != b.image) return a.image < b.image;
        return a.index < b.index;
    });
    std::vector<std::vector<uint8_t>> used(images.size());
    for (size_t im = 0; im < images.size(); ++im) used[im].assign(images[im].gts.size(), 0);
    tp.assign(pooled.size(), 0);
    for (size_t k = 0; k < pooled.size(); ++k) {
        const Detection& det = images[pooled[k].image].dets[pooled[k].index];
        const auto& gts = images[pooled[k].image].gts;
        double best = iou_thr;
        int best_gt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[pooled[k].image][g]) continue;
            if (require_mass && gts[g].mass_class != det.mass_class) continue;
            const double iou = use_mask
                                   ? iou_mask(det.mask, gts[g].mask)
                                   : iou_box(det.x0, det.y0, det.x1, det.y1, gts[g].x0, gts[g].y0,
                                             gts[g].x1, gts[g].y1);
            if (iou >= best && (best_gt < 0 || iou > best)) {
                best = iou;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            used[pooled[k].image][best_gt] = 1;
            tp[k] = 1;
        }
    }
}

}  // namespace

double average_precision(const std::vector<ImageDetections>& images, double iou_thr, bool use_mask,
                         bool require_mass_match) {
    std::vector<PooledDet> pooled;
    std::vector<uint8_t> tp;
    int n_gt = 0;
    match_all(images, iou_thr, use_mask, require_mass_match, pooled, tp, n_gt);
    if (n_gt == 0) return 0.0;

    // precision as a function of recall, then 101-point interpolation
    std::vector<double> precision(pooled.size()), recall(pooled.size());
    int tp_cum = 0;
    for (size_t k = 0; k < pooled.size(); ++k) {
        tp_cum += tp[k];
        precision[k] = static_cast<double>(tp_cum) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp_cum) / n_gt;
    }
    double ap = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        double p = 0.0;
        for (size_t k = 0; k < pooled.size(); ++k)
            if (recall[k] >= r) p = std::max(p, precision[k]);
        ap += p;
    }
    return ap / 101.0;
}

double integrated_ap(const std::vector<ImageDetections>& images, bool use_mask) {
    double sum = 0.0;
    for (int i = 0; i < 10; ++i) sum += average_precision(images, 0.5 + 0.05 * i, use_mask);
    return sum / 10.0;
}

MassMetrics mass_metrics(const std::vector<ImageDetections>& images) {
    MassMetrics mm;
    std::vector<PooledDet> pooled;
    std::vector<uint8_t> tp;
    int n_gt = 0;
    // Recreate the @0.5 bbox matching and read off the matched class pairs.
    pooled.clear();
    for (size_t im = 0; im < images.size(); ++im)
        for (size_t d = 0; d < images[im].dets.size(); ++d)
            pooled.push_back({images[im].dets[d].confidence, static_cast<int>(im), static_cast<int>(d)});
    std::stable_sort(pooled.begin(), pooled.end(), [](const PooledDet& a, const PooledDet& b) {
        if (a.conf != b.conf) return a.conf > b.conf;
        if (a.image != b.image) return a.image < b.image;
        return a.index < b.index;
    });
    std::vector<std::vector<uint8_t>> used(images.size());
    for (size_t im = 0; im < images.size(); ++im) used[im].assign(images[im].gts.size(), 0);
    for (const PooledDet& pd : pooled) {
        const Detection& det = images[pd.image].dets[pd.index];
        const auto& gts = images[pd.image].gts;
        double best = 0.5;
        int best_gt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[pd.image][g]) continue;
            const double iou =
                iou_box(det.x0, det.y0, det.x1, det.y1, gts[g].x0, gts[g].y0, gts[g].x1, gts[g].y1);
            if (iou >= best && (best_gt < 0 || iou > best)) {
                best = iou;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            used[pd.image][best_gt] = 1;
            ++mm.counts[gts[best_gt].mass_class][det.mass_class];
            ++mm.n_matched;
        }
    }

    int present = 0;
    double acc_sum = 0.0;
    for (int r = 0; r < 3; ++r) {
        int row = 0;
        for (int c = 0; c < 3; ++c) row += mm.counts[r][c];
        if (row == 0) continue;
        ++present;
        for (int c = 0; c < 3; ++c) mm.confusion[r][c] = static_cast<double>(mm.counts[r][c]) / row;
        acc_sum += mm.confusion[r][r];
    }
    mm.mean_per_class_acc = present > 0 ? acc_sum / present : 0.0;
    mm.ap_mass_bbox = average_precision(images, 0.5, /*use_mask=*/false, /*require_mass_match=*/true);
    (void)tp;
    (void)n_gt;
    return mm;
}

MetricsReport compute_report(const std::vector<ImageDetections>& images) {
    MetricsReport r;
    r.n_images = static_cast<int>(images.size());
    for (const auto& im : images) {
        r.n_gt += static_cast<int>(im.gts.size());
        r.n_det += static_cast<int>(im.dets.size());
    }
    r.bbox_ap50 = average_precision(images, 0.5, false);
    r.bbox_ap = integrated_ap(images, false);
    r.mask_ap50 = average_precision(images, 0.5, true);
    r.mask_ap = integrated_ap(images, true);
    r.mass = mass_metrics(images);
    return r;
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << "images " << n_images << "  gt " << n_gt << "  detections " << n_det;
    if (gt_dropped_subcell > 0) out << "  (sub-cell gt dropped: " << gt_dropped_subcell << ")";
    out << "\n\n";
    out << "                 AP@0.5      AP\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "bounding box     %6.4f   %6.4f\n", bbox_ap50, bbox_ap);
    out << buf;
    std::snprintf(buf, sizeof buf, "mask             %6.4f   %6.4f\n", mask_ap50, mask_ap);
    out << buf;
    out << "\n";
    std::snprintf(buf, sizeof buf, "mean per-class mass accuracy  %6.4f   (matched pairs: %d)\n",
                  mass.mean_per_class_acc, mass.n_matched);
    out << buf;
    std::snprintf(buf, sizeof buf, "AP@0.5 (mass & bbox)          %6.4f\n", mass.ap_mass_bbox);
    out << buf;
    out << "\nmass confusion (rows = ground truth: light, medium, heavy; row-normalized)\n";
    for (int r = 0; r < 3; ++r) {
        std::snprintf(buf, sizeof buf, "  [%6.4f %6.4f %6.4f]   counts [%d %d %d]\n",
                      mass.confusion[r][0], mass.confusion[r][1], mass.confusion[r][2],
                      mass.counts[r][0], mass.counts[r][1], mass.counts[r][2]);
        out << buf;
    }
    return out.str();
}

BinaryMask downsample_majority(const BinaryMask& m, int factor) {
    BinaryMask out(m.h / factor, m.w / factor);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            int votes = 0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx) votes += m.at(y * factor + dy, x * factor + dx) != 0;
            out.at(y, x) = 2 * votes > factor * factor;
        }
    return out;
}

ImageDetections collect_image(const std::vector<ActionProposal>& proposals,
                              const std::vector<GroundTruthInstance>& gts, int out_res, int* dropped) {
    ImageDetections im;
    for (const ActionProposal& p : proposals) {
        Detection d;
        d.mask = p.mask;
        d.confidence = p.confidence;
        d.mass_class = p.force_class;
        d.x0 = out_res;
        d.y0 = out_res;
        for (int y = 0; y < d.mask.h; ++y)
            for (int x = 0; x < d.mask.w; ++x)
                if (d.mask.at(y, x)) {
                    d.x0 = std::min(d.x0, x);
                    d.y0 = std::min(d.y0, y);
                    d.x1 = std::max(d.x1, x);
                    d.y1 = std::max(d.y1, y);
                }
        if (d.x1 < d.x0) continue;  // empty proposal carries no detection
        im.dets.push_back(std::move(d));
    }
    for (const GroundTruthInstance& g : gts) {
        if (!g.reachable) continue;
        GtInstance gi;
        gi.mask = downsample_majority(g.mask, g.mask.h / out_res);
        gi.mass_class = g.mass_class;
        gi.x0 = out_res;
        gi.y0 = out_res;
        for (int y = 0; y < gi.mask.h; ++y)
            for (int x = 0; x < gi.mask.w; ++x)
                if (gi.mask.at(y, x)) {
                    gi.x0 = std::min(gi.x0, x);
                    gi.y0 = std::min(gi.y0, y);
                    gi.x1 = std::max(gi.x1, x);
                    gi.y1 = std::max(gi.y1, y);
                }
        if (gi.x1 < gi.x0) {
            if (dropped) ++*dropped;
            continue;
        }
        im.gts.push_back(std::move(gi));
    }
    return im;
}

MetricsReport evaluate(UNet<float>& net, const std::vector<SceneSpec>& scenes, const EvalOptions& opt) {
    std::vector<ImageDetections> images;
    images.reserve(scenes.size());
    int dropped = 0;
    int panels_written = 0;
    const int out_res = net.config().output_res();
    Tensor<float> x(1, 4, opt.input_res, opt.input_res);

    for (size_t i = 0; i < scenes.size(); ++i) {
        WorldState world(scenes[i]);
        Camera cam = scene_camera(scenes[i], opt.input_res, opt.view_m);
        cam.pose.reach = opt.reach;
        std::mt19937_64 rng(opt.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
        const RenderResult view = render(world, cam, opt.noise, rng);
        fill_input(x, 0, view.rgb, view.depth);
        UNet<float>::Out out = net.forward(x, /*train=*/false);
        SelectResult sel = select_actions(head_view(out, 0), opt.n_actions, opt.theta);
        const std::vector<GroundTruthInstance> gts = ground_truth(world, cam);
        images.push_back(collect_image(sel.proposals, gts, out_res, &dropped));

        if (!opt.panels_dir.empty() && panels_written < opt.max_panels) {
            PanelData pd;
            pd.input = &view.rgb;
            pd.out = &out;
            pd.batch_index = 0;
            pd.proposals = &sel.proposals;
            pd.gts = &gts;
            const ImageRGB panel = render_panel(pd);
            std::filesystem::create_directories(opt.panels_dir);
            write_ppm(opt.panels_dir + "/panel_" + std::to_string(i) + ".ppm", panel);
            ++panels_written;
        }
    }
    MetricsReport report = compute_report(images);
    report.gt_dropped_subcell = dropped;
    return report;
}

}  // namespace ssia
