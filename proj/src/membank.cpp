#include "ssia/membank.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ssia/imageio.hpp"

namespace ssia {

void BankEntry::store_images(const ImageRGB& rgb, const DepthMap& depth) {
    res = rgb.h;
    rgb8.resize(static_cast<size_t>(res) * res * 3);
    depth16.resize(static_cast<size_t>(res) * res);
    for (size_t i = 0; i < rgb8.size(); ++i) rgb8[i] = quant8(rgb.px[i]);
    for (size_t i = 0; i < depth16.size(); ++i) depth16[i] = quant_depth(depth.d[i]);
}

ImageRGB BankEntry::load_rgb() const {
    ImageRGB img(res, res);
    for (size_t i = 0; i < rgb8.size(); ++i) img.px[i] = dequant8(rgb8[i]);
    return img;
}

DepthMap BankEntry::load_depth() const {
    DepthMap d(res, res);
    for (size_t i = 0; i < depth16.size(); ++i) d.d[i] = dequant_depth(depth16[i]);
    return d;
}

void Bank::insert(BankEntry entry) {
    entry.priority = 0.5;
    entry.fresh = true;
    entry.insertion_index = next_index_++;
    entries_.push_back(std::move(entry));
    if (entries_.size() > capacity_) entries_.pop_front();
}

void Bank::update_priority(size_t i, double score) {
    entries_[i].priority = priority_of(score);
    entries_[i].fresh = false;
}

double Bank::score_entry(const BankEntry& entry, const float* e, int dim, int h, int w) {
    double min_iou = 2.0;
    for (const SuccessRecord& rec : entry.successes) {
        if (rec.bplus.count() == 0) continue;
        const std::vector<double> d = embed_sq_distances(e, dim, h, w, rec.bplus);
        int inter = 0, uni = 0;
        for (size_t i = 0; i < d.size(); ++i) {
            const bool pred = d[i] < 1.0;
            const bool gt = rec.bplus.m[i] != 0;
            inter += pred && gt;
            uni += pred || gt;
        }
        const double iou = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
        min_iou = std::min(min_iou, iou);
    }
    return min_iou > 1.0 ? 0.5 : min_iou;
}

std::vector<size_t> Bank::sample(size_t n, std::mt19937_64& rng, bool prioritized) const {
    if (n > entries_.size()) throw std::invalid_argument("Bank::sample: n exceeds bank size");
    std::vector<double> weight(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i)
        weight[i] = prioritized ? entries_[i].priority : 1.0;
    std::vector<size_t> picked;
    picked.reserve(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (size_t k = 0; k < n; ++k) {
        double total = 0.0;
        for (double w : weight) total += w;
        double r = u(rng) * total;
        size_t chosen = entries_.size();
        for (size_t i = 0; i < weight.size(); ++i) {
            if (weight[i] <= 0.0) continue;
            r -= weight[i];
            if (r <= 0.0) {
                chosen = i;
                break;
            }
        }
        if (chosen == entries_.size()) {  // numeric tail: last positive weight
            for (size_t i = weight.size(); i-- > 0;)
                if (weight[i] > 0.0) {
                    chosen = i;
                    break;
                }
        }
        picked.push_back(chosen);
        weight[chosen] = 0.0;
    }
    return picked;
}

std::string Bank::stats_text(int64_t now_index) const {
    std::ostringstream out;
    out << "size " << entries_.size() << "\n";
    int fresh = 0;
    std::array<int, 10> hist{};
    double mean_priority = 0.0;
    int64_t oldest = now_index, newest = 0;
    for (const BankEntry& e : entries_) {
        fresh += e.fresh;
        mean_priority += e.priority;
        const int b = std::min(9, static_cast<int>(e.priority / 0.05));
        ++hist[b];
        oldest = std::min(oldest, e.insertion_index);
        newest = std::max(newest, e.insertion_index);
    }
    if (!entries_.empty()) mean_priority /= static_cast<double>(entries_.size());
    out << "fresh " << fresh << "\n";
    out << "mean_priority " << mean_priority << "\n";
    out << "priority_hist";
    for (int b : hist) out << " " << b;
    out << "\n";
    out << "insertion_range " << oldest << " " << newest << "\n";
    return out.str();
}

}  // namespace ssia
