#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "ssia/headgrads.hpp"
#include "ssia/image.hpp"

namespace ssia {

struct SuccessRecord {
    int u = 0, v = 0;   // output-resolution interaction point
    int r = 0;          // predicted force class at interaction time
    Feedback fb = Feedback::correct;
    BinaryMask bplus;   // supervision mask, output resolution
};

// One location's snapshot: the first view plus everything its interactions
// produced. Images are stored quantized (8-bit rgb, 16-bit depth).
struct BankEntry {
    int res = 0;
    std::vector<uint8_t> rgb8;
    std::vector<uint16_t> depth16;
    std::vector<SuccessRecord> successes;
    std::vector<PointRec> failures;
    double priority = 0.5;
    bool fresh = true;  // not yet used in an update
    int64_t insertion_index = -1;

    void store_images(const ImageRGB& rgb, const DepthMap& depth);
    ImageRGB load_rgb() const;
    DepthMap load_depth() const;
};

// Fixed-capacity replay store. New entries carry priority 0.5 until their
// first update; updated priorities live in [0.02, 0.27]. Eviction is strictly
// oldest-first. Single-writer: only the trainer thread mutates the bank.
class Bank {
  public:
    explicit Bank(size_t capacity = 20000) : capacity_(capacity) {}

    void insert(BankEntry entry);
    size_t size() const { return entries_.size(); }
    BankEntry& entry(size_t i) { return entries_[i]; }
    const BankEntry& entry(size_t i) const { return entries_[i]; }

    static double priority_of(double score) { return (score - 0.5) * (score - 0.5) + 0.02; }
    void update_priority(size_t i, double score);

    // Min IoU between each stored mask and the model's predicted mask
    // (embedding distance below 1 to the mask mean); 0.5 when the entry has
    // no masks. e is one sample's embedding field, class-major dim*h*w.
    static double score_entry(const BankEntry& entry, const float* e, int dim, int h, int w);

    // Priority-proportional sampling without replacement (uniform when
    // prioritized is off). Throws if n exceeds the bank size.
    std::vector<size_t> sample(size_t n, std::mt19937_64& rng, bool prioritized = true) const;

    // size / priority histogram / age summary, one line per bucket
    std::string stats_text(int64_t now_index) const;

  private:
    size_t capacity_;
    std::deque<BankEntry> entries_;
    int64_t next_index_ = 0;
};

}  // namespace ssia
