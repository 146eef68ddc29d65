#pragma once

#include <memory>
#include <string>

#include "ssia/net.hpp"

namespace ssia {

// Binary checkpoint layout (all integers and floats little-endian):
//   bytes 0..3   magic "SSIA"
//   u32          format version (currently 1)
//   i32 x 8      config echo: input_res, stem_ch, block_ch[3], trunk_ch,
//                embed_dim, force_classes
//   u32          tensor count
//   per tensor:  u16 name length, name bytes, u8 ndim (=4), i32 dims[4],
//                f32 data (row-major)
//   u8           optimizer-state flag
//   if set:      u64 adam step, then per learnable tensor f32 m[], f32 v[]
//   u64          global training step
// Tensors cover learnable parameters plus normalization running statistics.
constexpr uint32_t kCheckpointVersion = 1;

struct LoadedModel {
    ModelConfig cfg;
    std::unique_ptr<UNet<float>> net;
    Adam<float> opt;
    bool has_opt = false;
    int64_t global_step = 0;
};

void save_checkpoint(const std::string& path, UNet<float>& net, const Adam<float>* opt,
                     int64_t global_step);
LoadedModel load_checkpoint(const std::string& path);

}  // namespace ssia
