#pragma once

#include <string>

#include "ssia/image.hpp"

namespace ssia {

// RGB images are stored as binary PPM (P6, 8 bits per channel); depth maps as
// binary PGM (P5, 16 bit) with the linear mapping 0..5 m -> 0..65535.
// Round trips are lossless at those bit depths. Malformed files throw.

constexpr float kDepthFarPlane = 5.0f;

void write_ppm(const std::string& path, const ImageRGB& img);
ImageRGB read_ppm(const std::string& path);

void write_depth_pgm(const std::string& path, const DepthMap& d);
DepthMap read_depth_pgm(const std::string& path);

// Quantization helpers shared with the in-memory image store.
uint8_t quant8(float v);                // [0,1] -> 0..255
uint16_t quant_depth(float meters);     // 0..5m -> 0..65535
float dequant8(uint8_t q);
float dequant_depth(uint16_t q);

}  // namespace ssia
