#include "ssia/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ssia {

uint8_t quant8(float v) {
    const float c = std::clamp(v, 0.f, 1.f);
    return static_cast<uint8_t>(std::lround(c * 255.f));
}

uint16_t quant_depth(float meters) {
    const float c = std::clamp(meters, 0.f, kDepthFarPlane);
    return static_cast<uint16_t>(std::lround(c / kDepthFarPlane * 65535.f));
}

float dequant8(uint8_t q) { return q / 255.f; }
float dequant_depth(uint16_t q) { return q / 65535.f * kDepthFarPlane; }

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        return tok;
    }
    throw std::runtime_error("raster file: unexpected end of header");
}

int parse_int(std::istream& in, const char* what) {
    const std::string tok = next_token(in);
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("raster file: bad ") + what);
    }
}

}  // namespace

void write_ppm(const std::string& path, const ImageRGB& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(img.w) * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = quant8(img.at(y, x, c));
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ImageRGB read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    if (next_token(in) != "P6") throw std::runtime_error("not a P6 ppm: " + path);
    const int w = parse_int(in, "width"), h = parse_int(in, "height"), maxval = parse_int(in, "maxval");
    if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("unsupported ppm header: " + path);
    in.get();  // single whitespace after maxval
    ImageRGB img(h, w);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), row.size());
        if (!in) throw std::runtime_error("truncated ppm: " + path);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = dequant8(row[x * 3 + c]);
    }
    return img;
}

void write_depth_pgm(const std::string& path, const DepthMap& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P5\n" << d.w << " " << d.h << "\n65535\n";
    std::vector<uint8_t> row(static_cast<size_t>(d.w) * 2);
    for (int y = 0; y < d.h; ++y) {
        for (int x = 0; x < d.w; ++x) {
            const uint16_t q = quant_depth(d.at(y, x));
            row[x * 2] = static_cast<uint8_t>(q >> 8);  // pgm is big-endian
            row[x * 2 + 1] = static_cast<uint8_t>(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

DepthMap read_depth_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    if (next_token(in) != "P5") throw std::runtime_error("not a P5 pgm: " + path);
    const int w = parse_int(in, "width"), h = parse_int(in, "height"), maxval = parse_int(in, "maxval");
    if (w <= 0 || h <= 0 || maxval != 65535) throw std::runtime_error("unsupported pgm header: " + path);
    in.get();
    DepthMap d(h, w);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 2);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), row.size());
        if (!in) throw std::runtime_error("truncated pgm: " + path);
        for (int x = 0; x < w; ++x) {
            const uint16_t q = static_cast<uint16_t>((row[x * 2] << 8) | row[x * 2 + 1]);
            d.at(y, x) = dequant_depth(q);
        }
    }
    return d;
}

}  // namespace ssia
