#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ssia/imageio.hpp"

using namespace ssia;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() / ("ssia_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("ppm round trip is lossless at 8 bits") {
    TmpDir tmp;
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    ImageRGB img(17, 23);
    for (float& v : img.px) v = u(rng);
    write_ppm(tmp.file("a.ppm"), img);
    const ImageRGB back = read_ppm(tmp.file("a.ppm"));
    REQUIRE(back.h == img.h);
    REQUIRE(back.w == img.w);
    for (size_t i = 0; i < img.px.size(); ++i) CHECK(quant8(back.px[i]) == quant8(img.px[i]));
    // second round trip is the identity on the stored bytes
    write_ppm(tmp.file("b.ppm"), back);
    const ImageRGB back2 = read_ppm(tmp.file("b.ppm"));
    CHECK(back2.px == back.px);
}

TEST_CASE("depth quantization endpoints") {
    CHECK(quant_depth(0.f) == 0);
    CHECK(quant_depth(5.f) == 65535);
    const uint16_t mid = quant_depth(2.5f);
    CHECK(std::abs(static_cast<int>(mid) - 32768) <= 1);
}

TEST_CASE("pgm round trip is lossless at 16 bits") {
    TmpDir tmp;
    std::mt19937 rng(2);
    std::uniform_real_distribution<float> u(0.f, 5.f);
    DepthMap d(11, 13);
    for (float& v : d.d) v = u(rng);
    write_depth_pgm(tmp.file("d.pgm"), d);
    const DepthMap back = read_depth_pgm(tmp.file("d.pgm"));
    REQUIRE(back.h == d.h);
    for (size_t i = 0; i < d.d.size(); ++i) CHECK(quant_depth(back.d[i]) == quant_depth(d.d[i]));
}

TEST_CASE("malformed files throw") {
    TmpDir tmp;
    CHECK_THROWS(read_ppm(tmp.file("missing.ppm")));
    {
        std::ofstream f(tmp.file("bad.ppm"), std::ios::binary);
        f << "P6\n10 10\n255\n";
        f << "too short";
    }
    CHECK_THROWS(read_ppm(tmp.file("bad.ppm")));
    {
        std::ofstream f(tmp.file("bad_header.ppm"), std::ios::binary);
        f << "P3\n2 2\n255\n0 0 0";
    }
    CHECK_THROWS(read_ppm(tmp.file("bad_header.ppm")));
    {
        std::ofstream f(tmp.file("bad.pgm"), std::ios::binary);
        f << "P5\n4 4\n255\n";  // wrong maxval for depth
    }
    CHECK_THROWS(read_depth_pgm(tmp.file("bad.pgm")));
}
