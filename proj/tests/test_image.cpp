#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ssia/image.hpp"

using namespace ssia;

namespace {

ImageRGB solid(int h, int w, float r, float g, float b) {
    ImageRGB img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    return img;
}

}  // namespace

TEST_CASE("rgb_to_hsv primaries and gray") {
    ImageRGB img(1, 3);
    // pure red, gray, pure green
    img.at(0, 0, 0) = 1.f;
    img.at(0, 1, 0) = img.at(0, 1, 1) = img.at(0, 1, 2) = 0.5f;
    img.at(0, 2, 1) = 1.f;
    const ImageRGB hsv = rgb_to_hsv(img);
    CHECK(hsv.at(0, 0, 0) == doctest::Approx(0.f));
    CHECK(hsv.at(0, 0, 1) == doctest::Approx(1.f));
    CHECK(hsv.at(0, 0, 2) == doctest::Approx(1.f));
    CHECK(hsv.at(0, 1, 0) == doctest::Approx(0.f));
    CHECK(hsv.at(0, 1, 1) == doctest::Approx(0.f));
    CHECK(hsv.at(0, 1, 2) == doctest::Approx(0.5f));
    // hand-evaluated hexcone value for pure green
    CHECK(hsv.at(0, 2, 0) == doctest::Approx(1.f / 3.f));
    CHECK(hsv.at(0, 2, 1) == doctest::Approx(1.f));
    CHECK(hsv.at(0, 2, 2) == doctest::Approx(1.f));
}

TEST_CASE("rgb_to_hsv round trips through hsv_to_rgb") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (int i = 0; i < 200; ++i) {
        const float r = u(rng), g = u(rng), b = u(rng);
        ImageRGB img = solid(1, 1, r, g, b);
        const ImageRGB hsv = rgb_to_hsv(img);
        float r2, g2, b2;
        hsv_to_rgb(hsv.at(0, 0, 0), hsv.at(0, 0, 1), hsv.at(0, 0, 2), r2, g2, b2);
        CHECK(r2 == doctest::Approx(r).epsilon(1e-4));
        CHECK(g2 == doctest::Approx(g).epsilon(1e-4));
        CHECK(b2 == doctest::Approx(b).epsilon(1e-4));
    }
}

TEST_CASE("hsv_diff identity, circular hue, componentwise value") {
    ImageRGB a = solid(2, 2, 0.3f, 0.6f, 0.9f);
    const ImageRGB ha = rgb_to_hsv(a);
    const ImageRGB zero = hsv_diff(ha, ha);
    for (float v : zero.px) CHECK(v == 0.f);

    ImageRGB h1(1, 1), h2(1, 1);
    h1.at(0, 0, 0) = 0.95f;
    h2.at(0, 0, 0) = 0.05f;
    const ImageRGB d = hsv_diff(h1, h2);
    CHECK(std::fabs(d.at(0, 0, 0)) == doctest::Approx(0.10f));

    ImageRGB v1(1, 1), v2(1, 1);
    v1.at(0, 0, 0) = v2.at(0, 0, 0) = 0.2f;
    v1.at(0, 0, 1) = v2.at(0, 0, 1) = 0.4f;
    v1.at(0, 0, 2) = 0.8f;
    v2.at(0, 0, 2) = 0.6f;
    const ImageRGB dv = hsv_diff(v1, v2);
    CHECK(dv.at(0, 0, 0) == doctest::Approx(0.f));
    CHECK(dv.at(0, 0, 1) == doctest::Approx(0.f));
    CHECK(dv.at(0, 0, 2) == doctest::Approx(0.2f));
}

TEST_CASE("hsv_diff hue magnitude bounded by 0.5") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (int i = 0; i < 500; ++i) {
        ImageRGB a(1, 1), b(1, 1);
        a.at(0, 0, 0) = u(rng);
        b.at(0, 0, 0) = u(rng);
        const ImageRGB d = hsv_diff(a, b);
        CHECK(std::fabs(d.at(0, 0, 0)) <= 0.5f + 1e-6f);
    }
}

TEST_CASE("mean_pool constants, single impulse, shape") {
    ImageRGB c = solid(300, 300, 0.37f, 0.11f, 0.93f);
    const ImageRGB p = mean_pool(c, 3);
    CHECK(p.h == 100);
    CHECK(p.w == 100);
    CHECK(p.at(31, 77, 0) == doctest::Approx(0.37f));
    CHECK(p.at(0, 0, 2) == doctest::Approx(0.93f));

    Grid g(3, 3);
    g.at(1, 2) = 9.f;
    const Grid pg = mean_pool(g, 3);
    CHECK(pg.h == 1);
    CHECK(pg.at(0, 0) == doctest::Approx(1.0f));

    CHECK_THROWS(mean_pool(Grid(10, 10), 3));
}

TEST_CASE("mean_pool preserves the global mean") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    Grid g(30, 30);
    double sum = 0;
    for (float& v : g.v) {
        v = u(rng);
        sum += v;
    }
    const Grid p = mean_pool(g, 3);
    double psum = 0;
    for (float v : p.v) psum += v;
    CHECK(psum * 9.0 == doctest::Approx(sum).epsilon(1e-5));
}

TEST_CASE("gaussian_kernel5 values") {
    const Grid k = gaussian_kernel5();
    CHECK(k.at(2, 2) == doctest::Approx(1.0f));
    CHECK(k.at(2, 3) == doctest::Approx(std::exp(-1.f)));
    CHECK(k.at(0, 0) == doctest::Approx(std::exp(-8.f)));
    CHECK(k.at(4, 4) == doctest::Approx(std::exp(-8.f)));
    // deliberately unnormalized
    float sum = 0.f;
    for (float v : k.v) sum += v;
    CHECK(sum == doctest::Approx(3.1413667).epsilon(1e-5));
}

TEST_CASE("convolve5 impulse response and zero padding") {
    const Grid k = gaussian_kernel5();

    Grid zero(20, 20);
    const Grid cz = convolve5(zero, k);
    for (float v : cz.v) CHECK(v == 0.f);

    Grid imp(20, 20);
    imp.at(10, 10) = 1.f;
    const Grid ci = convolve5(imp, k);
    for (int u = -2; u <= 2; ++u)
        for (int v = -2; v <= 2; ++v)
            CHECK(ci.at(10 + u, 10 + v) == doctest::Approx(k.at(u + 2, v + 2)));
    CHECK(ci.at(10, 13) == 0.f);

    Grid corner(20, 20);
    corner.at(0, 0) = 1.f;
    const Grid cc = convolve5(corner, k);
    CHECK(cc.at(0, 0) == doctest::Approx(1.0f));
    CHECK(cc.at(2, 2) == doctest::Approx(std::exp(-8.f)));
    float total = 0.f;
    for (float v : cc.v) total += v;
    // truncated quadrant: only the 3x3 in-bounds part of the kernel remains
    const float row = 1.f + 2 * std::exp(-1.f) + 2 * std::exp(-4.f);
    const float part = 1.f + std::exp(-1.f) + std::exp(-4.f);
    CHECK(total == doctest::Approx(part * part).epsilon(1e-5));
    (void)row;
}

TEST_CASE("convolve5 is linear") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    const Grid k = gaussian_kernel5();
    Grid x(15, 15), y(15, 15);
    for (float& v : x.v) v = u(rng);
    for (float& v : y.v) v = u(rng);
    const float a = 1.7f, b = -0.6f;
    Grid combo(15, 15);
    for (size_t i = 0; i < combo.v.size(); ++i) combo.v[i] = a * x.v[i] + b * y.v[i];
    const Grid cc = convolve5(combo, k);
    const Grid cx = convolve5(x, k), cy = convolve5(y, k);
    for (size_t i = 0; i < cc.v.size(); ++i)
        CHECK(cc.v[i] == doctest::Approx(a * cx.v[i] + b * cy.v[i]).epsilon(1e-5));
}
