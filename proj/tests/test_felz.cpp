#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "ssia/image.hpp"

using namespace ssia;

TEST_CASE("flat image is one superpixel") {
    ImageRGB img(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            img.at(y, x, 0) = 0.2f;
            img.at(y, x, 1) = 0.7f;
            img.at(y, x, 2) = 0.4f;
        }
    const LabelMap lm = felzenszwalb(img, 300.f, 0.8f, 20);
    CHECK(lm.n_labels == 1);
}

TEST_CASE("two flat halves with a strong boundary give two superpixels") {
    ImageRGB img(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            const bool left = x < 20;
            img.at(y, x, 0) = left ? 0.9f : 0.1f;
            img.at(y, x, 1) = left ? 0.1f : 0.8f;
            img.at(y, x, 2) = 0.2f;
        }
    const LabelMap lm = felzenszwalb(img, 300.f, 0.f, 20);
    CHECK(lm.n_labels == 2);
    CHECK(lm.at(0, 0) != lm.at(0, 39));
    for (int y = 0; y < 40; ++y) {
        CHECK(lm.at(y, 5) == lm.at(0, 0));
        CHECK(lm.at(y, 35) == lm.at(0, 39));
    }
}

TEST_CASE("min_size is honored on iid noise") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    ImageRGB img(30, 30);
    for (float& v : img.px) v = u(rng);
    const LabelMap lm = felzenszwalb(img, 50.f, 0.5f, 100);
    std::vector<int> size(lm.n_labels, 0);
    for (int32_t id : lm.ids) ++size[id];
    for (int s : size) CHECK(s >= 100);
}

TEST_CASE("labels are a contiguous partition") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    ImageRGB img(25, 25);
    for (float& v : img.px) v = u(rng);
    const LabelMap lm = felzenszwalb(img, 100.f, 0.8f, 10);
    CHECK(lm.n_labels >= 1);
    std::vector<int> seen(lm.n_labels, 0);
    for (int32_t id : lm.ids) {
        REQUIRE(id >= 0);
        REQUIRE(id < lm.n_labels);
        seen[id] = 1;
    }
    for (int s : seen) CHECK(s == 1);
}

TEST_CASE("deterministic across runs") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    ImageRGB img(35, 35);
    for (float& v : img.px) v = u(rng);
    const LabelMap a = felzenszwalb(img, 120.f, 0.8f, 15);
    const LabelMap b = felzenszwalb(img, 120.f, 0.8f, 15);
    CHECK(a.n_labels == b.n_labels);
    CHECK(a.ids == b.ids);
}

TEST_CASE("parameter validation") {
    ImageRGB img(8, 8);
    CHECK_THROWS(felzenszwalb(img, 0.f, 0.8f, 10));
    CHECK_THROWS(felzenszwalb(img, 100.f, 0.8f, 0));
}
