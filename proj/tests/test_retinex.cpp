#include <catch2/catch_amalgamated.hpp>

#include "relight/retinex.hpp"
#include "support/test_images.hpp"

using relight::DecomposerConfig;
using relight::ImageTensor;

TEST_CASE("decompose on a constant gray image") {
    const ImageTensor s(8, 8, 1, 0.5);
    const auto pair = relight::decompose(s, DecomposerConfig{});
    for (double v : pair.illumination.data()) CHECK(v == Catch::Approx(0.5).margin(1e-12));
    for (double v : pair.reflectance.data()) CHECK(v == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("decompose floors the illumination at epsilon") {
    const DecomposerConfig cfg;
    const ImageTensor s(6, 6, 3, cfg.epsilon / 2.0);
    const auto pair = relight::decompose(s, cfg);
    for (double v : pair.illumination.data()) CHECK(v == cfg.epsilon);
    for (double v : pair.reflectance.data()) CHECK(v == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("decompose round trip where the source stays below the illumination") {
    const ImageTensor s = testsupport::random_image(8, 8, 3, 71);
    DecomposerConfig cfg;
    cfg.smoothing_sigma = 2.0;
    const auto pair = relight::decompose(s, cfg);

    double worst = 0.0;
    for (int r = 0; r < s.height(); ++r) {
        for (int c = 0; c < s.width(); ++c) {
            for (int ch = 0; ch < s.channels(); ++ch) {
                if (s.at(r, c, ch) <= pair.illumination.at(r, c, 0)) {
                    const double recon = pair.reflectance.at(r, c, ch) * pair.illumination.at(r, c, 0);
                    worst = std::max(worst, std::abs(recon - s.at(r, c, ch)));
                }
            }
        }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("illumination stays positive for arbitrary input") {
    const DecomposerConfig cfg;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto pair = relight::decompose(testsupport::random_image(10, 7, 3, seed), cfg);
        for (double v : pair.illumination.data()) CHECK(v >= cfg.epsilon);
    }
}

TEST_CASE("pseudo_target collapses to the round trip for identical inputs") {
    const ImageTensor s = testsupport::random_image(8, 8, 3, 81);
    const DecomposerConfig cfg;
    const auto pair = relight::decompose(s, cfg);
    const auto target = relight::pseudo_target(s, s, cfg);
    for (int r = 0; r < s.height(); ++r) {
        for (int c = 0; c < s.width(); ++c) {
            for (int ch = 0; ch < s.channels(); ++ch) {
                if (s.at(r, c, ch) <= pair.illumination.at(r, c, 0)) {
                    CHECK(target.at(r, c, ch) == Catch::Approx(s.at(r, c, ch)).margin(1e-6));
                }
            }
        }
    }
}

TEST_CASE("pseudo_target relights the low reflectance by the enhanced illumination") {
    const ImageTensor low(8, 8, 3, 0.2);
    const ImageTensor enhanced(8, 8, 3, 0.8);
    const auto target = relight::pseudo_target(low, enhanced, DecomposerConfig{});
    for (double v : target.data()) CHECK(v == Catch::Approx(0.8).margin(1e-9));
}

TEST_CASE("pseudo_target with a fully dark enhanced image falls to the epsilon floor") {
    const DecomposerConfig cfg;
    const ImageTensor low = testsupport::random_image(8, 8, 3, 91);
    const ImageTensor dark(8, 8, 3, 0.0);
    const auto target = relight::pseudo_target(low, dark, cfg);
    for (double v : target.data()) CHECK(v <= cfg.epsilon);
}

TEST_CASE("pseudo_target rejects mismatched shapes") {
    CHECK_THROWS_AS(
        relight::pseudo_target(ImageTensor(4, 4, 3, 0.5), ImageTensor(4, 5, 3, 0.5), {}),
        std::invalid_argument);
}

TEST_CASE("raising a constant enhanced image never lowers the pseudo target") {
    const DecomposerConfig cfg;
    const ImageTensor low(6, 6, 3, 0.3);
    double prev = -1.0;
    for (double level : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto target = relight::pseudo_target(low, ImageTensor(6, 6, 3, level), cfg);
        const double value = target.at(3, 3, 0);
        CHECK(value >= prev);
        prev = value;
    }
}
