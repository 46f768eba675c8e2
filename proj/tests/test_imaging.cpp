#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rbir/imaging.hpp"

using namespace rbir;
using rbir::testing::TempDir;
using rbir::testing::constant_image;

namespace {

std::vector<unsigned char> ppm_bytes(const std::string& header,
                                     const std::vector<unsigned char>& pixels) {
    std::vector<unsigned char> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), pixels.begin(), pixels.end());
    return bytes;
}

} // namespace

TEST_CASE("ppm: 1x1 extremes map to 1.0 and 0.0") {
    const RasterImage white = decode_ppm(ppm_bytes("P6\n1 1\n255\n", {255, 255, 255}));
    CHECK(white.width == 1);
    CHECK(white.height == 1);
    CHECK(white.at(0, 0) == Rgb{1.0, 1.0, 1.0});

    const RasterImage black = decode_ppm(ppm_bytes("P6\n1 1\n255\n", {0, 0, 0}));
    CHECK(black.at(0, 0) == Rgb{0.0, 0.0, 0.0});
}

TEST_CASE("ppm: channels scale by 1/255") {
    const RasterImage img =
        decode_ppm(ppm_bytes("P6\n2 1\n255\n", {255, 0, 0, 0, 255, 0}));
    CHECK(img.at(0, 0) == Rgb{1.0, 0.0, 0.0});
    CHECK(img.at(1, 0) == Rgb{0.0, 1.0, 0.0});
    const RasterImage mid = decode_ppm(ppm_bytes("P6\n1 1\n255\n", {128, 64, 17}));
    CHECK(mid.at(0, 0).r == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
    CHECK(mid.at(0, 0).g == doctest::Approx(64.0 / 255.0).epsilon(1e-12));
    CHECK(mid.at(0, 0).b == doctest::Approx(17.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("ppm: comments and odd whitespace in the header") {
    const RasterImage img = decode_ppm(
        ppm_bytes("P6 # magic\n# a comment line\n  2\t1 # dims\n255\n", {1, 2, 3, 4, 5, 6}));
    CHECK(img.width == 2);
    CHECK(img.height == 1);
}

TEST_CASE("ppm: malformed streams are data errors") {
    CHECK_THROWS_AS(decode_ppm(ppm_bytes("P5\n1 1\n255\n", {0})), DataError);
    CHECK_THROWS_AS(decode_ppm(ppm_bytes("P6\n1 1\n65535\n", {0, 0, 0, 0, 0, 0})), DataError);
    CHECK_THROWS_AS(decode_ppm(ppm_bytes("P6\n0 1\n255\n", {})), DataError);
    CHECK_THROWS_AS(decode_ppm(ppm_bytes("P6\n2 2\n255\n", {9, 9, 9})), DataError);
    CHECK_THROWS_AS(decode_ppm(std::vector<unsigned char>{}), DataError);
}

TEST_CASE("ppm: write/decode round trip quantizes to the nearest byte") {
    TempDir tmp("imaging");
    RasterImage img(constant_image(3, 2, Rgb{0.2, 0.5, 0.8}));
    img.at(1, 1) = Rgb{0.123, 0.001, 0.999};
    const std::string path = tmp.file("rt.ppm");
    write_ppm(path, img);
    const RasterImage back = decode_image(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const Rgb& a = img.at(x, y);
            const Rgb& b = back.at(x, y);
            CHECK(std::abs(b.r - a.r) <= 0.5 / 255.0 + 1e-12);
            CHECK(std::abs(b.g - a.g) <= 0.5 / 255.0 + 1e-12);
            CHECK(std::abs(b.b - a.b) <= 0.5 / 255.0 + 1e-12);
        }
}

TEST_CASE("registry: ppm supported, unknown extensions rejected") {
    const DecoderRegistry registry = DecoderRegistry::with_builtins();
    CHECK(registry.supports("x.ppm"));
    CHECK(registry.supports("X.PPM"));
    CHECK_FALSE(registry.supports("x.gif"));
    CHECK_THROWS_AS(registry.decode("nonexistent.ppm"), DataError);
    CHECK_THROWS_AS(registry.decode("whatever.gif"), DataError);
}

TEST_CASE("resize: k x k input returns identical pixels") {
    SplitMix64 rng(11);
    RasterImage img = constant_image(8, 8, Rgb{});
    for (Rgb& p : img.pixels) p = Rgb{rng.next_double(), rng.next_double(), rng.next_double()};
    const RasterImage out = resize_to_square(img, 8);
    REQUIRE(out.pixels.size() == img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(out.pixels[i] == img.pixels[i]);
}

TEST_CASE("resize: constants stay constant under upscaling") {
    const RasterImage out = resize_to_square(constant_image(2, 2, Rgb{0.25, 0.5, 0.75}), 4);
    REQUIRE(out.width == 4);
    REQUIRE(out.height == 4);
    for (const Rgb& p : out.pixels) {
        CHECK(p.r == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(p.g == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p.b == doctest::Approx(0.75).epsilon(1e-12));
    }
}

TEST_CASE("resize: hand-evaluated bilinear weights on a 4x2 ramp") {
    // Columns hold 0, 1/3, 2/3, 1. Pixel-center mapping puts output x=0 at
    // source 0.5 -> (0 + 1/3)/2 = 1/6, and x=1 at source 2.5 -> 5/6.
    RasterImage ramp = constant_image(4, 2, Rgb{});
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 4; ++x) {
            const double v = x / 3.0;
            ramp.at(x, y) = Rgb{v, v, v};
        }
    const RasterImage out = resize_to_square(ramp, 2);
    REQUIRE(out.width == 2);
    REQUIRE(out.height == 2);
    for (int y = 0; y < 2; ++y) {
        CHECK(out.at(0, y).g == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
        CHECK(out.at(1, y).g == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    }
}

TEST_CASE("resize: output range bounded by input range, k=0 rejected") {
    SplitMix64 rng(5);
    RasterImage img = constant_image(7, 5, Rgb{});
    double lo = 1.0, hi = 0.0;
    for (Rgb& p : img.pixels) {
        p = Rgb{rng.next_double(), rng.next_double(), rng.next_double()};
        lo = std::min({lo, p.r, p.g, p.b});
        hi = std::max({hi, p.r, p.g, p.b});
    }
    for (int k : {3, 9, 16}) {
        const RasterImage out = resize_to_square(img, k);
        for (const Rgb& p : out.pixels)
            for (double v : {p.r, p.g, p.b}) {
                CHECK(v >= lo - 1e-12);
                CHECK(v <= hi + 1e-12);
            }
    }
    CHECK_THROWS_AS(resize_to_square(img, 0), DataError);
}

TEST_CASE("ycbcr: matrix rows reproduce the published triples") {
    const auto check_pixel = [](const Rgb& rgb, double y, double cb, double cr) {
        const YCbCrPlanes planes = rgb_to_ycbcr(constant_image(1, 1, rgb));
        CHECK(std::abs(planes.y.at(0, 0) - y) <= 1e-3);
        CHECK(std::abs(planes.cb.at(0, 0) - cb) <= 1e-3);
        CHECK(std::abs(planes.cr.at(0, 0) - cr) <= 1e-3);
    };
    check_pixel(Rgb{0, 0, 0}, 16.0, 128.0, 128.0);
    check_pixel(Rgb{1, 1, 1}, 235.030, 128.0, 128.0);
    check_pixel(Rgb{1, 0, 0}, 81.481, 90.203, 240.0);
}

TEST_CASE("ycbcr: affine in the input, constant images give constant planes") {
    const Rgb p{0.7, 0.2, 0.4};
    const double alpha = 0.35;
    const YCbCrPlanes full = rgb_to_ycbcr(constant_image(1, 1, p));
    const YCbCrPlanes scaled =
        rgb_to_ycbcr(constant_image(1, 1, Rgb{alpha * p.r, alpha * p.g, alpha * p.b}));
    const double offsets[3] = {16.0, 128.0, 128.0};
    const double f[3] = {full.y.at(0, 0), full.cb.at(0, 0), full.cr.at(0, 0)};
    const double s[3] = {scaled.y.at(0, 0), scaled.cb.at(0, 0), scaled.cr.at(0, 0)};
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs((s[i] - offsets[i]) - alpha * (f[i] - offsets[i])) <= 1e-9);

    const YCbCrPlanes planes = rgb_to_ycbcr(constant_image(3, 3, Rgb{0.3, 0.6, 0.9}));
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            CHECK(planes.y.at(x, y) == planes.y.at(0, 0));
            CHECK(planes.cb.at(x, y) == planes.cb.at(0, 0));
            CHECK(planes.cr.at(x, y) == planes.cr.at(0, 0));
        }
}

TEST_CASE("ycbcr: plane ranges implied by the matrix on random inputs") {
    SplitMix64 rng(99);
    RasterImage img = constant_image(16, 16, Rgb{});
    for (Rgb& p : img.pixels) p = Rgb{rng.next_double(), rng.next_double(), rng.next_double()};
    const YCbCrPlanes planes = rgb_to_ycbcr(img);
    for (double v : planes.y.values) {
        CHECK(v >= 16.0 - 1e-9);
        CHECK(v <= 235.031);
    }
    for (const ScalarField* f : {&planes.cb, &planes.cr})
        for (double v : f->values) {
            CHECK(v >= 16.0 - 1e-9);
            CHECK(v <= 240.0 + 1e-9);
        }
}

TEST_CASE("scalar field: edge-duplicating reflection") {
    ScalarField f(3, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) f.at(x, y) = 10.0 * y + x;
    CHECK(f.at_reflect(-1, 0) == f.at(0, 0));
    CHECK(f.at_reflect(-2, 0) == f.at(1, 0));
    CHECK(f.at_reflect(3, 0) == f.at(2, 0));
    CHECK(f.at_reflect(4, 1) == f.at(1, 1));
    CHECK(f.at_reflect(0, -1) == f.at(0, 0));
    CHECK(f.at_reflect(0, 2) == f.at(0, 1));
}
