// fixtures.hpp - synthetic images, signatures, datasets and scratch
// directories shared by the test suites.

#ifndef RBIR_TESTS_FIXTURES_HPP
#define RBIR_TESTS_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "rbir/common.hpp"
#include "rbir/imaging.hpp"
#include "rbir/sgraph.hpp"
#include "rbir/signature.hpp"

namespace rbir::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("rbir-" + tag + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline RasterImage constant_image(int width, int height, const Rgb& color) {
    RasterImage img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<std::size_t>(width) * height, color);
    return img;
}

// Bright axis-aligned square [x0, x1] x [y0, y1] (inclusive) on a dark field.
inline RasterImage bright_square_image(int size, int x0, int y0, int x1, int y1,
                                       double bg = 0.1, double fg = 0.9) {
    RasterImage img = constant_image(size, size, Rgb{bg, bg, bg});
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) img.at(x, y) = Rgb{fg, fg, fg};
    return img;
}

// Gray Gaussian blob of scale sigma at the image center.
inline RasterImage blob_image(int size, double sigma, double bg = 0.1, double amp = 0.8) {
    RasterImage img = constant_image(size, size, Rgb{bg, bg, bg});
    const double c = (size - 1) / 2.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double r2 = (x - c) * (x - c) + (y - c) * (y - c);
            const double v = bg + amp * std::exp(-r2 / (2.0 * sigma * sigma));
            img.at(x, y) = Rgb{v, v, v};
        }
    return img;
}

// Signature whose blocks are all position 1 except explicit overrides
// (region, color) -> 1-indexed position.
inline ImageSignature scripted_signature(std::uint32_t id, std::size_t regions,
                                         std::size_t palette_size, std::size_t m,
                                         const std::map<std::pair<std::size_t, std::size_t>,
                                                        std::size_t>& overrides = {}) {
    ImageSignature sig(id, regions, palette_size, m);
    for (std::size_t r = 0; r < regions; ++r)
        for (std::size_t c = 0; c < palette_size; ++c) {
            const auto it = overrides.find({r, c});
            sig.set_block_bit(r, c, it == overrides.end() ? 1 : it->second);
        }
    return sig;
}

inline ImageSignature random_signature(std::uint32_t id, SplitMix64& rng,
                                       std::size_t palette_size = 32, std::size_t m = 10,
                                       std::size_t max_regions = 3) {
    const std::size_t regions = 1 + rng.next_below(max_regions);
    ImageSignature sig(id, regions, palette_size, m);
    for (std::size_t r = 0; r < regions; ++r)
        for (std::size_t c = 0; c < palette_size; ++c)
            sig.set_block_bit(r, c, 1 + rng.next_below(m));
    return sig;
}

// Distance scripted by an explicit symmetric lookup table keyed on image ids;
// lets cluster-rule traces use distances real EMD cannot produce.
class TableDistance {
public:
    void set(std::uint32_t a, std::uint32_t b, double d) {
        table_[key(a, b)] = d;
    }
    double operator()(const ImageSignature& x, const ImageSignature& y) const {
        if (x.image_id() == y.image_id()) return 0.0;
        const auto it = table_.find(key(x.image_id(), y.image_id()));
        if (it == table_.end())
            throw std::logic_error("TableDistance: unscripted pair " +
                                   std::to_string(x.image_id()) + "," +
                                   std::to_string(y.image_id()));
        return it->second;
    }
    SignatureDistanceFn fn() const {
        return [copy = *this](const ImageSignature& a, const ImageSignature& b) {
            return copy(a, b);
        };
    }

private:
    static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }
    std::map<std::uint64_t, double> table_;
};

// Deterministic symmetric pseudo-distance with d(a,a) = 0; not a metric,
// which the graph never requires.
inline SignatureDistanceFn pseudo_distance() {
    return [](const ImageSignature& a, const ImageSignature& b) {
        if (a.image_id() == b.image_id()) return 0.0;
        std::uint32_t lo = a.image_id(), hi = b.image_id();
        if (lo > hi) std::swap(lo, hi);
        SplitMix64 rng((static_cast<std::uint64_t>(lo) << 32) | hi);
        return 0.05 + rng.next_double();
    };
}

// Ten well-separated theme colors sitting on cells of the default palette
// lattice, one per synthetic class.
inline std::vector<Rgb> theme_colors() {
    return {
        Rgb{0.125, 0.125, 0.25}, Rgb{0.875, 0.125, 0.25}, Rgb{0.125, 0.875, 0.25},
        Rgb{0.875, 0.875, 0.75}, Rgb{0.375, 0.125, 0.75}, Rgb{0.125, 0.375, 0.75},
        Rgb{0.875, 0.375, 0.25}, Rgb{0.375, 0.875, 0.75}, Rgb{0.625, 0.625, 0.25},
        Rgb{0.625, 0.125, 0.75},
    };
}

// Color-themed synthetic image: theme-colored field, mild deterministic
// noise, and a few accent rectangles so the detector has corners to find.
inline RasterImage themed_image(const Rgb& theme, const Rgb& accent, int width, int height,
                                SplitMix64& rng) {
    RasterImage img = constant_image(width, height, theme);
    for (Rgb& p : img.pixels) {
        const double n = (rng.next_double() - 0.5) * 0.06;
        p.r = std::clamp(p.r + n, 0.0, 1.0);
        p.g = std::clamp(p.g + n, 0.0, 1.0);
        p.b = std::clamp(p.b + n, 0.0, 1.0);
    }
    const int rects = 2 + static_cast<int>(rng.next_below(2));
    for (int i = 0; i < rects; ++i) {
        const int w = 4 + static_cast<int>(rng.next_below(std::max(2, width / 4)));
        const int h = 4 + static_cast<int>(rng.next_below(std::max(2, height / 4)));
        const int x0 = static_cast<int>(rng.next_below(std::max(1, width - w)));
        const int y0 = static_cast<int>(rng.next_below(std::max(1, height - h)));
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) img.at(x, y) = accent;
    }
    return img;
}

// Writes classes/cNN/imgMM.ppm with one dominant theme per class; image
// sizes vary so the resize path is exercised.
inline void write_themed_dataset(const std::filesystem::path& root, std::size_t classes,
                                 std::size_t per_class, std::uint64_t seed = 7,
                                 int min_size = 48, int max_size = 72) {
    const std::vector<Rgb> themes = theme_colors();
    SplitMix64 rng(seed);
    for (std::size_t c = 0; c < classes; ++c) {
        const Rgb theme = themes[c % themes.size()];
        const Rgb accent = themes[(c + 3) % themes.size()];
        char class_name[8];
        std::snprintf(class_name, sizeof(class_name), "c%02zu", c);
        const std::filesystem::path dir = root / class_name;
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < per_class; ++i) {
            const int w = min_size + static_cast<int>(rng.next_below(max_size - min_size + 1));
            const int h = min_size + static_cast<int>(rng.next_below(max_size - min_size + 1));
            char name[16];
            std::snprintf(name, sizeof(name), "img%02zu.ppm", i);
            write_ppm((dir / name).string(), themed_image(theme, accent, w, h, rng));
        }
    }
}

} // namespace rbir::testing

#endif // RBIR_TESTS_FIXTURES_HPP
