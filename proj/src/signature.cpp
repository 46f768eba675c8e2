// signature.cpp - palette handling and binary signature encoding.

#include "rbir/signature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rbir {

void ColorPalette::validate() const {
    if (colors.size() < 2) throw DataError("palette must contain at least 2 colors");
    for (const Rgb& c : colors) {
        if (c.r < 0.0 || c.r > 1.0 || c.g < 0.0 || c.g > 1.0 || c.b < 0.0 || c.b > 1.0)
            throw DataError("palette colors must lie in [0,1]^3");
    }
    for (std::size_t i = 0; i < colors.size(); ++i)
        for (std::size_t j = i + 1; j < colors.size(); ++j)
            if (colors[i] == colors[j]) throw DataError("palette colors must be pairwise distinct");
}

ColorPalette default_palette() {
    static const double rg_levels[] = {0.125, 0.375, 0.625, 0.875};
    static const double b_levels[] = {0.25, 0.75};
    ColorPalette palette;
    palette.colors.reserve(32);
    for (double r : rg_levels)
        for (double g : rg_levels)
            for (double b : b_levels) palette.colors.push_back(Rgb{r, g, b});
    return palette;
}

ColorPalette load_palette(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open palette file: " + path);
    ColorPalette palette;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        Rgb c;
        if (!(fields >> c.r >> c.g >> c.b))
            throw DataError("palette file " + path + ": malformed line " + std::to_string(lineno));
        std::string extra;
        if (fields >> extra)
            throw DataError("palette file " + path + ": trailing data on line " +
                            std::to_string(lineno));
        palette.colors.push_back(c);
    }
    palette.validate();
    return palette;
}

void save_palette(const std::string& path, const ColorPalette& palette) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write palette file: " + path);
    for (const Rgb& c : palette.colors)
        out << format_double(c.r) << " " << format_double(c.g) << " " << format_double(c.b)
            << "\n";
}

std::size_t nearest_palette_color(const Rgb& pixel, const ColorPalette& palette) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < palette.colors.size(); ++i) {
        const Rgb& c = palette.colors[i];
        const double dr = pixel.r - c.r;
        const double dg = pixel.g - c.g;
        const double db = pixel.b - c.b;
        const double d2 = dr * dr + dg * dg + db * db;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

RegionHistogram region_histogram(const RasterImage& img, const FeatureRegion& region,
                                 const ColorPalette& palette) {
    const double r2 = region.radius * region.radius;
    const int x_lo = std::max(0, static_cast<int>(std::ceil(region.cx - region.radius)));
    const int x_hi = std::min(img.width - 1, static_cast<int>(std::floor(region.cx + region.radius)));
    const int y_lo = std::max(0, static_cast<int>(std::ceil(region.cy - region.radius)));
    const int y_hi = std::min(img.height - 1, static_cast<int>(std::floor(region.cy + region.radius)));

    RegionHistogram hist;
    hist.values.assign(palette.size(), 0.0);
    std::size_t count = 0;
    for (int y = y_lo; y <= y_hi; ++y) {
        const double dy = y - region.cy;
        for (int x = x_lo; x <= x_hi; ++x) {
            const double dx = x - region.cx;
            if (dx * dx + dy * dy > r2) continue;
            hist.values[nearest_palette_color(img.at(x, y), palette)] += 1.0;
            ++count;
        }
    }
    if (count == 0) throw DataError("region histogram: region contains no pixels after clipping");
    for (double& v : hist.values) v /= static_cast<double>(count);
    return hist;
}

ImageSignature::ImageSignature(std::uint32_t image_id, std::size_t region_count,
                               std::size_t palette_size, std::size_t block_width)
    : image_id_(image_id),
      region_count_(region_count),
      palette_size_(palette_size),
      block_width_(block_width),
      bytes_((region_count * palette_size * block_width + 7) / 8, 0) {}

void ImageSignature::set_block_bit(std::size_t region, std::size_t color, std::size_t position) {
    const std::size_t bit = (region * palette_size_ + color) * block_width_ + (position - 1);
    bytes_[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
}

bool ImageSignature::test_block_bit(std::size_t region, std::size_t color,
                                    std::size_t position) const {
    const std::size_t bit = (region * palette_size_ + color) * block_width_ + (position - 1);
    return (bytes_[bit / 8] & (0x80u >> (bit % 8))) != 0;
}

std::size_t ImageSignature::block_bit_position(std::size_t region, std::size_t color) const {
    for (std::size_t p = 1; p <= block_width_; ++p)
        if (test_block_bit(region, color, p)) return p;
    return 0;
}

std::string ImageSignature::to_hex() const {
    static const char digits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(bytes_.size() * 2);
    for (std::uint8_t b : bytes_) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0x0f]);
    }
    return hex;
}

ImageSignature ImageSignature::from_hex(std::uint32_t image_id, std::size_t region_count,
                                        std::size_t palette_size, std::size_t block_width,
                                        const std::string& hex) {
    ImageSignature sig(image_id, region_count, palette_size, block_width);
    if (hex.size() != sig.bytes_.size() * 2)
        throw DataError("signature hex has wrong length for its dimensions");
    auto nibble = [&](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw DataError("signature hex contains a non-hex character");
    };
    for (std::size_t i = 0; i < sig.bytes_.size(); ++i)
        sig.bytes_[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    // Trailing pad bits beyond bit_length must be zero.
    for (std::size_t bit = sig.bit_length(); bit < sig.bytes_.size() * 8; ++bit)
        if (sig.bytes_[bit / 8] & (0x80u >> (bit % 8)))
            throw DataError("signature hex has nonzero padding bits");
    return sig;
}

bool ImageSignature::same_bits(const ImageSignature& other) const {
    return region_count_ == other.region_count_ && palette_size_ == other.palette_size_ &&
           block_width_ == other.block_width_ && bytes_ == other.bytes_;
}

std::size_t encode_block_position(double h, std::size_t m) {
    if (m < 2) throw DataError("block width m must be >= 2");
    const auto raw = static_cast<long long>(std::ceil((h + 0.05) * static_cast<double>(m)));
    return static_cast<std::size_t>(std::clamp<long long>(raw, 1, static_cast<long long>(m)));
}

ImageSignature image_signature(std::uint32_t image_id, const std::vector<FeatureRegion>& regions,
                               const RasterImage& img, const ColorPalette& palette,
                               std::size_t block_width) {
    if (regions.empty()) throw DataError("image_signature: at least one region required");
    ImageSignature sig(image_id, regions.size(), palette.size(), block_width);
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const RegionHistogram hist = region_histogram(img, regions[i], palette);
        for (std::size_t j = 0; j < palette.size(); ++j)
            sig.set_block_bit(i, j, encode_block_position(hist.values[j], block_width));
    }
    return sig;
}

double block_weight_from_position(std::size_t position, std::size_t m) {
    if (position == 0) return 0.0;
    return 100.0 * static_cast<double>(position) / static_cast<double>(m);
}

double block_weight(const ImageSignature& sig, std::size_t region, std::size_t color) {
    double w = 0.0;
    for (std::size_t p = 1; p <= sig.block_width(); ++p)
        if (sig.test_block_bit(region, color, p))
            w += block_weight_from_position(p, sig.block_width());
    return w;
}

WeightVector signature_weights(const ImageSignature& sig) {
    WeightVector wv;
    wv.weights.assign(sig.palette_size(), 0.0);
    for (std::size_t i = 0; i < sig.region_count(); ++i)
        for (std::size_t j = 0; j < sig.palette_size(); ++j)
            wv.weights[j] += block_weight(sig, i, j);
    return wv;
}

} // namespace rbir
