// signature.hpp - palette quantization, region histograms and the one-hot
// binary signature encoding with its recovered color weights.

#ifndef RBIR_SIGNATURE_HPP
#define RBIR_SIGNATURE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rbir/features.hpp"
#include "rbir/imaging.hpp"

namespace rbir {

struct ColorPalette {
    std::vector<Rgb> colors;

    std::size_t size() const { return colors.size(); }
    void validate() const; // n >= 2, channels in [0,1], pairwise distinct
};

// Fixed 32-color lattice: R,G in {0.125,0.375,0.625,0.875}, B in {0.25,0.75},
// ordered R-major, then G, then B. A deterministic stand-in for a standard
// color table; swap in any palette file to change it.
ColorPalette default_palette();

// Palette file: one color per line, three decimals in [0,1].
ColorPalette load_palette(const std::string& path);
void save_palette(const std::string& path, const ColorPalette& palette);

// Nearest palette entry by Euclidean RGB distance; ties to the lowest index.
std::size_t nearest_palette_color(const Rgb& pixel, const ColorPalette& palette);

// Normalized palette histogram (sums to 1) over the region's clipped pixel
// disk. Throws DataError when the disk contains no pixels.
struct RegionHistogram {
    std::vector<double> values;
};
RegionHistogram region_histogram(const RasterImage& img, const FeatureRegion& region,
                                 const ColorPalette& palette);

// Concatenated m-bit one-hot blocks, region-major: block (region i, color j)
// occupies bits [(i*n + j)*m, ...). Bit 1 of block 1 is the MSB of the
// packed array.
class ImageSignature {
public:
    ImageSignature() = default;
    ImageSignature(std::uint32_t image_id, std::size_t region_count, std::size_t palette_size,
                   std::size_t block_width);

    std::uint32_t image_id() const { return image_id_; }
    void set_image_id(std::uint32_t id) { image_id_ = id; }
    std::size_t region_count() const { return region_count_; }
    std::size_t palette_size() const { return palette_size_; }
    std::size_t block_width() const { return block_width_; }
    std::size_t bit_length() const { return region_count_ * palette_size_ * block_width_; }

    // Bit positions within a block are 1-indexed, as in the encoding rule.
    void set_block_bit(std::size_t region, std::size_t color, std::size_t position);
    bool test_block_bit(std::size_t region, std::size_t color, std::size_t position) const;
    // 1-indexed position of the single set bit, or 0 when the block is empty.
    std::size_t block_bit_position(std::size_t region, std::size_t color) const;

    std::string to_hex() const;
    static ImageSignature from_hex(std::uint32_t image_id, std::size_t region_count,
                                   std::size_t palette_size, std::size_t block_width,
                                   const std::string& hex);

    bool same_bits(const ImageSignature& other) const;

private:
    std::uint32_t image_id_ = 0;
    std::size_t region_count_ = 0;
    std::size_t palette_size_ = 0;
    std::size_t block_width_ = 0;
    std::vector<std::uint8_t> bytes_;
};

// One-hot block for a normalized histogram value: bit
// clamp(ceil((h + 0.05) * m), 1, m) is set. Returned as the 1-indexed
// position.
std::size_t encode_block_position(double h, std::size_t m);

// Full signature: per region (detection order), per palette color, one
// encoded block of the region's normalized histogram value.
ImageSignature image_signature(std::uint32_t image_id, const std::vector<FeatureRegion>& regions,
                               const RasterImage& img, const ColorPalette& palette,
                               std::size_t block_width);

// Sum over set bits of 100 * position / m.
double block_weight_from_position(std::size_t position, std::size_t m);
double block_weight(const ImageSignature& sig, std::size_t region, std::size_t color);

// Per palette color, the block weights summed across regions.
struct WeightVector {
    std::vector<double> weights;

    double total() const {
        double t = 0.0;
        for (double w : weights) t += w;
        return t;
    }
};
WeightVector signature_weights(const ImageSignature& sig);

} // namespace rbir

#endif // RBIR_SIGNATURE_HPP
