// imaging.hpp - image decoding, size normalization and the RGB -> YCbCr
// conversion feeding feature detection.

#ifndef RBIR_IMAGING_HPP
#define RBIR_IMAGING_HPP

#include <memory>
#include <string>
#include <vector>

#include "rbir/common.hpp"

namespace rbir {

// Decoded image, row-major, channels in [0,1].
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    RasterImage() = default;
    RasterImage(int w, int h, Rgb fill = Rgb{})
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Y in [16, 235.03], Cb and Cr in [16, 240]; same dimensions as the source.
struct YCbCrPlanes {
    ScalarField y;
    ScalarField cb;
    ScalarField cr;

    int width() const { return y.width; }
    int height() const { return y.height; }
};

// Decoder plug-in. PPM ships built in; PNG/JPEG attach through here so the
// core stays testable with hand-written PPM fixtures.
class ImageDecoder {
public:
    virtual ~ImageDecoder() = default;
    virtual std::string name() const = 0;
    virtual bool handles_extension(const std::string& lowercase_ext) const = 0;
    virtual RasterImage decode_file(const std::string& path) const = 0;
};

class DecoderRegistry {
public:
    // Registry with the built-in PPM (P6) decoder already attached.
    static DecoderRegistry with_builtins();

    void register_decoder(std::unique_ptr<ImageDecoder> decoder);
    bool supports(const std::string& path) const;
    // Throws DataError for unsupported or undecodable files.
    RasterImage decode(const std::string& path) const;

private:
    std::vector<std::unique_ptr<ImageDecoder>> decoders_;
};

#ifdef RBIR_WITH_OPENCV_DECODER
// PNG/JPEG decoding backed by OpenCV imgcodecs.
std::unique_ptr<ImageDecoder> make_opencv_decoder();
#endif

// Parses a PPM (P6, maxval 255) byte stream. Channels come out as byte/255.
RasterImage decode_ppm(const std::vector<unsigned char>& bytes);
RasterImage decode_image(const std::string& path);

// Writes img as binary PPM, rounding channels to bytes.
void write_ppm(const std::string& path, const RasterImage& img);

// Bilinear resample to k x k with pixel-center alignment; identity when the
// input is already k x k.
RasterImage resize_to_square(const RasterImage& img, int k);

// Per pixel (Y,Cb,Cr) = M * (R,G,B) + (16,128,128) with
//   M = [  65.481  128.553   24.996
//         -37.797  -74.203  112
//         112      -93.786  -18.214 ].
YCbCrPlanes rgb_to_ycbcr(const RasterImage& img);

} // namespace rbir

#endif // RBIR_IMAGING_HPP
