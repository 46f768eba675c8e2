// imaging.cpp - PPM decoding, bilinear resize and YCbCr conversion.

#include "rbir/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rbir {

namespace {

std::string lowercase_extension(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    const std::size_t slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

// PPM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
class PpmTokenizer {
public:
    PpmTokenizer(const std::vector<unsigned char>& bytes, std::size_t pos)
        : bytes_(bytes), pos_(pos) {}

    std::string next_token() {
        skip_separators();
        std::string tok;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
            tok.push_back(static_cast<char>(bytes_[pos_++]));
        if (tok.empty()) throw DataError("truncated PPM header");
        return tok;
    }

    // Position just past the single whitespace byte that terminates the header.
    std::size_t pixel_data_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw DataError("malformed PPM header: missing separator before pixel data");
        return pos_ + 1;
    }

private:
    void skip_separators() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    std::size_t pos_;
};

class PpmDecoder : public ImageDecoder {
public:
    std::string name() const override { return "ppm"; }
    bool handles_extension(const std::string& ext) const override { return ext == "ppm"; }
    RasterImage decode_file(const std::string& path) const override {
        return decode_ppm(read_file_bytes(path));
    }
};

} // namespace

RasterImage decode_ppm(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw DataError("unsupported format: not a P6 PPM stream");
    PpmTokenizer tok(bytes, 2);
    const long long width = parse_int(tok.next_token(), "PPM width");
    const long long height = parse_int(tok.next_token(), "PPM height");
    const long long maxval = parse_int(tok.next_token(), "PPM maxval");
    if (width <= 0 || height <= 0) throw DataError("zero-dimension PPM image");
    if (maxval != 255) throw DataError("unsupported PPM maxval (only 255 supported)");

    const std::size_t offset = tok.pixel_data_offset();
    const std::size_t npixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - offset < npixels * 3) throw DataError("truncated PPM pixel data");

    RasterImage img(static_cast<int>(width), static_cast<int>(height));
    const unsigned char* p = bytes.data() + offset;
    for (std::size_t i = 0; i < npixels; ++i) {
        img.pixels[i].r = p[3 * i + 0] / 255.0;
        img.pixels[i].g = p[3 * i + 1] / 255.0;
        img.pixels[i].b = p[3 * i + 2] / 255.0;
    }
    return img;
}

void write_ppm(const std::string& path, const RasterImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Rgb& px = img.at(x, y);
            row[3 * x + 0] = static_cast<unsigned char>(std::lround(std::clamp(px.r, 0.0, 1.0) * 255.0));
            row[3 * x + 1] = static_cast<unsigned char>(std::lround(std::clamp(px.g, 0.0, 1.0) * 255.0));
            row[3 * x + 2] = static_cast<unsigned char>(std::lround(std::clamp(px.b, 0.0, 1.0) * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw DataError("write failed: " + path);
}

DecoderRegistry DecoderRegistry::with_builtins() {
    DecoderRegistry reg;
    reg.register_decoder(std::make_unique<PpmDecoder>());
#ifdef RBIR_WITH_OPENCV_DECODER
    reg.register_decoder(make_opencv_decoder());
#endif
    return reg;
}

void DecoderRegistry::register_decoder(std::unique_ptr<ImageDecoder> decoder) {
    decoders_.push_back(std::move(decoder));
}

bool DecoderRegistry::supports(const std::string& path) const {
    const std::string ext = lowercase_extension(path);
    for (const auto& d : decoders_)
        if (d->handles_extension(ext)) return true;
    return false;
}

RasterImage DecoderRegistry::decode(const std::string& path) const {
    const std::string ext = lowercase_extension(path);
    for (const auto& d : decoders_) {
        if (d->handles_extension(ext)) return d->decode_file(path);
    }
    throw DataError("unsupported format: " + path);
}

RasterImage decode_image(const std::string& path) {
    return DecoderRegistry::with_builtins().decode(path);
}

RasterImage resize_to_square(const RasterImage& img, int k) {
    if (k <= 0) throw DataError("resize_to_square: k must be positive");
    if (img.width == k && img.height == k) return img;

    RasterImage out(k, k);
    const double sx = static_cast<double>(img.width) / k;
    const double sy = static_cast<double>(img.height) / k;
    for (int oy = 0; oy < k; ++oy) {
        const double src_y = (oy + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(src_y));
        const double fy = src_y - y0;
        const int yc0 = std::clamp(y0, 0, img.height - 1);
        const int yc1 = std::clamp(y0 + 1, 0, img.height - 1);
        for (int ox = 0; ox < k; ++ox) {
            const double src_x = (ox + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x));
            const double fx = src_x - x0;
            const int xc0 = std::clamp(x0, 0, img.width - 1);
            const int xc1 = std::clamp(x0 + 1, 0, img.width - 1);

            const Rgb& p00 = img.at(xc0, yc0);
            const Rgb& p10 = img.at(xc1, yc0);
            const Rgb& p01 = img.at(xc0, yc1);
            const Rgb& p11 = img.at(xc1, yc1);
            const double w00 = (1.0 - fx) * (1.0 - fy);
            const double w10 = fx * (1.0 - fy);
            const double w01 = (1.0 - fx) * fy;
            const double w11 = fx * fy;
            Rgb& dst = out.at(ox, oy);
            dst.r = w00 * p00.r + w10 * p10.r + w01 * p01.r + w11 * p11.r;
            dst.g = w00 * p00.g + w10 * p10.g + w01 * p01.g + w11 * p11.g;
            dst.b = w00 * p00.b + w10 * p10.b + w01 * p01.b + w11 * p11.b;
        }
    }
    return out;
}

YCbCrPlanes rgb_to_ycbcr(const RasterImage& img) {
    YCbCrPlanes planes;
    planes.y = ScalarField(img.width, img.height);
    planes.cb = ScalarField(img.width, img.height);
    planes.cr = ScalarField(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const Rgb& p = img.pixels[i];
        planes.y.values[i] = 65.481 * p.r + 128.553 * p.g + 24.996 * p.b + 16.0;
        planes.cb.values[i] = -37.797 * p.r - 74.203 * p.g + 112.0 * p.b + 128.0;
        planes.cr.values[i] = 112.0 * p.r - 93.786 * p.g - 18.214 * p.b + 128.0;
    }
    return planes;
}

} // namespace rbir
