// opencv_decoder.cpp - PNG/JPEG decoding through OpenCV imgcodecs.
// Compiled only when OpenCV is found; the core never depends on it.

#include "rbir/imaging.hpp"

#include <opencv2/imgcodecs.hpp>

namespace rbir {

namespace {

class OpenCvDecoder : public ImageDecoder {
public:
    std::string name() const override { return "opencv"; }

    bool handles_extension(const std::string& ext) const override {
        return ext == "png" || ext == "jpg" || ext == "jpeg";
    }

    RasterImage decode_file(const std::string& path) const override {
        cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
        if (bgr.empty()) throw DataError("cannot decode image: " + path);
        RasterImage img(bgr.cols, bgr.rows);
        for (int y = 0; y < bgr.rows; ++y) {
            const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
            for (int x = 0; x < bgr.cols; ++x) {
                Rgb& px = img.at(x, y);
                px.r = row[x][2] / 255.0;
                px.g = row[x][1] / 255.0;
                px.b = row[x][0] / 255.0;
            }
        }
        return img;
    }
};

} // namespace

std::unique_ptr<ImageDecoder> make_opencv_decoder() {
    return std::make_unique<OpenCvDecoder>();
}

} // namespace rbir
