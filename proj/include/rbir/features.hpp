// features.hpp - weighted Gaussian scale space, Harris response, interest
// point detection and LoG characteristic radii.

#ifndef RBIR_FEATURES_HPP
#define RBIR_FEATURES_HPP

#include <optional>
#include <vector>

#include "rbir/imaging.hpp"

namespace rbir {

struct ScaleSpaceParams {
    // Harris coefficient in Det(M) - alpha * Tr(M)^2.
    double alpha = 0.05;
    // Differentiation scales, strictly increasing: 1.2 * 1.44^i, i = 0..4.
    std::vector<double> sigma_d_levels = {1.2, 1.728, 2.48832, 3.5831808, 5.159780352};
    // Integration scale ratio: sigma_i = sigma_ratio * sigma_d.
    double sigma_ratio = 1.4;
    // Detection threshold: fraction of the per-image maximum response,
    // unless an absolute override is set.
    double threshold_fraction = 0.01;
    std::optional<double> threshold_absolute;
    // Strict local maximum window half-width (1 -> 3x3).
    int neighborhood_radius = 1;
    // Cap on regions per image.
    int max_regions = 5;

    void validate() const;
};

struct InterestPoint {
    int x = 0;
    int y = 0;
    double scale = 0.0;    // sigma_d at detection
    double response = 0.0; // Harris measure value
};

// Feature circle; radius lies in (0, min(M,N)/2].
struct FeatureRegion {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
};

// Gaussian smoothing with a kernel truncated at 3*sigma, renormalized to
// unit sum; edge-duplicating reflective boundaries.
ScalarField gaussian_smooth(const ScalarField& field, double sigma);

// L(x,y,sigma_d) = (1/10) * G * (6 Y + 2 Cb + 2 Cr).
ScalarField smoothed_luminance(const YCbCrPlanes& planes, double sigma_d);

// Det(M) - alpha * Tr(M)^2 with M = sigma_d^2 * G(sigma_i) * [Lx^2 LxLy; LxLy Ly^2],
// derivatives by central differences on the smoothed field.
ScalarField harris_response(const ScalarField& smoothed, double sigma_i, double sigma_d,
                            double alpha);

// Threshold actually applied to a response field: the absolute override if
// configured, otherwise threshold_fraction times the field maximum (only
// when that maximum is positive).
std::optional<double> effective_threshold(const ScalarField& response,
                                          const ScaleSpaceParams& params);

// Strict local maxima at or above the threshold, response-descending, ties
// by (y,x), truncated to max_regions.
std::vector<InterestPoint> detect_interest_points(const ScalarField& response,
                                                  const ScaleSpaceParams& params);

// Characteristic radius sqrt(2) * sigma* where sigma* maximizes the
// scale-normalized |sigma^2 (Lxx + Lyy)| across sigma_d_levels; falls back
// to the detection scale when no interior maximum exists. Clamped into
// (0, min(M,N)/2].
double select_characteristic_radius(const InterestPoint& point, const YCbCrPlanes& planes,
                                    const ScaleSpaceParams& params);

// Full pipeline over a size-normalized image. Returns 1..max_regions
// regions in detection order (response descending, then (y,x)); a constant
// image yields the single whole-image fallback region.
std::vector<FeatureRegion> extract_feature_regions(const RasterImage& img,
                                                   const ScaleSpaceParams& params);

// extract_feature_regions plus the interest points that produced the
// regions (empty when the fallback fired). Shared by tests and diagnostics.
struct ExtractionResult {
    std::vector<FeatureRegion> regions;
    std::vector<InterestPoint> points;
    bool fallback = false;
};
ExtractionResult extract_feature_regions_detailed(const RasterImage& img,
                                                  const ScaleSpaceParams& params);

} // namespace rbir

#endif // RBIR_FEATURES_HPP
