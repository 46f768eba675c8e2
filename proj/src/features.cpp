// features.cpp - Harris-Laplace detection over the weighted YCbCr scale
// space, with LoG characteristic-scale selection.

#include "rbir/features.hpp"

#include <algorithm>
#include <cmath>

namespace rbir {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        kernel[i + radius] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;
    return kernel;
}

// Laplacian by central second differences, reflective borders.
double laplacian_at(const ScalarField& f, int x, int y) {
    return f.at_reflect(x + 1, y) + f.at_reflect(x - 1, y) + f.at_reflect(x, y + 1) +
           f.at_reflect(x, y - 1) - 4.0 * f.at(x, y);
}

bool point_order(const InterestPoint& a, const InterestPoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.scale < b.scale;
}

std::vector<InterestPoint> strict_local_maxima(const ScalarField& response, double threshold,
                                               int radius, double scale) {
    std::vector<InterestPoint> out;
    for (int y = 0; y < response.height; ++y) {
        for (int x = 0; x < response.width; ++x) {
            const double v = response.at(x, y);
            if (v < threshold) continue;
            bool is_max = true;
            for (int dy = -radius; dy <= radius && is_max; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || nx >= response.width || ny < 0 || ny >= response.height)
                        continue;
                    if (response.at(nx, ny) >= v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) out.push_back(InterestPoint{x, y, scale, v});
        }
    }
    return out;
}

// Strongest-first greedy suppression; a candidate is dropped when a kept
// point lies within sqrt(2) * max(scales) of it.  Coarse levels win the
// ranking but localize badly (a step corner's response peak drifts inward
// roughly one sigma_d), so each kept point reports the coordinates of the
// finest-scale candidate absorbed into its group.
std::vector<InterestPoint> suppress_by_distance(std::vector<InterestPoint> candidates) {
    std::sort(candidates.begin(), candidates.end(), point_order);
    struct Group {
        InterestPoint anchor;    // strongest member: rank, scale, geometry
        InterestPoint localized; // finest member: reported position
    };
    std::vector<Group> kept;
    for (const InterestPoint& c : candidates) {
        bool suppressed = false;
        for (Group& g : kept) {
            const double dx = c.x - g.anchor.x;
            const double dy = c.y - g.anchor.y;
            const double limit = std::sqrt(2.0) * std::max(c.scale, g.anchor.scale);
            if (dx * dx + dy * dy <= limit * limit) {
                if (c.scale < g.localized.scale) g.localized = c;
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(Group{c, c});
    }
    std::vector<InterestPoint> out;
    out.reserve(kept.size());
    for (const Group& g : kept)
        out.push_back(InterestPoint{g.localized.x, g.localized.y, g.anchor.scale,
                                    g.anchor.response});
    return out;
}

// Scale-normalized |sigma^2 (Lxx + Lyy)| per level at one point, given the
// per-level smoothed luminance stack.
std::vector<double> log_profile(const std::vector<ScalarField>& smoothed_stack,
                                const std::vector<double>& levels, int x, int y) {
    std::vector<double> profile(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i)
        profile[i] = levels[i] * levels[i] * std::abs(laplacian_at(smoothed_stack[i], x, y));
    return profile;
}

double radius_from_profile(const std::vector<double>& profile,
                           const std::vector<double>& levels, double detection_scale,
                           int width, int height) {
    double best_scale = -1.0;
    double best_value = 0.0;
    for (std::size_t i = 1; i + 1 < profile.size(); ++i) {
        if (profile[i] > profile[i - 1] && profile[i] > profile[i + 1] &&
            (best_scale < 0.0 || profile[i] > best_value)) {
            best_scale = levels[i];
            best_value = profile[i];
        }
    }
    if (best_scale < 0.0) best_scale = detection_scale;
    const double max_radius = std::min(width, height) / 2.0;
    return std::min(std::sqrt(2.0) * best_scale, max_radius);
}

} // namespace

void ScaleSpaceParams::validate() const {
    if (alpha <= 0.0) throw DataError("scale space params: alpha must be positive");
    if (sigma_d_levels.empty()) throw DataError("scale space params: no sigma_d levels");
    for (std::size_t i = 0; i < sigma_d_levels.size(); ++i) {
        if (sigma_d_levels[i] <= 0.0)
            throw DataError("scale space params: sigma_d levels must be positive");
        if (i > 0 && sigma_d_levels[i] <= sigma_d_levels[i - 1])
            throw DataError("scale space params: sigma_d levels must be strictly increasing");
    }
    if (sigma_ratio <= 0.0) throw DataError("scale space params: sigma_ratio must be positive");
    if (neighborhood_radius < 1)
        throw DataError("scale space params: neighborhood_radius must be >= 1");
    if (max_regions < 1) throw DataError("scale space params: max_regions must be >= 1");
}

ScalarField gaussian_smooth(const ScalarField& field, double sigma) {
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);

    ScalarField tmp(field.width, field.height);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * field.at_reflect(x + i, y);
            tmp.at(x, y) = acc;
        }
    }
    ScalarField out(field.width, field.height);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at_reflect(x, y + i);
            out.at(x, y) = acc;
        }
    }
    return out;
}

ScalarField smoothed_luminance(const YCbCrPlanes& planes, double sigma_d) {
    if (sigma_d <= 0.0) throw DataError("smoothed_luminance: sigma_d must be positive");
    ScalarField weighted(planes.width(), planes.height());
    for (std::size_t i = 0; i < weighted.values.size(); ++i)
        weighted.values[i] = (6.0 * planes.y.values[i] + 2.0 * planes.cb.values[i] +
                              2.0 * planes.cr.values[i]) /
                             10.0;
    return gaussian_smooth(weighted, sigma_d);
}

ScalarField harris_response(const ScalarField& smoothed, double sigma_i, double sigma_d,
                            double alpha) {
    if (sigma_i <= 0.0 || sigma_d <= 0.0)
        throw DataError("harris_response: scales must be positive");
    const int w = smoothed.width;
    const int h = smoothed.height;

    ScalarField lxx(w, h);
    ScalarField lxy(w, h);
    ScalarField lyy(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx =
                0.5 * (smoothed.at_reflect(x + 1, y) - smoothed.at_reflect(x - 1, y));
            const double gy =
                0.5 * (smoothed.at_reflect(x, y + 1) - smoothed.at_reflect(x, y - 1));
            lxx.at(x, y) = gx * gx;
            lxy.at(x, y) = gx * gy;
            lyy.at(x, y) = gy * gy;
        }
    }
    const ScalarField sxx = gaussian_smooth(lxx, sigma_i);
    const ScalarField sxy = gaussian_smooth(lxy, sigma_i);
    const ScalarField syy = gaussian_smooth(lyy, sigma_i);

    const double scale2 = sigma_d * sigma_d;
    ScalarField response(w, h);
    for (std::size_t i = 0; i < response.values.size(); ++i) {
        const double a = scale2 * sxx.values[i];
        const double b = scale2 * sxy.values[i];
        const double c = scale2 * syy.values[i];
        const double det = a * c - b * b;
        const double tr = a + c;
        response.values[i] = det - alpha * tr * tr;
    }
    return response;
}

std::optional<double> effective_threshold(const ScalarField& response,
                                          const ScaleSpaceParams& params) {
    if (params.threshold_absolute) return *params.threshold_absolute;
    const double max = response.max_value();
    if (max <= 0.0) return std::nullopt;
    return params.threshold_fraction * max;
}

std::vector<InterestPoint> detect_interest_points(const ScalarField& response,
                                                  const ScaleSpaceParams& params) {
    params.validate();
    const std::optional<double> threshold = effective_threshold(response, params);
    if (!threshold) return {};
    std::vector<InterestPoint> points = strict_local_maxima(
        response, *threshold, params.neighborhood_radius, params.sigma_d_levels.front());
    std::sort(points.begin(), points.end(), point_order);
    if (points.size() > static_cast<std::size_t>(params.max_regions))
        points.resize(static_cast<std::size_t>(params.max_regions));
    return points;
}

double select_characteristic_radius(const InterestPoint& point, const YCbCrPlanes& planes,
                                    const ScaleSpaceParams& params) {
    params.validate();
    std::vector<ScalarField> stack;
    stack.reserve(params.sigma_d_levels.size());
    for (double sigma : params.sigma_d_levels)
        stack.push_back(smoothed_luminance(planes, sigma));
    const std::vector<double> profile =
        log_profile(stack, params.sigma_d_levels, point.x, point.y);
    return radius_from_profile(profile, params.sigma_d_levels, point.scale, planes.width(),
                               planes.height());
}

ExtractionResult extract_feature_regions_detailed(const RasterImage& img,
                                                  const ScaleSpaceParams& params) {
    params.validate();
    const YCbCrPlanes planes = rgb_to_ycbcr(img);

    std::vector<ScalarField> smoothed_stack;
    std::vector<ScalarField> response_stack;
    smoothed_stack.reserve(params.sigma_d_levels.size());
    response_stack.reserve(params.sigma_d_levels.size());
    double max_response = 0.0;
    bool any_positive = false;
    for (double sigma_d : params.sigma_d_levels) {
        smoothed_stack.push_back(smoothed_luminance(planes, sigma_d));
        response_stack.push_back(harris_response(smoothed_stack.back(),
                                                 params.sigma_ratio * sigma_d, sigma_d,
                                                 params.alpha));
        const double level_max = response_stack.back().max_value();
        if (!any_positive || level_max > max_response) max_response = level_max;
        any_positive = true;
    }

    std::optional<double> threshold;
    if (params.threshold_absolute)
        threshold = *params.threshold_absolute;
    else if (max_response > 0.0)
        threshold = params.threshold_fraction * max_response;

    ExtractionResult result;
    if (threshold) {
        std::vector<InterestPoint> pooled;
        for (std::size_t i = 0; i < response_stack.size(); ++i) {
            std::vector<InterestPoint> level = strict_local_maxima(
                response_stack[i], *threshold, params.neighborhood_radius,
                params.sigma_d_levels[i]);
            pooled.insert(pooled.end(), level.begin(), level.end());
        }
        result.points = suppress_by_distance(std::move(pooled));
        if (result.points.size() > static_cast<std::size_t>(params.max_regions))
            result.points.resize(static_cast<std::size_t>(params.max_regions));
    }

    if (result.points.empty()) {
        result.fallback = true;
        result.regions.push_back(FeatureRegion{img.width / 2.0, img.height / 2.0,
                                               std::min(img.width, img.height) / 2.0});
        return result;
    }

    for (const InterestPoint& p : result.points) {
        const std::vector<double> profile =
            log_profile(smoothed_stack, params.sigma_d_levels, p.x, p.y);
        const double radius = radius_from_profile(profile, params.sigma_d_levels, p.scale,
                                                  img.width, img.height);
        result.regions.push_back(
            FeatureRegion{static_cast<double>(p.x), static_cast<double>(p.y), radius});
    }
    return result;
}

std::vector<FeatureRegion> extract_feature_regions(const RasterImage& img,
                                                   const ScaleSpaceParams& params) {
    return extract_feature_regions_detailed(img, params).regions;
}

} // namespace rbir
