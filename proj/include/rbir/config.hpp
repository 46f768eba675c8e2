// config.hpp - every tunable of the pipeline in one flat key=value space,
// echoed into index and report files for reproducibility.

#ifndef RBIR_CONFIG_HPP
#define RBIR_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbir/features.hpp"
#include "rbir/signature.hpp"

namespace rbir {

struct Config {
    // imaging
    int k = 256; // square size after normalization
    // features
    double alpha = 0.05;
    std::vector<double> sigma_d_levels = {1.2, 1.728, 2.48832, 3.5831808, 5.159780352};
    double sigma_ratio = 1.4;
    double threshold_fraction = 0.01;
    std::optional<double> threshold_absolute;
    int neighborhood_radius = 1;
    int max_regions = 5;
    // signatures
    std::size_t block_width = 10; // m
    std::string palette_path;     // empty -> built-in palette
    // sgraph
    std::optional<double> theta; // unset -> estimated from the data at build
    int k_edge = 2;
    // eval
    std::size_t cutoff = 20;
    std::size_t sample = 0; // 0 -> min(200, dataset size)
    // shared
    std::uint64_t seed = 0;
    int workers = 0; // 0 -> hardware concurrency

    // Typed assignment from a key=value pair; unknown keys are rejected.
    void set(const std::string& key, const std::string& value);
    // Canonical (key, value) listing; optional keys render as "auto".
    std::vector<std::pair<std::string, std::string>> items() const;

    void validate() const;
    ScaleSpaceParams scale_space_params() const;
    ColorPalette load_configured_palette() const;
};

// Flat key = value file; '#' comments and blank lines allowed.
Config parse_config_file(const std::string& path, Config base = Config{});

} // namespace rbir

#endif // RBIR_CONFIG_HPP
