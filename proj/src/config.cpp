// config.cpp - flat key=value configuration handling.

#include "rbir/config.hpp"

#include <algorithm>
#include <fstream>

namespace rbir {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string join_levels(const std::vector<double>& levels) {
    std::string out;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (i) out += ",";
        out += format_double(levels[i]);
    }
    return out;
}

std::vector<double> parse_levels(const std::string& value) {
    std::vector<double> levels;
    for (const std::string& field : split_fields(value, ','))
        levels.push_back(parse_double(trim(field), "sigma_d_levels"));
    return levels;
}

std::optional<double> parse_optional(const std::string& value, const std::string& key) {
    if (value == "auto" || value == "none") return std::nullopt;
    return parse_double(value, key);
}

} // namespace

void Config::set(const std::string& key, const std::string& value) {
    if (key == "k")
        k = static_cast<int>(parse_int(value, key));
    else if (key == "alpha")
        alpha = parse_double(value, key);
    else if (key == "sigma_d_levels")
        sigma_d_levels = parse_levels(value);
    else if (key == "sigma_ratio")
        sigma_ratio = parse_double(value, key);
    else if (key == "threshold_fraction")
        threshold_fraction = parse_double(value, key);
    else if (key == "threshold_absolute")
        threshold_absolute = parse_optional(value, key);
    else if (key == "neighborhood_radius")
        neighborhood_radius = static_cast<int>(parse_int(value, key));
    else if (key == "max_regions")
        max_regions = static_cast<int>(parse_int(value, key));
    else if (key == "block_width")
        block_width = static_cast<std::size_t>(parse_int(value, key));
    else if (key == "palette")
        palette_path = value;
    else if (key == "theta")
        theta = parse_optional(value, key);
    else if (key == "k_edge")
        k_edge = static_cast<int>(parse_int(value, key));
    else if (key == "cutoff")
        cutoff = static_cast<std::size_t>(parse_int(value, key));
    else if (key == "sample")
        sample = static_cast<std::size_t>(parse_int(value, key));
    else if (key == "seed")
        seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "workers")
        workers = static_cast<int>(parse_int(value, key));
    else
        throw DataError("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> Config::items() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("k", std::to_string(k));
    out.emplace_back("alpha", format_double(alpha));
    out.emplace_back("sigma_d_levels", join_levels(sigma_d_levels));
    out.emplace_back("sigma_ratio", format_double(sigma_ratio));
    out.emplace_back("threshold_fraction", format_double(threshold_fraction));
    out.emplace_back("threshold_absolute",
                     threshold_absolute ? format_double(*threshold_absolute) : "auto");
    out.emplace_back("neighborhood_radius", std::to_string(neighborhood_radius));
    out.emplace_back("max_regions", std::to_string(max_regions));
    out.emplace_back("block_width", std::to_string(block_width));
    out.emplace_back("palette", palette_path);
    out.emplace_back("theta", theta ? format_double(*theta) : "auto");
    out.emplace_back("k_edge", std::to_string(k_edge));
    out.emplace_back("cutoff", std::to_string(cutoff));
    out.emplace_back("sample", std::to_string(sample));
    out.emplace_back("seed", std::to_string(seed));
    out.emplace_back("workers", std::to_string(workers));
    return out;
}

void Config::validate() const {
    if (k <= 0) throw DataError("config: k must be positive");
    scale_space_params().validate();
    if (block_width < 2) throw DataError("config: block_width must be >= 2");
    if (theta && *theta <= 0.0) throw DataError("config: theta must be positive");
    if (k_edge < 1) throw DataError("config: k_edge must be >= 1");
    if (cutoff < 1) throw DataError("config: cutoff must be >= 1");
    if (workers < 0) throw DataError("config: workers must be >= 0");
}

ScaleSpaceParams Config::scale_space_params() const {
    ScaleSpaceParams params;
    params.alpha = alpha;
    params.sigma_d_levels = sigma_d_levels;
    params.sigma_ratio = sigma_ratio;
    params.threshold_fraction = threshold_fraction;
    params.threshold_absolute = threshold_absolute;
    params.neighborhood_radius = neighborhood_radius;
    params.max_regions = max_regions;
    return params;
}

ColorPalette Config::load_configured_palette() const {
    if (palette_path.empty()) return default_palette();
    return load_palette(palette_path);
}

Config parse_config_file(const std::string& path, Config base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw DataError("config file " + path + ": missing '=' on line " +
                            std::to_string(lineno));
        base.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return base;
}

} // namespace rbir
