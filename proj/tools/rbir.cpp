// rbir.cpp - command-line front end: build an index over a labeled image
// tree, query it by example, evaluate retrieval quality, inspect an index.
//
// stdout carries tab-separated key/value lines for scripting; anything meant
// for humans (warnings, progress, timings) goes to stderr.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "rbir/common.hpp"
#include "rbir/config.hpp"
#include "rbir/emd.hpp"
#include "rbir/eval.hpp"
#include "rbir/features.hpp"
#include "rbir/imaging.hpp"
#include "rbir/sgraph.hpp"
#include "rbir/signature.hpp"
#include "rbir/store.hpp"

namespace fs = std::filesystem;
using namespace rbir;

namespace {

ImageSignature extract_signature(const RasterImage& raw, std::uint32_t id, const Config& config,
                                 const ColorPalette& palette) {
    const RasterImage img = resize_to_square(raw, config.k);
    const auto extraction = extract_feature_regions_detailed(img, config.scale_space_params());
    return image_signature(id, extraction.regions, img, palette, config.block_width);
}

// Median pairwise EMD over a seeded sample, divided by 4; falls back to 1
// when the sample is degenerate (single image or all-identical signatures).
double estimate_theta(const std::vector<ImageSignature>& signatures,
                      const SignatureDistanceFn& distance, std::uint64_t seed) {
    std::vector<std::size_t> order(signatures.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SplitMix64 rng(seed);
    deterministic_shuffle(order, rng);
    order.resize(std::min<std::size_t>(order.size(), 100));

    std::vector<double> distances;
    distances.reserve(order.size() * (order.size() - 1) / 2);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
            distances.push_back(distance(signatures[order[i]], signatures[order[j]]));
    if (distances.empty()) return 1.0;
    std::sort(distances.begin(), distances.end());
    const std::size_t mid = distances.size() / 2;
    const double median = distances.size() % 2 == 1
                              ? distances[mid]
                              : 0.5 * (distances[mid - 1] + distances[mid]);
    const double theta = median / 4.0;
    if (!(theta > 0.0) || !std::isfinite(theta)) return 1.0;
    return theta;
}

std::string html_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void write_gallery(const std::string& path, const std::string& query_path,
                   const std::vector<RankedMatch>& ranked,
                   const std::vector<CatalogEntry>& catalog) {
    std::map<std::uint32_t, const CatalogEntry*> by_id;
    for (const CatalogEntry& entry : catalog) by_id[entry.id] = &entry;

    std::ostringstream out;
    out << "<!doctype html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        << "<title>query results</title>\n"
        << "<style>body{font-family:sans-serif}figure{display:inline-block;margin:8px;"
        << "text-align:center}img{max-width:160px;max-height:160px;border:1px solid #888}"
        << "figcaption{font-size:12px;max-width:160px;word-break:break-all}</style>\n"
        << "</head>\n<body>\n<h1>Query</h1>\n";
    out << "<figure><img src=\"" << html_escape(query_path) << "\" alt=\"query\">"
        << "<figcaption>" << html_escape(query_path) << "</figcaption></figure>\n";
    out << "<h1>Results</h1>\n";
    std::size_t rank = 1;
    for (const RankedMatch& match : ranked) {
        const auto it = by_id.find(match.image_id);
        if (it == by_id.end())
            throw InvariantError("ranked result refers to an unknown image id");
        const std::string& p = it->second->path;
        out << "<figure><img src=\"" << html_escape(p) << "\" alt=\"result " << rank << "\">"
            << "<figcaption>#" << rank << " &middot; id " << match.image_id << " &middot; d="
            << format_double(match.distance) << "<br>" << html_escape(p)
            << "</figcaption></figure>\n";
        ++rank;
    }
    out << "</body>\n</html>\n";

    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write gallery file: " + path);
    file << out.str();
    if (!file) throw DataError("write failed: " + path);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report_warnings(const LabeledDataset& dataset) {
    for (const std::string& warning : dataset.warnings) std::cerr << "warning: " << warning << "\n";
    if (!dataset.warnings.empty())
        std::cerr << dataset.warnings.size() << " file(s) skipped during ingestion\n";
}

int cmd_build(const std::string& dataset_root, const std::string& index_path, Config config) {
    config.validate();
    const DecoderRegistry registry = DecoderRegistry::with_builtins();
    const LabeledDataset dataset = ingest_dataset(dataset_root, registry);
    report_warnings(dataset);
    const std::size_t n = dataset.entries.size();
    std::cerr << "ingested " << n << " images in " << dataset.classes.size() << " classes\n";

    const ColorPalette palette = config.load_configured_palette();

    const auto extract_start = std::chrono::steady_clock::now();
    std::vector<ImageSignature> signatures(n, ImageSignature{});
    parallel_for(n, config.workers, [&](std::size_t i) {
        const RasterImage raw = registry.decode(dataset.entries[i].path);
        signatures[i] = extract_signature(raw, dataset.entries[i].id, config, palette);
    });
    std::cerr << "extracted " << n << " signatures in " << format_double(seconds_since(extract_start))
              << " s\n";

    const SignatureDistanceFn distance = make_emd_distance_fn(palette);
    if (!config.theta) {
        config.theta = estimate_theta(signatures, distance, config.seed);
        std::cerr << "estimated theta = " << format_double(*config.theta)
                  << " (median pairwise EMD / 4 over a seeded sample)\n";
    }

    BuildStats stats;
    const auto build_start = std::chrono::steady_clock::now();
    SignatureGraph graph = build_graph(signatures, *config.theta, config.k_edge, distance, &stats);
    std::cerr << "built graph in " << format_double(seconds_since(build_start)) << " s\n";

    IndexData data;
    data.config = config;
    data.palette = palette;
    for (const DatasetEntry& entry : dataset.entries)
        data.catalog.push_back(CatalogEntry{entry.id, entry.path});
    data.graph = std::move(graph);
    save_index(data, index_path);

    std::cout << "images\t" << n << "\n"
              << "clusters\t" << data.graph.clusters().size() << "\n"
              << "edges\t" << data.graph.edges().size() << "\n"
              << "clamped_members\t" << data.graph.total_clamped_members() << "\n"
              << "theta\t" << format_double(*config.theta) << "\n"
              << "build_emd_evaluations\t" << stats.emd_evaluations << "\n"
              << "index\t" << index_path << "\n";
    return 0;
}

int cmd_query(const std::string& index_path, const std::string& image_path, std::size_t limit,
              const std::string& html_path) {
    if (limit < 1) throw DataError("limit must be >= 1");
    const IndexData data = load_index(index_path);
    const DecoderRegistry registry = DecoderRegistry::with_builtins();
    const RasterImage raw = registry.decode(image_path);
    const ImageSignature query = extract_signature(raw, 0, data.config, data.palette);

    const SignatureDistanceFn distance = make_emd_distance_fn(data.palette);
    const QueryResult result = query_graph(data.graph, query, limit, distance);

    std::map<std::uint32_t, const CatalogEntry*> by_id;
    for (const CatalogEntry& entry : data.catalog) by_id[entry.id] = &entry;
    std::size_t rank = 1;
    for (const RankedMatch& match : result.ranked) {
        const auto it = by_id.find(match.image_id);
        const std::string& path = it == by_id.end() ? std::string("?") : it->second->path;
        std::cout << "result\t" << rank << "\t" << match.image_id << "\t"
                  << format_double(match.distance) << "\t" << path << "\n";
        ++rank;
    }
    std::cout << "emd_evaluations\t" << result.emd_evaluations << "\n"
              << "clusters_visited\t" << result.clusters_visited << "\n";

    if (!html_path.empty()) {
        write_gallery(html_path, image_path, result.ranked, data.catalog);
        std::cout << "gallery\t" << html_path << "\n";
    }
    return 0;
}

int cmd_eval(const IndexData& data, const std::string& index_path,
             const std::string& dataset_root, Config config) {
    config.validate();
    const DecoderRegistry registry = DecoderRegistry::with_builtins();
    const LabeledDataset dataset = ingest_dataset(dataset_root, registry);
    report_warnings(dataset);

    if (dataset.entries.size() != data.catalog.size())
        throw DataError("dataset/index mismatch: " + std::to_string(dataset.entries.size()) +
                        " dataset images vs " + std::to_string(data.catalog.size()) +
                        " indexed");
    for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
        std::error_code ec;
        const fs::path a = fs::weakly_canonical(dataset.entries[i].path, ec);
        const fs::path b = fs::weakly_canonical(data.catalog[i].path, ec);
        if (a != b)
            throw DataError("dataset/index mismatch at id " + std::to_string(i) + ": " +
                            dataset.entries[i].path + " vs " + data.catalog[i].path);
    }

    const SignatureDistanceFn distance = make_emd_distance_fn(data.palette);
    EvalParams params;
    params.cutoff = config.cutoff;
    params.sample = config.sample;
    params.seed = config.seed;
    params.workers = config.workers;
    const EvalReport report = run_evaluation(dataset, data.graph, distance, params);

    write_report_files(report, config, index_path);

    std::cerr << "build wall time " << format_double(report.build_wall_seconds) << " s; "
              << "mean query wall times: graph "
              << format_double([&] {
                     double s = 0.0;
                     for (const QueryRecord& q : report.queries) s += q.graph_wall_seconds;
                     return s / report.queries.size();
                 }())
              << " s, ssf "
              << format_double([&] {
                     double s = 0.0;
                     for (const QueryRecord& q : report.queries) s += q.ssf_wall_seconds;
                     return s / report.queries.size();
                 }())
              << " s\n";

    const auto opt_text = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string("absent");
    };
    std::cout << "database_size\t" << report.database_size << "\n"
              << "sample_size\t" << report.sample_size << "\n"
              << "cutoff\t" << report.cutoff << "\n"
              << "graph_mean_precision\t" << format_double(report.graph_mean_precision) << "\n"
              << "graph_mean_recall\t" << opt_text(report.graph_mean_recall) << "\n"
              << "ssf_mean_precision\t" << format_double(report.ssf_mean_precision) << "\n"
              << "ssf_mean_recall\t" << opt_text(report.ssf_mean_recall) << "\n"
              << "mean_graph_evaluations\t" << format_double(report.mean_graph_evaluations)
              << "\n"
              << "mean_ssf_evaluations\t" << format_double(report.mean_ssf_evaluations) << "\n"
              << "evaluation_ratio\t" << format_double(report.evaluation_ratio) << "\n"
              << "build_emd_evaluations\t" << report.build_emd_evaluations << "\n"
              << "report\t" << index_path << ".eval.txt\n"
              << "queries_table\t" << index_path << ".queries.tsv\n"
              << "comparisons_table\t" << index_path << ".comparisons.tsv\n";
    return 0;
}

int cmd_info(const std::string& index_path) {
    const IndexData data = load_index(index_path);
    for (const auto& [key, value] : data.config.items())
        std::cout << "config\t" << key << "\t" << value << "\n";
    std::cout << "images\t" << data.graph.image_count() << "\n"
              << "clusters\t" << data.graph.clusters().size() << "\n"
              << "edges\t" << data.graph.edges().size() << "\n"
              << "clamped_members\t" << data.graph.total_clamped_members() << "\n";
    std::map<std::size_t, std::size_t> histogram;
    for (const Cluster& cluster : data.graph.clusters()) ++histogram[cluster.members.size()];
    for (const auto& [size, count] : histogram)
        std::cout << "cluster_size\t" << size << "\t" << count << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"region-based image retrieval over a clustered signature graph"};
    app.require_subcommand(1);

    std::string config_path, index_path, dataset_root, image_path, html_path;
    std::size_t limit = 10;
    std::uint64_t seed = 0;
    int workers = 0;

    CLI::App* build = app.add_subcommand("build", "extract signatures and build an index");
    build->add_option("--dataset", dataset_root, "dataset root (class = subdirectory)")
        ->required();
    build->add_option("--index", index_path, "output index path")->required();
    build->add_option("--config", config_path, "key = value config file");
    build->add_option("--workers", workers, "worker threads (0 = hardware)");
    build->add_option("--seed", seed, "seed for sampling");

    CLI::App* query = app.add_subcommand("query", "rank indexed images against an example");
    query->add_option("--index", index_path, "index path")->required();
    query->add_option("image", image_path, "query image path")->required();
    query->add_option("--limit", limit, "max results");
    query->add_option("--html", html_path, "write a static gallery here");

    CLI::App* eval = app.add_subcommand("eval", "precision/recall and comparison counts");
    eval->add_option("--index", index_path, "index path")->required();
    eval->add_option("--dataset", dataset_root, "dataset root the index was built from")
        ->required();
    eval->add_option("--config", config_path, "key = value config file (overrides stored)");
    eval->add_option("--workers", workers, "worker threads (0 = hardware)");
    eval->add_option("--seed", seed, "seed for the query sample");

    CLI::App* info = app.add_subcommand("info", "print index parameters and shape");
    info->add_option("--index", index_path, "index path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (build->parsed()) {
            Config config;
            if (!config_path.empty()) config = parse_config_file(config_path, config);
            if (build->count("--seed")) config.seed = seed;
            if (build->count("--workers")) config.workers = workers;
            return cmd_build(dataset_root, index_path, config);
        }
        if (query->parsed()) return cmd_query(index_path, image_path, limit, html_path);
        if (eval->parsed()) {
            const IndexData data = load_index(index_path);
            Config config = data.config;
            if (!config_path.empty()) config = parse_config_file(config_path, config);
            if (eval->count("--seed")) config.seed = seed;
            if (eval->count("--workers")) config.workers = workers;
            return cmd_eval(data, index_path, dataset_root, config);
        }
        if (info->parsed()) return cmd_info(index_path);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
