// eval.cpp - dataset ingestion, SSF baseline, and the measurement loop.

#include "rbir/eval.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace rbir {

const std::string& LabeledDataset::label_of(std::uint32_t image_id) const {
    if (image_id >= entries.size() || entries[image_id].id != image_id)
        throw InvariantError("dataset entry ids must equal their positions");
    return entries[image_id].label;
}

LabeledDataset ingest_dataset(const std::string& root, const DecoderRegistry& registry) {
    const fs::path root_path(root);
    if (!fs::is_directory(root_path)) throw DataError("dataset root is not a directory: " + root);

    LabeledDataset dataset;

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root_path)) {
        if (entry.is_directory()) {
            class_dirs.push_back(entry.path());
        } else {
            dataset.warnings.push_back("ignoring file outside class directories: " +
                                       entry.path().string());
        }
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw DataError("dataset root has no class directories: " + root);

    for (const fs::path& class_dir : class_dirs) {
        const std::string label = class_dir.filename().string();
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(class_dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());

        for (const fs::path& file : files) {
            const std::string path = file.string();
            if (!registry.supports(path)) {
                dataset.warnings.push_back("skipping unsupported file: " + path);
                continue;
            }
            try {
                registry.decode(path);
            } catch (const DataError& e) {
                dataset.warnings.push_back("skipping undecodable file: " + path + " (" +
                                           e.what() + ")");
                continue;
            }
            const auto id = static_cast<std::uint32_t>(dataset.entries.size());
            dataset.entries.push_back(DatasetEntry{id, path, label});
            ++dataset.classes[label];
        }
    }

    if (dataset.entries.empty()) throw DataError("dataset has no decodable images: " + root);
    return dataset;
}

QueryResult ssf_scan(const std::vector<ImageSignature>& all, const ImageSignature& query,
                     std::size_t limit, const SignatureDistanceFn& distance) {
    if (all.empty()) throw DataError("ssf_scan over an empty signature set");
    QueryResult result;
    result.ranked.reserve(all.size());
    for (const ImageSignature& sig : all)
        result.ranked.push_back(RankedMatch{sig.image_id(), distance(query, sig)});
    result.emd_evaluations = all.size();
    result.clusters_visited = 0;
    std::sort(result.ranked.begin(), result.ranked.end(),
              [](const RankedMatch& a, const RankedMatch& b) {
                  if (a.distance != b.distance) return a.distance < b.distance;
                  return a.image_id < b.image_id;
              });
    if (result.ranked.size() > limit) result.ranked.resize(limit);
    return result;
}

PrecisionRecall precision_recall(const QueryResult& result, std::uint32_t query_id,
                                 const std::string& query_class, const LabeledDataset& dataset,
                                 std::size_t cutoff) {
    if (cutoff < 1) throw DataError("precision_recall: cutoff must be >= 1");
    std::size_t retrieved = 0;
    std::size_t relevant = 0;
    for (const RankedMatch& match : result.ranked) {
        if (match.image_id == query_id) continue;
        if (retrieved == cutoff) break;
        ++retrieved;
        if (dataset.label_of(match.image_id) == query_class) ++relevant;
    }

    PrecisionRecall pr;
    pr.precision = retrieved == 0 ? 0.0 : static_cast<double>(relevant) / retrieved;
    const auto it = dataset.classes.find(query_class);
    if (it == dataset.classes.end()) throw DataError("unknown class label: " + query_class);
    if (it->second > 1) pr.recall = static_cast<double>(relevant) / (it->second - 1);
    return pr;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::optional<double> mean_of(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / values.size();
}

} // namespace

EvalReport run_evaluation(const LabeledDataset& dataset, const SignatureGraph& graph,
                          const SignatureDistanceFn& distance, const EvalParams& params) {
    const std::size_t n = graph.image_count();
    if (n == 0) throw DataError("evaluation requires a nonempty graph");
    if (dataset.entries.size() != n)
        throw DataError("dataset/index mismatch: " + std::to_string(dataset.entries.size()) +
                        " dataset entries vs " + std::to_string(n) + " indexed signatures");
    for (const ImageSignature& sig : graph.signatures())
        if (sig.image_id() >= dataset.entries.size() ||
            dataset.entries[sig.image_id()].id != sig.image_id())
            throw DataError("dataset/index mismatch: image-id sets differ");
    if (params.cutoff < 1) throw DataError("evaluation cutoff must be >= 1");

    EvalReport report;
    report.database_size = n;
    report.cutoff = params.cutoff;
    report.cluster_count = graph.clusters().size();
    report.edge_count = graph.edges().size();

    const std::size_t sample =
        params.sample == 0 ? std::min<std::size_t>(200, n) : params.sample;
    if (sample > n) throw DataError("query sample larger than dataset");
    report.sample_size = sample;

    // Re-run the insertion stream: comparison counts and wall time to build,
    // plus the cumulative counts behind the comparisons-vs-size table.
    BuildStats stats;
    const auto build_start = std::chrono::steady_clock::now();
    const SignatureGraph rebuilt =
        build_graph(graph.signatures(), graph.theta(), graph.k_edge(), distance, &stats);
    report.build_wall_seconds = seconds_since(build_start);
    report.build_emd_evaluations = stats.emd_evaluations;
    if (rebuilt.clusters().size() != graph.clusters().size() ||
        rebuilt.edges().size() != graph.edges().size())
        throw InvariantError("deterministic rebuild disagrees with the supplied graph");

    for (int i = 1; i <= 10; ++i) {
        const std::size_t size = (n * static_cast<std::size_t>(i) + 9) / 10;
        if (!report.comparisons.empty() && report.comparisons.back().database_size == size)
            continue;
        report.comparisons.push_back(
            ComparisonPoint{size, stats.cumulative_evaluations[size - 1]});
    }

    std::vector<std::uint32_t> ids;
    ids.reserve(n);
    for (const ImageSignature& sig : graph.signatures()) ids.push_back(sig.image_id());
    SplitMix64 rng(params.seed);
    deterministic_shuffle(ids, rng);
    ids.resize(sample);
    std::sort(ids.begin(), ids.end());

    report.queries.resize(sample);
    parallel_for(sample, params.workers, [&](std::size_t i) {
        const std::uint32_t id = ids[i];
        const ImageSignature& query = graph.signature(id);
        QueryRecord& rec = report.queries[i];
        rec.query_id = id;
        rec.label = dataset.label_of(id);

        const auto g_start = std::chrono::steady_clock::now();
        const QueryResult g = query_graph(graph, query, params.cutoff + 1, distance);
        rec.graph_wall_seconds = seconds_since(g_start);

        const auto s_start = std::chrono::steady_clock::now();
        const QueryResult s = ssf_scan(graph.signatures(), query, params.cutoff + 1, distance);
        rec.ssf_wall_seconds = seconds_since(s_start);

        rec.graph_pr = precision_recall(g, id, rec.label, dataset, params.cutoff);
        rec.ssf_pr = precision_recall(s, id, rec.label, dataset, params.cutoff);
        rec.graph_evaluations = g.emd_evaluations;
        rec.ssf_evaluations = s.emd_evaluations;
        rec.clusters_visited = g.clusters_visited;
    });

    // Aggregate per class and overall; recall means skip queries where it is
    // undefined (singleton classes).
    std::map<std::string, std::vector<const QueryRecord*>> by_class;
    for (const QueryRecord& rec : report.queries) by_class[rec.label].push_back(&rec);

    double graph_p_sum = 0.0, ssf_p_sum = 0.0;
    std::vector<double> graph_recalls, ssf_recalls;
    std::uint64_t graph_eval_total = 0, ssf_eval_total = 0;
    for (const QueryRecord& rec : report.queries) {
        graph_p_sum += rec.graph_pr.precision;
        ssf_p_sum += rec.ssf_pr.precision;
        if (rec.graph_pr.recall) graph_recalls.push_back(*rec.graph_pr.recall);
        if (rec.ssf_pr.recall) ssf_recalls.push_back(*rec.ssf_pr.recall);
        graph_eval_total += rec.graph_evaluations;
        ssf_eval_total += rec.ssf_evaluations;
    }
    report.graph_mean_precision = graph_p_sum / sample;
    report.ssf_mean_precision = ssf_p_sum / sample;
    report.graph_mean_recall = mean_of(graph_recalls);
    report.ssf_mean_recall = mean_of(ssf_recalls);
    report.mean_graph_evaluations = static_cast<double>(graph_eval_total) / sample;
    report.mean_ssf_evaluations = static_cast<double>(ssf_eval_total) / sample;
    report.evaluation_ratio =
        ssf_eval_total == 0 ? 0.0
                            : static_cast<double>(graph_eval_total) / ssf_eval_total;

    for (const auto& [label, records] : by_class) {
        ClassSummary summary;
        summary.label = label;
        summary.query_count = records.size();
        double gp = 0.0, sp = 0.0;
        std::vector<double> gr, sr;
        for (const QueryRecord* rec : records) {
            gp += rec->graph_pr.precision;
            sp += rec->ssf_pr.precision;
            if (rec->graph_pr.recall) gr.push_back(*rec->graph_pr.recall);
            if (rec->ssf_pr.recall) sr.push_back(*rec->ssf_pr.recall);
        }
        summary.graph_mean_precision = gp / records.size();
        summary.ssf_mean_precision = sp / records.size();
        summary.graph_mean_recall = mean_of(gr);
        summary.ssf_mean_recall = mean_of(sr);
        report.class_summaries.push_back(std::move(summary));
    }

    return report;
}

namespace {

std::string opt_text(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string("absent");
}

void write_checked(const std::string& path, const std::string& body, bool with_checksum) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write report file: " + path);
    file << body;
    if (with_checksum) {
        static const char digits[] = "0123456789abcdef";
        const std::uint64_t sum = fnv1a64(body);
        std::string hex(16, '0');
        for (int i = 0; i < 16; ++i) hex[15 - i] = digits[(sum >> (4 * i)) & 0xf];
        file << "checksum\t" << hex << "\n";
    }
    if (!file) throw DataError("write failed: " + path);
}

} // namespace

void write_report_files(const EvalReport& report, const Config& config,
                        const std::string& base_path) {
    std::ostringstream out;
    out << "rbir-eval\t1\n";

    const auto config_items = config.items();
    out << "[config]\t" << config_items.size() << "\n";
    for (const auto& [key, value] : config_items) out << key << " = " << value << "\n";

    std::vector<std::pair<std::string, std::string>> summary = {
        {"database_size", std::to_string(report.database_size)},
        {"sample_size", std::to_string(report.sample_size)},
        {"cutoff", std::to_string(report.cutoff)},
        {"cluster_count", std::to_string(report.cluster_count)},
        {"edge_count", std::to_string(report.edge_count)},
        {"build_emd_evaluations", std::to_string(report.build_emd_evaluations)},
        {"graph_mean_precision", format_double(report.graph_mean_precision)},
        {"graph_mean_recall", opt_text(report.graph_mean_recall)},
        {"ssf_mean_precision", format_double(report.ssf_mean_precision)},
        {"ssf_mean_recall", opt_text(report.ssf_mean_recall)},
        {"mean_graph_evaluations", format_double(report.mean_graph_evaluations)},
        {"mean_ssf_evaluations", format_double(report.mean_ssf_evaluations)},
        {"evaluation_ratio", format_double(report.evaluation_ratio)},
    };
    out << "[summary]\t" << summary.size() << "\n";
    for (const auto& [key, value] : summary) out << key << " = " << value << "\n";

    out << "[classes]\t" << report.class_summaries.size() << "\n";
    for (const ClassSummary& cls : report.class_summaries)
        out << cls.label << "\t" << cls.query_count << "\t"
            << format_double(cls.graph_mean_precision) << "\t"
            << opt_text(cls.graph_mean_recall) << "\t"
            << format_double(cls.ssf_mean_precision) << "\t" << opt_text(cls.ssf_mean_recall)
            << "\n";

    write_checked(base_path + ".eval.txt", out.str(), true);

    std::ostringstream queries;
    queries << "query_id\tclass\tgraph_precision\tgraph_recall\tssf_precision\tssf_recall\t"
               "graph_emd_evaluations\tssf_emd_evaluations\tclusters_visited\n";
    for (const QueryRecord& rec : report.queries)
        queries << rec.query_id << "\t" << rec.label << "\t"
                << format_double(rec.graph_pr.precision) << "\t"
                << (rec.graph_pr.recall ? format_double(*rec.graph_pr.recall) : "-") << "\t"
                << format_double(rec.ssf_pr.precision) << "\t"
                << (rec.ssf_pr.recall ? format_double(*rec.ssf_pr.recall) : "-") << "\t"
                << rec.graph_evaluations << "\t" << rec.ssf_evaluations << "\t"
                << rec.clusters_visited << "\n";
    write_checked(base_path + ".queries.tsv", queries.str(), false);

    std::ostringstream comparisons;
    comparisons << "database_size\tbuild_emd_evaluations\n";
    for (const ComparisonPoint& point : report.comparisons)
        comparisons << point.database_size << "\t" << point.emd_evaluations << "\n";
    write_checked(base_path + ".comparisons.tsv", comparisons.str(), false);
}

} // namespace rbir
