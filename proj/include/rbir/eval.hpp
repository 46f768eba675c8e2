// eval.hpp - labeled dataset ingestion, the sequential-scan baseline, and
// the precision/recall + comparison-count measurement loop.

#ifndef RBIR_EVAL_HPP
#define RBIR_EVAL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbir/config.hpp"
#include "rbir/imaging.hpp"
#include "rbir/sgraph.hpp"

namespace rbir {

struct DatasetEntry {
    std::uint32_t id = 0;
    std::string path;
    std::string label;
};

// Class = immediate subdirectory of the root; nested directories below the
// class level are flattened into it. Entry ids equal their position.
struct LabeledDataset {
    std::vector<DatasetEntry> entries;
    std::map<std::string, std::size_t> classes; // label -> member count
    std::vector<std::string> warnings;          // skipped files, one line each

    const std::string& label_of(std::uint32_t image_id) const;
};

// Deterministic enumeration: classes and paths in sorted order. Files the
// registry cannot decode are skipped with a warning so that build and eval
// agree on id assignment.
LabeledDataset ingest_dataset(const std::string& root, const DecoderRegistry& registry);

// Baseline: compare against every stored signature. emd_evaluations is
// exactly the database size.
QueryResult ssf_scan(const std::vector<ImageSignature>& all, const ImageSignature& query,
                     std::size_t limit, const SignatureDistanceFn& distance);

struct PrecisionRecall {
    double precision = 0.0;
    std::optional<double> recall; // absent when the class has a single member
};

// Relevance = shared class label among the top-cutoff results, the query
// itself excluded (leave-one-in protocol).
PrecisionRecall precision_recall(const QueryResult& result, std::uint32_t query_id,
                                 const std::string& query_class, const LabeledDataset& dataset,
                                 std::size_t cutoff);

struct QueryRecord {
    std::uint32_t query_id = 0;
    std::string label;
    PrecisionRecall graph_pr;
    PrecisionRecall ssf_pr;
    std::size_t graph_evaluations = 0;
    std::size_t ssf_evaluations = 0;
    std::size_t clusters_visited = 0;
    double graph_wall_seconds = 0.0;
    double ssf_wall_seconds = 0.0;
};

struct ClassSummary {
    std::string label;
    std::size_t query_count = 0;
    double graph_mean_precision = 0.0;
    double ssf_mean_precision = 0.0;
    std::optional<double> graph_mean_recall;
    std::optional<double> ssf_mean_recall;
};

struct ComparisonPoint {
    std::size_t database_size = 0;
    std::uint64_t emd_evaluations = 0; // cumulative, to build a graph of that size
};

struct EvalParams {
    std::size_t cutoff = 20;
    std::size_t sample = 0; // 0 -> min(200, database size)
    std::uint64_t seed = 0;
    int workers = 0;
};

struct EvalReport {
    std::size_t database_size = 0;
    std::size_t sample_size = 0;
    std::size_t cutoff = 0;
    std::size_t cluster_count = 0;
    std::size_t edge_count = 0;

    std::uint64_t build_emd_evaluations = 0;
    double build_wall_seconds = 0.0;
    std::vector<ComparisonPoint> comparisons; // 10 checkpoints over database size

    std::vector<QueryRecord> queries;
    std::vector<ClassSummary> class_summaries; // sorted by label

    double graph_mean_precision = 0.0;
    double ssf_mean_precision = 0.0;
    std::optional<double> graph_mean_recall;
    std::optional<double> ssf_mean_recall;
    double mean_graph_evaluations = 0.0;
    double mean_ssf_evaluations = 0.0;
    double evaluation_ratio = 0.0; // total graph evals / total ssf evals
};

// Re-runs the insertion stream to measure build comparisons and wall time,
// then evaluates a seeded query sample against both search paths.
EvalReport run_evaluation(const LabeledDataset& dataset, const SignatureGraph& graph,
                          const SignatureDistanceFn& distance, const EvalParams& params);

// Writes <base>.eval.txt, <base>.queries.tsv and <base>.comparisons.tsv.
// Byte-deterministic for a fixed seed: wall times stay out of the files.
void write_report_files(const EvalReport& report, const Config& config,
                        const std::string& base_path);

} // namespace rbir

#endif // RBIR_EVAL_HPP
