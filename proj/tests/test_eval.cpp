#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rbir/eval.hpp"
#include "rbir/imaging.hpp"

using namespace rbir;
using rbir::testing::TempDir;
using rbir::testing::constant_image;
using rbir::testing::pseudo_distance;
using rbir::testing::random_signature;

namespace fs = std::filesystem;

namespace {

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void put_image(const fs::path& path, double shade) {
    fs::create_directories(path.parent_path());
    write_ppm(path.string(), constant_image(4, 4, Rgb{shade, shade, shade}));
}

// Three classes of ten, ids equal to positions, alongside a matching graph.
struct Scene {
    LabeledDataset dataset;
    std::vector<ImageSignature> stream;
    SignatureGraph graph;
};

Scene make_scene(double theta = 0.15) {
    Scene scene;
    SplitMix64 rng(2024);
    for (std::uint32_t id = 0; id < 30; ++id) {
        scene.stream.push_back(random_signature(id, rng));
        const std::string label = "c" + std::to_string(id / 10);
        scene.dataset.entries.push_back(DatasetEntry{id, "img" + std::to_string(id), label});
        ++scene.dataset.classes[label];
    }
    scene.graph = build_graph(scene.stream, theta, 2, pseudo_distance());
    return scene;
}

} // namespace

TEST_CASE("ingest: classes from directories, recursion flattened, files sorted") {
    TempDir dir("ingest");
    put_image(dir.path() / "a" / "img0.ppm", 0.1);
    put_image(dir.path() / "a" / "img1.ppm", 0.2);
    put_image(dir.path() / "b" / "img0.ppm", 0.3);
    put_image(dir.path() / "b" / "img3.ppm", 0.4);
    put_image(dir.path() / "b" / "sub" / "img2.ppm", 0.5);

    const LabeledDataset ds = ingest_dataset(dir.path().string(), DecoderRegistry::with_builtins());
    REQUIRE(ds.entries.size() == 5);
    CHECK(ds.classes.at("a") == 2);
    CHECK(ds.classes.at("b") == 3);
    const char* expected_suffix[] = {"a/img0.ppm", "a/img1.ppm", "b/img0.ppm", "b/img3.ppm",
                                     "b/sub/img2.ppm"};
    const char* expected_label[] = {"a", "a", "b", "b", "b"};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(ds.entries[i].id == i);
        CHECK(ds.entries[i].label == expected_label[i]);
        CHECK(ds.entries[i].path.ends_with(expected_suffix[i]));
        CHECK(ds.label_of(static_cast<std::uint32_t>(i)) == expected_label[i]);
    }
    CHECK(ds.warnings.empty());
    CHECK_THROWS_AS(ds.label_of(5), InvariantError);
}

TEST_CASE("ingest: stray and broken files produce warnings, not entries") {
    TempDir dir("ingest");
    put_image(dir.path() / "a" / "img0.ppm", 0.1);
    std::ofstream(dir.path() / "README") << "not an image\n";
    std::ofstream(dir.path() / "a" / "notes.txt") << "also not\n";
    std::ofstream(dir.path() / "a" / "broken.ppm") << "P6 garbage";

    const LabeledDataset ds = ingest_dataset(dir.path().string(), DecoderRegistry::with_builtins());
    REQUIRE(ds.entries.size() == 1);
    CHECK(ds.entries[0].path.ends_with("a/img0.ppm"));
    REQUIRE(ds.warnings.size() == 3);
    bool saw_outside = false, saw_unsupported = false, saw_undecodable = false;
    for (const std::string& w : ds.warnings) {
        saw_outside |= w.find("outside class directories") != std::string::npos;
        saw_unsupported |= w.find("unsupported") != std::string::npos;
        saw_undecodable |= w.find("undecodable") != std::string::npos;
    }
    CHECK(saw_outside);
    CHECK(saw_unsupported);
    CHECK(saw_undecodable);
}

TEST_CASE("ingest: hopeless roots are errors") {
    TempDir dir("ingest");
    CHECK_THROWS_AS(ingest_dataset((dir.path() / "missing").string(), DecoderRegistry::with_builtins()),
                    DataError);
    CHECK_THROWS_AS(ingest_dataset(dir.path().string(), DecoderRegistry::with_builtins()), DataError);

    fs::create_directories(dir.path() / "empty-class");
    CHECK_THROWS_AS(ingest_dataset(dir.path().string(), DecoderRegistry::with_builtins()), DataError);
}

TEST_CASE("ssf: full scan, self first, deterministic order") {
    SplitMix64 rng(8);
    std::vector<ImageSignature> all;
    for (std::uint32_t id = 0; id < 20; ++id) all.push_back(random_signature(id, rng));
    const SignatureDistanceFn dist = pseudo_distance();

    const QueryResult res = ssf_scan(all, all[7], 1000, dist);
    CHECK(res.emd_evaluations == 20);
    CHECK(res.clusters_visited == 0);
    REQUIRE(res.ranked.size() == 20);
    CHECK(res.ranked[0].image_id == 7);
    CHECK(res.ranked[0].distance == 0.0);
    for (std::size_t i = 1; i < res.ranked.size(); ++i)
        CHECK(res.ranked[i - 1].distance <= res.ranked[i].distance);
    for (const RankedMatch& m : res.ranked)
        CHECK(m.distance == dist(all[7], all[m.image_id]));

    const QueryResult top5 = ssf_scan(all, all[7], 5, dist);
    REQUIRE(top5.ranked.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(top5.ranked[i].image_id == res.ranked[i].image_id);

    CHECK_THROWS_AS(ssf_scan({}, all[0], 5, dist), DataError);
}

TEST_CASE("precision/recall: hand-checked contingency cases") {
    // class "x" has 21 members, "y" has 1, "z" has 5
    LabeledDataset ds;
    for (std::uint32_t id = 0; id < 21; ++id)
        ds.entries.push_back(DatasetEntry{id, "", "x"});
    ds.entries.push_back(DatasetEntry{21, "", "y"});
    for (std::uint32_t id = 22; id < 27; ++id)
        ds.entries.push_back(DatasetEntry{id, "", "z"});
    ds.classes = {{"x", 21}, {"y", 1}, {"z", 5}};

    SUBCASE("4 of 10 relevant against a 21-member class") {
        QueryResult res;
        res.ranked.push_back(RankedMatch{0, 0.0}); // the query itself, skipped
        for (std::uint32_t id = 1; id <= 4; ++id) res.ranked.push_back(RankedMatch{id, 0.1});
        for (std::uint32_t id = 22; id < 27; ++id) res.ranked.push_back(RankedMatch{id, 0.2});
        res.ranked.push_back(RankedMatch{21, 0.3});
        res.ranked.push_back(RankedMatch{5, 0.4}); // relevant but beyond the cutoff
        const PrecisionRecall pr = precision_recall(res, 0, "x", ds, 10);
        CHECK(pr.precision == doctest::Approx(0.4));
        REQUIRE(pr.recall.has_value());
        CHECK(*pr.recall == doctest::Approx(0.2)); // 4 / (21 - 1)
    }

    SUBCASE("perfect retrieval") {
        QueryResult res;
        for (std::uint32_t id = 23; id < 27; ++id) res.ranked.push_back(RankedMatch{id, 0.1});
        const PrecisionRecall pr = precision_recall(res, 22, "z", ds, 4);
        CHECK(pr.precision == doctest::Approx(1.0));
        CHECK(*pr.recall == doctest::Approx(1.0));
    }

    SUBCASE("nothing relevant") {
        QueryResult res;
        for (std::uint32_t id = 1; id <= 4; ++id) res.ranked.push_back(RankedMatch{id, 0.1});
        const PrecisionRecall pr = precision_recall(res, 22, "z", ds, 4);
        CHECK(pr.precision == 0.0);
        CHECK(*pr.recall == 0.0);
    }

    SUBCASE("singleton class has no recall") {
        QueryResult res;
        res.ranked.push_back(RankedMatch{0, 0.1});
        const PrecisionRecall pr = precision_recall(res, 21, "y", ds, 4);
        CHECK(pr.precision == 0.0);
        CHECK_FALSE(pr.recall.has_value());
    }

    SUBCASE("empty result list after self-exclusion") {
        QueryResult res;
        res.ranked.push_back(RankedMatch{0, 0.0});
        const PrecisionRecall pr = precision_recall(res, 0, "x", ds, 10);
        CHECK(pr.precision == 0.0);
        CHECK(*pr.recall == 0.0);
    }

    SUBCASE("guards") {
        QueryResult res;
        CHECK_THROWS_AS(precision_recall(res, 0, "x", ds, 0), DataError);
        CHECK_THROWS_AS(precision_recall(res, 0, "nope", ds, 4), DataError);
    }
}

TEST_CASE("run: totals, checkpoints and per-query records line up") {
    const Scene scene = make_scene();
    EvalParams params;
    params.cutoff = 5;
    params.sample = 0; // -> whole database of 30
    params.workers = 2;

    const EvalReport report = run_evaluation(scene.dataset, scene.graph, pseudo_distance(), params);
    CHECK(report.database_size == 30);
    CHECK(report.sample_size == 30);
    CHECK(report.cutoff == 5);
    CHECK(report.cluster_count == scene.graph.clusters().size());
    CHECK(report.edge_count == scene.graph.edges().size());
    CHECK(report.build_emd_evaluations > 0);

    REQUIRE(report.comparisons.size() == 10);
    CHECK(report.comparisons.front().database_size == 3);
    CHECK(report.comparisons.back().database_size == 30);
    CHECK(report.comparisons.back().emd_evaluations == report.build_emd_evaluations);
    for (std::size_t i = 1; i < report.comparisons.size(); ++i) {
        CHECK(report.comparisons[i].database_size > report.comparisons[i - 1].database_size);
        CHECK(report.comparisons[i].emd_evaluations >= report.comparisons[i - 1].emd_evaluations);
    }

    REQUIRE(report.queries.size() == 30);
    std::size_t class_query_total = 0;
    for (const ClassSummary& summary : report.class_summaries)
        class_query_total += summary.query_count;
    CHECK(class_query_total == 30);
    REQUIRE(report.class_summaries.size() == 3);
    CHECK(report.class_summaries[0].label == "c0");
    CHECK(report.class_summaries[2].label == "c2");

    // every record reproduces a direct query of both paths
    const SignatureDistanceFn dist = pseudo_distance();
    double graph_p = 0.0, ssf_p = 0.0;
    std::uint64_t graph_evals = 0, ssf_evals = 0;
    for (const QueryRecord& rec : report.queries) {
        const ImageSignature& query = scene.graph.signature(rec.query_id);
        const QueryResult g = query_graph(scene.graph, query, params.cutoff + 1, dist);
        const QueryResult s = ssf_scan(scene.graph.signatures(), query, params.cutoff + 1, dist);
        const PrecisionRecall gpr =
            precision_recall(g, rec.query_id, rec.label, scene.dataset, params.cutoff);
        const PrecisionRecall spr =
            precision_recall(s, rec.query_id, rec.label, scene.dataset, params.cutoff);
        CHECK(rec.graph_pr.precision == doctest::Approx(gpr.precision));
        CHECK(rec.ssf_pr.precision == doctest::Approx(spr.precision));
        CHECK(rec.graph_evaluations == g.emd_evaluations);
        CHECK(rec.ssf_evaluations == 30);
        CHECK(rec.clusters_visited == g.clusters_visited);
        graph_p += rec.graph_pr.precision;
        ssf_p += rec.ssf_pr.precision;
        graph_evals += rec.graph_evaluations;
        ssf_evals += rec.ssf_evaluations;
    }
    CHECK(report.graph_mean_precision == doctest::Approx(graph_p / 30));
    CHECK(report.ssf_mean_precision == doctest::Approx(ssf_p / 30));
    CHECK(report.mean_graph_evaluations == doctest::Approx(graph_evals / 30.0));
    CHECK(report.mean_ssf_evaluations == doctest::Approx(30.0));
    CHECK(report.evaluation_ratio ==
          doctest::Approx(static_cast<double>(graph_evals) / ssf_evals));

    // a second run is identical, worker count aside
    EvalParams serial = params;
    serial.workers = 1;
    const EvalReport again = run_evaluation(scene.dataset, scene.graph, pseudo_distance(), serial);
    REQUIRE(again.queries.size() == report.queries.size());
    for (std::size_t i = 0; i < report.queries.size(); ++i) {
        CHECK(again.queries[i].query_id == report.queries[i].query_id);
        CHECK(again.queries[i].graph_pr.precision == report.queries[i].graph_pr.precision);
        CHECK(again.queries[i].ssf_pr.precision == report.queries[i].ssf_pr.precision);
    }
    CHECK(again.graph_mean_precision == report.graph_mean_precision);
    CHECK(again.evaluation_ratio == report.evaluation_ratio);
}

TEST_CASE("run: sampling is seeded and bounded") {
    const Scene scene = make_scene();
    EvalParams params;
    params.cutoff = 3;
    params.sample = 10;
    params.seed = 5;

    const EvalReport report = run_evaluation(scene.dataset, scene.graph, pseudo_distance(), params);
    CHECK(report.sample_size == 10);
    REQUIRE(report.queries.size() == 10);
    for (std::size_t i = 1; i < report.queries.size(); ++i)
        CHECK(report.queries[i].query_id > report.queries[i - 1].query_id);

    EvalParams other_seed = params;
    other_seed.seed = 6;
    const EvalReport shifted =
        run_evaluation(scene.dataset, scene.graph, pseudo_distance(), other_seed);
    bool same = shifted.queries.size() == report.queries.size();
    if (same)
        for (std::size_t i = 0; i < report.queries.size(); ++i)
            same = same && shifted.queries[i].query_id == report.queries[i].query_id;
    CHECK_FALSE(same);

    params.sample = 31;
    CHECK_THROWS_AS(run_evaluation(scene.dataset, scene.graph, pseudo_distance(), params),
                    DataError);
    params.sample = 10;
    params.cutoff = 0;
    CHECK_THROWS_AS(run_evaluation(scene.dataset, scene.graph, pseudo_distance(), params),
                    DataError);
}

TEST_CASE("run: a single cluster makes both search paths agree") {
    const Scene scene = make_scene(50.0); // theta so large everything joins cluster 0
    REQUIRE(scene.graph.clusters().size() == 1);
    EvalParams params;
    params.cutoff = 5;
    const EvalReport report = run_evaluation(scene.dataset, scene.graph, pseudo_distance(), params);
    for (const QueryRecord& rec : report.queries) {
        CHECK(rec.graph_pr.precision == rec.ssf_pr.precision);
        CHECK(rec.graph_evaluations == 31); // one center scan + all members
        CHECK(rec.ssf_evaluations == 30);
    }
    CHECK(report.graph_mean_precision == doctest::Approx(report.ssf_mean_precision));
}

TEST_CASE("run: dataset and graph must describe the same images") {
    const Scene scene = make_scene();

    LabeledDataset short_ds = scene.dataset;
    short_ds.entries.pop_back();
    --short_ds.classes["c2"];
    CHECK_THROWS_AS(run_evaluation(short_ds, scene.graph, pseudo_distance(), EvalParams{}),
                    DataError);
}

TEST_CASE("report files: deterministic bytes, checksummed summary") {
    const Scene scene = make_scene();
    EvalParams params;
    params.cutoff = 4;
    params.sample = 12;
    const EvalReport report = run_evaluation(scene.dataset, scene.graph, pseudo_distance(), params);

    Config config;
    config.theta = scene.graph.theta();
    config.cutoff = params.cutoff;
    config.sample = params.sample;

    TempDir dir("report");
    const std::string base = dir.file("run.idx");
    write_report_files(report, config, base);
    const std::string eval_a = read_all(base + ".eval.txt");
    const std::string queries_a = read_all(base + ".queries.tsv");
    const std::string comparisons_a = read_all(base + ".comparisons.tsv");

    write_report_files(report, config, base);
    CHECK(read_all(base + ".eval.txt") == eval_a);
    CHECK(read_all(base + ".queries.tsv") == queries_a);
    CHECK(read_all(base + ".comparisons.tsv") == comparisons_a);

    CHECK(eval_a.rfind("rbir-eval\t1\n", 0) == 0);
    CHECK(eval_a.find("[summary]") != std::string::npos);
    CHECK(eval_a.find("graph_mean_precision") != std::string::npos);
    CHECK(eval_a.find("wall") == std::string::npos);

    // final line carries the body checksum
    const std::size_t last_nl = eval_a.find_last_of('\n', eval_a.size() - 2);
    const std::string body = eval_a.substr(0, last_nl + 1);
    const std::string last_line = eval_a.substr(last_nl + 1, eval_a.size() - last_nl - 2);
    static const char digits[] = "0123456789abcdef";
    const std::uint64_t sum = fnv1a64(body);
    std::string hex(16, '0');
    for (int i = 0; i < 16; ++i) hex[15 - i] = digits[(sum >> (4 * i)) & 0xf];
    CHECK(last_line == "checksum\t" + hex);

    // one row per query plus the header; one checkpoint per comparison point
    const auto count_lines = [](const std::string& text) {
        return std::count(text.begin(), text.end(), '\n');
    };
    CHECK(count_lines(queries_a) == 1 + 12);
    CHECK(count_lines(comparisons_a) == 1 + static_cast<long>(report.comparisons.size()));
    CHECK(queries_a.rfind("query_id\t", 0) == 0);
    CHECK(comparisons_a.rfind("database_size\t", 0) == 0);
}
