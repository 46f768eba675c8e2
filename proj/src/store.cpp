// store.cpp - index file serialization and validated reload.

#include "rbir/store.hpp"

#include <fstream>
#include <sstream>

namespace rbir {

namespace {

constexpr const char* kMagic = "rbir-index";
constexpr int kFormatVersion = 1;

std::string checksum_hex(std::string_view body) {
    static const char digits[] = "0123456789abcdef";
    const std::uint64_t sum = fnv1a64(body);
    std::string hex(16, '0');
    for (int i = 0; i < 16; ++i) hex[15 - i] = digits[(sum >> (4 * i)) & 0xf];
    return hex;
}

// Line-oriented reader over the already checksum-verified body.
class BodyReader {
public:
    explicit BodyReader(std::string body) : body_(std::move(body)) {}

    bool next(std::string& line) {
        if (pos_ >= body_.size()) return false;
        const std::size_t nl = body_.find('\n', pos_);
        if (nl == std::string::npos) throw DataError("index file: unterminated line");
        line = body_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        ++lineno_;
        return true;
    }

    std::string expect_line(const std::string& what) {
        std::string line;
        if (!next(line)) throw DataError("index file: truncated, expected " + what);
        return line;
    }

    int lineno() const { return lineno_; }

private:
    std::string body_;
    std::size_t pos_ = 0;
    int lineno_ = 0;
};

std::pair<std::string, long long> parse_section_header(const std::string& line,
                                                       const std::string& expected) {
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 2 || fields[0] != "[" + expected + "]")
        throw DataError("index file: expected [" + expected + "] section, got '" + line + "'");
    return {fields[0], parse_int(fields[1], expected + " count")};
}

} // namespace

void save_index(const IndexData& data, const std::string& path) {
    data.graph.validate();
    if (!data.config.theta || *data.config.theta != data.graph.theta())
        throw InvariantError("save_index: config theta does not match graph theta");
    if (data.config.k_edge != data.graph.k_edge())
        throw InvariantError("save_index: config k_edge does not match graph k_edge");
    if (data.catalog.size() != data.graph.image_count())
        throw InvariantError("save_index: catalog size does not match signature count");
    for (std::size_t i = 0; i < data.catalog.size(); ++i)
        if (data.catalog[i].id != data.graph.signatures()[i].image_id())
            throw InvariantError("save_index: catalog order does not match signature order");
    data.palette.validate();

    std::ostringstream out;
    out << kMagic << "\t" << kFormatVersion << "\n";

    out << "[config]\t" << data.config.items().size() << "\n";
    for (const auto& [key, value] : data.config.items()) out << key << " = " << value << "\n";

    out << "[palette]\t" << data.palette.size() << "\n";
    for (const Rgb& c : data.palette.colors)
        out << format_double(c.r) << " " << format_double(c.g) << " " << format_double(c.b)
            << "\n";

    out << "[images]\t" << data.catalog.size() << "\n";
    for (std::size_t i = 0; i < data.catalog.size(); ++i) {
        const ImageSignature& sig = data.graph.signatures()[i];
        out << data.catalog[i].id << "\t" << sig.region_count() << "\t" << sig.to_hex() << "\t"
            << data.catalog[i].path << "\n";
    }

    out << "[clusters]\t" << data.graph.clusters().size() << "\n";
    for (const Cluster& cluster : data.graph.clusters()) {
        out << "cluster\t" << cluster.center_id << "\t" << cluster.k << "\t"
            << cluster.members.size() << "\n";
        for (const ClusterMember& mem : cluster.members)
            out << "member\t" << mem.image_id << "\t" << format_double(mem.stored_distance)
                << "\t" << (mem.clamped ? 1 : 0) << "\n";
    }

    out << "[edges]\t" << data.graph.edges().size() << "\n";
    for (const GraphEdge& e : data.graph.edges())
        out << e.a << "\t" << e.b << "\t" << format_double(e.weight) << "\n";

    const std::string body = out.str();
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write index file: " + path);
    file << body << "checksum\t" << checksum_hex(body) << "\n";
    if (!file) throw DataError("write failed: " + path);
}

IndexData load_index(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open index file: " + path);
    std::string content(std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>{});

    // The checksum line is the last one; everything before it is the body.
    if (content.empty() || content.back() != '\n')
        throw DataError("index file corrupt: missing final newline");
    const std::size_t last_nl = content.find_last_of('\n', content.size() - 2);
    const std::size_t body_len = (last_nl == std::string::npos) ? 0 : last_nl + 1;
    const std::string last_line = content.substr(body_len, content.size() - body_len - 1);
    const auto checksum_fields = split_fields(last_line, '\t');
    if (checksum_fields.size() != 2 || checksum_fields[0] != "checksum")
        throw DataError("index file corrupt: missing checksum line");
    const std::string body = content.substr(0, body_len);
    if (checksum_hex(body) != checksum_fields[1])
        throw DataError("index file corrupt: checksum mismatch");

    BodyReader reader(body);
    const auto magic_fields = split_fields(reader.expect_line("header"), '\t');
    if (magic_fields.size() != 2 || magic_fields[0] != kMagic)
        throw DataError("not an index file: " + path);
    const long long version = parse_int(magic_fields[1], "format version");
    if (version != kFormatVersion)
        throw DataError("unsupported index format version " + std::to_string(version));

    IndexData data;

    const auto [config_tag, config_count] =
        parse_section_header(reader.expect_line("[config]"), "config");
    (void)config_tag;
    for (long long i = 0; i < config_count; ++i) {
        const std::string line = reader.expect_line("config entry");
        const std::size_t eq = line.find(" = ");
        if (eq == std::string::npos) throw DataError("index file: malformed config line");
        data.config.set(line.substr(0, eq), line.substr(eq + 3));
    }
    data.config.validate();
    if (!data.config.theta) throw DataError("index file: stored config is missing theta");

    const auto [palette_tag, palette_count] =
        parse_section_header(reader.expect_line("[palette]"), "palette");
    (void)palette_tag;
    for (long long i = 0; i < palette_count; ++i) {
        const std::string line = reader.expect_line("palette color");
        const auto fields = split_fields(line, ' ');
        if (fields.size() != 3) throw DataError("index file: malformed palette line");
        data.palette.colors.push_back(Rgb{parse_double(fields[0], "palette r"),
                                          parse_double(fields[1], "palette g"),
                                          parse_double(fields[2], "palette b")});
    }
    data.palette.validate();

    const auto [images_tag, image_count] =
        parse_section_header(reader.expect_line("[images]"), "images");
    (void)images_tag;
    std::vector<ImageSignature> signatures;
    signatures.reserve(static_cast<std::size_t>(image_count));
    for (long long i = 0; i < image_count; ++i) {
        const std::string line = reader.expect_line("image entry");
        const auto fields = split_fields(line, '\t');
        if (fields.size() < 4) throw DataError("index file: malformed image line");
        const auto id = static_cast<std::uint32_t>(parse_int(fields[0], "image id"));
        const auto regions = static_cast<std::size_t>(parse_int(fields[1], "region count"));
        // Paths may contain tabs in principle; rejoin the remainder.
        std::string img_path = fields[3];
        for (std::size_t f = 4; f < fields.size(); ++f) img_path += "\t" + fields[f];
        signatures.push_back(ImageSignature::from_hex(id, regions, data.palette.size(),
                                                      data.config.block_width, fields[2]));
        data.catalog.push_back(CatalogEntry{id, img_path});
    }

    const auto [clusters_tag, cluster_count] =
        parse_section_header(reader.expect_line("[clusters]"), "clusters");
    (void)clusters_tag;
    std::vector<Cluster> clusters;
    clusters.reserve(static_cast<std::size_t>(cluster_count));
    for (long long c = 0; c < cluster_count; ++c) {
        const auto fields = split_fields(reader.expect_line("cluster header"), '\t');
        if (fields.size() != 4 || fields[0] != "cluster")
            throw DataError("index file: malformed cluster header");
        Cluster cluster;
        cluster.center_id = static_cast<std::uint32_t>(parse_int(fields[1], "center id"));
        cluster.k = static_cast<int>(parse_int(fields[2], "cluster k"));
        const long long member_count = parse_int(fields[3], "member count");
        for (long long m = 0; m < member_count; ++m) {
            const auto mf = split_fields(reader.expect_line("cluster member"), '\t');
            if (mf.size() != 4 || mf[0] != "member")
                throw DataError("index file: malformed member line");
            cluster.members.push_back(
                ClusterMember{static_cast<std::uint32_t>(parse_int(mf[1], "member id")),
                              parse_double(mf[2], "member distance"),
                              parse_int(mf[3], "member clamped flag") != 0});
        }
        clusters.push_back(std::move(cluster));
    }

    const auto [edges_tag, edge_count] =
        parse_section_header(reader.expect_line("[edges]"), "edges");
    (void)edges_tag;
    std::vector<GraphEdge> edges;
    edges.reserve(static_cast<std::size_t>(edge_count));
    for (long long e = 0; e < edge_count; ++e) {
        const auto fields = split_fields(reader.expect_line("edge"), '\t');
        if (fields.size() != 3) throw DataError("index file: malformed edge line");
        edges.push_back(GraphEdge{static_cast<std::size_t>(parse_int(fields[0], "edge a")),
                                  static_cast<std::size_t>(parse_int(fields[1], "edge b")),
                                  parse_double(fields[2], "edge weight")});
    }

    std::string trailing;
    if (reader.next(trailing)) throw DataError("index file: trailing data after edges");

    SignatureGraph graph;
    try {
        graph = SignatureGraph::restore(*data.config.theta, data.config.k_edge,
                                        std::move(signatures), std::move(clusters),
                                        std::move(edges));
        graph.validate();
    } catch (const InvariantError& e) {
        // Structural damage in a file is a data problem for the caller.
        throw DataError(std::string("index file failed validation: ") + e.what());
    }

    // Catalog entries must pair 1:1 with signatures.
    for (std::size_t i = 0; i < data.catalog.size(); ++i)
        if (data.catalog[i].id != graph.signatures()[i].image_id())
            throw DataError("index file: catalog does not match signature order");

    data.graph = std::move(graph);
    return data;
}

} // namespace rbir
