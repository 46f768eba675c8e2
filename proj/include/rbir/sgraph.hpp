// sgraph.hpp - the clustered signature graph index: clusters with radii
// k_i * theta, weighted edges between near centers, the three-case
// distribution rule, and the two-step candidate search.

#ifndef RBIR_SGRAPH_HPP
#define RBIR_SGRAPH_HPP

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "rbir/emd.hpp"
#include "rbir/signature.hpp"

namespace rbir {

struct ClusterMember {
    std::uint32_t image_id = 0;
    double stored_distance = 0.0;
    // Case 2.2 stores the clamped radius value instead of the true distance.
    bool clamped = false;
};

struct Cluster {
    std::uint32_t center_id = 0;
    int k = 1;
    std::vector<ClusterMember> members;

    double radius(double theta) const { return k * theta; }
    std::size_t clamped_count() const {
        std::size_t c = 0;
        for (const ClusterMember& mem : members) c += mem.clamped ? 1 : 0;
        return c;
    }
};

// Undirected, a < b are cluster indices, weight is the center-pair distance.
struct GraphEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

// Distance between two signatures. Injected so the index logic can be
// exercised with controlled distances; production binds EMD via
// make_emd_distance_fn.
using SignatureDistanceFn =
    std::function<double(const ImageSignature&, const ImageSignature&)>;

SignatureDistanceFn make_emd_distance_fn(const ColorPalette& palette);

class SignatureGraph {
public:
    SignatureGraph() = default;
    SignatureGraph(double theta, int k_edge);

    double theta() const { return theta_; }
    int k_edge() const { return k_edge_; }
    double edge_threshold() const { return k_edge_ * theta_; }

    const std::vector<Cluster>& clusters() const { return clusters_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    // Signatures in insertion order.
    const std::vector<ImageSignature>& signatures() const { return signatures_; }

    bool empty() const { return clusters_.empty(); }
    std::size_t image_count() const { return signatures_.size(); }
    bool contains(std::uint32_t image_id) const;
    const ImageSignature& signature(std::uint32_t image_id) const;
    const ImageSignature& center_signature(std::size_t cluster_index) const;

    std::size_t total_clamped_members() const;

    // Mutators used by the build path.
    void seed_first_cluster(ImageSignature sig);
    void add_member(std::size_t cluster_index, ImageSignature sig, double stored_distance,
                    bool clamped);
    std::size_t add_cluster(ImageSignature sig, int k);
    void add_edge(std::size_t a, std::size_t b, double weight);

    // Reassembles a graph from serialized parts, keeping the signature
    // insertion order; the caller is expected to validate() afterwards.
    static SignatureGraph restore(double theta, int k_edge,
                                  std::vector<ImageSignature> signatures,
                                  std::vector<Cluster> clusters, std::vector<GraphEdge> edges);

    // Structural invariants: disjoint clusters covering all signatures,
    // member distances within radii, centers self-registered at distance 0,
    // edges valid and within the k*theta threshold. Throws InvariantError.
    void validate() const;

private:
    double theta_ = 0.0;
    int k_edge_ = 1;
    std::vector<Cluster> clusters_;
    std::vector<GraphEdge> edges_;
    std::vector<ImageSignature> signatures_;
    std::unordered_map<std::uint32_t, std::size_t> signature_index_;
};

struct AssignmentOutcome {
    enum class Kind { joined, new_cluster, force_joined };
    Kind kind = Kind::joined;
    std::size_t cluster_index = 0;
    double stored_distance = 0.0;
    std::size_t emd_evaluations = 0; // center scans performed
};

// The three-case distribution rule: nearest center by the slack
// phi - k_i*theta; join when phi <= k_m*theta, otherwise spawn a cluster of
// radius floor((phi - k_m*theta)/theta) * theta, or force-join with the
// distance clamped to the radius when that floor is zero. New clusters gain
// edges to every existing center within k_edge * theta, reusing the scan
// distances.
AssignmentOutcome assign_image(SignatureGraph& graph, ImageSignature sig,
                               const SignatureDistanceFn& distance);

struct BuildStats {
    std::uint64_t emd_evaluations = 0;
    // After each insertion, the running evaluation total (index i = first
    // i+1 images inserted).
    std::vector<std::uint64_t> cumulative_evaluations;
};

// Sequential construction; the first signature seeds cluster 0 with k = 1.
SignatureGraph build_graph(const std::vector<ImageSignature>& stream, double theta, int k_edge,
                           const SignatureDistanceFn& distance, BuildStats* stats = nullptr);

struct CandidateSet {
    std::vector<std::uint32_t> member_ids;
    std::size_t clusters_visited = 0;
    std::size_t center_evaluations = 0;
    std::size_t best_cluster = 0;
    double phi_min = 0.0;
};

// Two-step search: nearest center by full center scan, then the union of
// members of every cluster whose center lies within k_edge * theta of it
// (via the precomputed edges; no center-center re-evaluation).
CandidateSet search(const SignatureGraph& graph, const ImageSignature& query,
                    const SignatureDistanceFn& distance);

struct RankedMatch {
    std::uint32_t image_id = 0;
    double distance = 0.0;
};

struct QueryResult {
    std::vector<RankedMatch> ranked; // ascending distance, ties by id
    std::size_t emd_evaluations = 0; // center scans + candidate evaluations
    std::size_t clusters_visited = 0;
};

QueryResult rank_results(const SignatureGraph& graph, const CandidateSet& candidates,
                         const ImageSignature& query, std::size_t limit,
                         const SignatureDistanceFn& distance);

// search + rank in one call.
QueryResult query_graph(const SignatureGraph& graph, const ImageSignature& query,
                        std::size_t limit, const SignatureDistanceFn& distance);

} // namespace rbir

#endif // RBIR_SGRAPH_HPP
