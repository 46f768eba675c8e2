// sgraph.cpp - S-kGraph construction and search.

#include "rbir/sgraph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace rbir {

namespace {

constexpr double kDistanceSlack = 1e-9;

} // namespace

SignatureDistanceFn make_emd_distance_fn(const ColorPalette& palette) {
    palette.validate();
    auto ground = std::make_shared<GroundDistanceMatrix>(ground_distances(palette));
    return [ground](const ImageSignature& a, const ImageSignature& b) {
        return emd_between_weights(signature_weights(a), signature_weights(b), *ground);
    };
}

SignatureGraph::SignatureGraph(double theta, int k_edge) : theta_(theta), k_edge_(k_edge) {
    if (theta <= 0.0) throw DataError("signature graph: theta must be positive");
    if (k_edge < 1) throw DataError("signature graph: k_edge must be >= 1");
}

bool SignatureGraph::contains(std::uint32_t image_id) const {
    return signature_index_.count(image_id) != 0;
}

const ImageSignature& SignatureGraph::signature(std::uint32_t image_id) const {
    const auto it = signature_index_.find(image_id);
    if (it == signature_index_.end())
        throw DataError("signature graph: unknown image id " + std::to_string(image_id));
    return signatures_[it->second];
}

const ImageSignature& SignatureGraph::center_signature(std::size_t cluster_index) const {
    return signature(clusters_.at(cluster_index).center_id);
}

std::size_t SignatureGraph::total_clamped_members() const {
    std::size_t total = 0;
    for (const Cluster& c : clusters_) total += c.clamped_count();
    return total;
}

void SignatureGraph::seed_first_cluster(ImageSignature sig) {
    if (!clusters_.empty()) throw InvariantError("seed_first_cluster on a nonempty graph");
    add_cluster(std::move(sig), 1);
}

void SignatureGraph::add_member(std::size_t cluster_index, ImageSignature sig,
                                double stored_distance, bool clamped) {
    if (contains(sig.image_id()))
        throw DataError("signature graph: duplicate image id " + std::to_string(sig.image_id()));
    const std::uint32_t id = sig.image_id();
    signature_index_[id] = signatures_.size();
    signatures_.push_back(std::move(sig));
    clusters_.at(cluster_index).members.push_back(ClusterMember{id, stored_distance, clamped});
}

std::size_t SignatureGraph::add_cluster(ImageSignature sig, int k) {
    if (contains(sig.image_id()))
        throw DataError("signature graph: duplicate image id " + std::to_string(sig.image_id()));
    if (k < 1) throw DataError("signature graph: cluster k must be >= 1");
    const std::uint32_t id = sig.image_id();
    signature_index_[id] = signatures_.size();
    signatures_.push_back(std::move(sig));
    Cluster cluster;
    cluster.center_id = id;
    cluster.k = k;
    cluster.members.push_back(ClusterMember{id, 0.0, false});
    clusters_.push_back(std::move(cluster));
    return clusters_.size() - 1;
}

void SignatureGraph::add_edge(std::size_t a, std::size_t b, double weight) {
    if (a == b) throw DataError("signature graph: self edge");
    if (a > b) std::swap(a, b);
    edges_.push_back(GraphEdge{a, b, weight});
}

SignatureGraph SignatureGraph::restore(double theta, int k_edge,
                                       std::vector<ImageSignature> signatures,
                                       std::vector<Cluster> clusters,
                                       std::vector<GraphEdge> edges) {
    SignatureGraph graph(theta, k_edge);
    graph.signatures_ = std::move(signatures);
    graph.clusters_ = std::move(clusters);
    graph.edges_ = std::move(edges);
    for (std::size_t i = 0; i < graph.signatures_.size(); ++i) {
        if (!graph.signature_index_.emplace(graph.signatures_[i].image_id(), i).second)
            throw DataError("signature graph: duplicate image id " +
                            std::to_string(graph.signatures_[i].image_id()));
    }
    return graph;
}

void SignatureGraph::validate() const {
    if (theta_ <= 0.0) throw InvariantError("graph invariant: theta must be positive");
    if (k_edge_ < 1) throw InvariantError("graph invariant: k_edge must be >= 1");

    std::unordered_map<std::uint32_t, std::size_t> seen;
    for (std::size_t ci = 0; ci < clusters_.size(); ++ci) {
        const Cluster& cluster = clusters_[ci];
        if (cluster.k < 1) throw InvariantError("graph invariant: cluster k < 1");
        if (cluster.members.empty()) throw InvariantError("graph invariant: empty cluster");
        bool center_found = false;
        for (const ClusterMember& mem : cluster.members) {
            if (!contains(mem.image_id))
                throw InvariantError("graph invariant: member id not among stored signatures");
            if (!seen.emplace(mem.image_id, ci).second)
                throw InvariantError("graph invariant: image id appears in two clusters");
            if (mem.stored_distance < 0.0 ||
                mem.stored_distance > cluster.radius(theta_) + kDistanceSlack)
                throw InvariantError("graph invariant: stored distance exceeds cluster radius");
            if (mem.image_id == cluster.center_id && mem.stored_distance == 0.0)
                center_found = true;
        }
        if (!center_found)
            throw InvariantError("graph invariant: center missing from members at distance 0");
    }
    if (seen.size() != signatures_.size())
        throw InvariantError("graph invariant: clusters do not cover all inserted signatures");

    std::vector<char> edge_seen(clusters_.size() * clusters_.size(), 0);
    for (const GraphEdge& e : edges_) {
        if (e.a >= clusters_.size() || e.b >= clusters_.size() || e.a >= e.b)
            throw InvariantError("graph invariant: malformed edge");
        if (edge_seen[e.a * clusters_.size() + e.b]++)
            throw InvariantError("graph invariant: duplicate edge");
        if (e.weight < 0.0 || e.weight > edge_threshold() + kDistanceSlack)
            throw InvariantError("graph invariant: edge weight exceeds k_edge * theta");
    }
}

AssignmentOutcome assign_image(SignatureGraph& graph, ImageSignature sig,
                               const SignatureDistanceFn& distance) {
    if (graph.empty()) throw DataError("assign_image: graph has no clusters yet");
    if (graph.contains(sig.image_id()))
        throw DataError("assign_image: duplicate image id " + std::to_string(sig.image_id()));

    const double theta = graph.theta();
    const std::size_t n_clusters = graph.clusters().size();

    // Scan every center once; these distances also provide the edge weights
    // when a new cluster is created.
    std::vector<double> center_distance(n_clusters, 0.0);
    std::size_t best = 0;
    double best_slack = 0.0;
    for (std::size_t i = 0; i < n_clusters; ++i) {
        const double phi = distance(sig, graph.center_signature(i));
        center_distance[i] = phi;
        const double slack = phi - graph.clusters()[i].radius(theta);
        if (i == 0 || slack < best_slack) {
            best_slack = slack;
            best = i;
        }
    }

    AssignmentOutcome outcome;
    outcome.emd_evaluations = n_clusters;
    const double phi_best = center_distance[best];
    const double radius_best = graph.clusters()[best].radius(theta);

    if (phi_best <= radius_best) {
        graph.add_member(best, std::move(sig), phi_best, false);
        outcome.kind = AssignmentOutcome::Kind::joined;
        outcome.cluster_index = best;
        outcome.stored_distance = phi_best;
        return outcome;
    }

    const int k0 = static_cast<int>(std::floor((phi_best - radius_best) / theta));
    if (k0 > 0) {
        const std::size_t created = graph.add_cluster(std::move(sig), k0);
        for (std::size_t i = 0; i < n_clusters; ++i)
            if (center_distance[i] <= graph.edge_threshold())
                graph.add_edge(created, i, center_distance[i]);
        outcome.kind = AssignmentOutcome::Kind::new_cluster;
        outcome.cluster_index = created;
        outcome.stored_distance = 0.0;
        return outcome;
    }

    // Case 2.2: the distance is overwritten with the radius value.
    graph.add_member(best, std::move(sig), radius_best, true);
    outcome.kind = AssignmentOutcome::Kind::force_joined;
    outcome.cluster_index = best;
    outcome.stored_distance = radius_best;
    return outcome;
}

SignatureGraph build_graph(const std::vector<ImageSignature>& stream, double theta, int k_edge,
                           const SignatureDistanceFn& distance, BuildStats* stats) {
    if (stream.empty()) throw DataError("build_graph: empty signature stream");
    SignatureGraph graph(theta, k_edge);
    std::uint64_t evaluations = 0;
    if (stats) {
        stats->emd_evaluations = 0;
        stats->cumulative_evaluations.clear();
        stats->cumulative_evaluations.reserve(stream.size());
    }
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (i == 0) {
            graph.seed_first_cluster(stream[i]);
        } else {
            evaluations += assign_image(graph, stream[i], distance).emd_evaluations;
        }
        if (stats) stats->cumulative_evaluations.push_back(evaluations);
    }
    if (stats) stats->emd_evaluations = evaluations;
    return graph;
}

CandidateSet search(const SignatureGraph& graph, const ImageSignature& query,
                    const SignatureDistanceFn& distance) {
    if (graph.empty()) throw DataError("search: graph has no clusters");

    CandidateSet out;
    const std::size_t n_clusters = graph.clusters().size();
    out.center_evaluations = n_clusters;
    std::size_t best = 0;
    double phi_min = 0.0;
    for (std::size_t i = 0; i < n_clusters; ++i) {
        const double phi = distance(query, graph.center_signature(i));
        if (i == 0 || phi < phi_min) {
            phi_min = phi;
            best = i;
        }
    }
    out.best_cluster = best;
    out.phi_min = phi_min;

    // Clusters adjacent to the best one via the precomputed edges, plus the
    // best cluster itself (center-to-self distance 0).
    std::vector<char> selected(n_clusters, 0);
    selected[best] = 1;
    for (const GraphEdge& e : graph.edges()) {
        if (e.a == best) selected[e.b] = 1;
        if (e.b == best) selected[e.a] = 1;
    }
    for (std::size_t i = 0; i < n_clusters; ++i) {
        if (!selected[i]) continue;
        ++out.clusters_visited;
        for (const ClusterMember& mem : graph.clusters()[i].members)
            out.member_ids.push_back(mem.image_id);
    }
    return out;
}

QueryResult rank_results(const SignatureGraph& graph, const CandidateSet& candidates,
                         const ImageSignature& query, std::size_t limit,
                         const SignatureDistanceFn& distance) {
    QueryResult result;
    result.clusters_visited = candidates.clusters_visited;
    result.emd_evaluations = candidates.center_evaluations + candidates.member_ids.size();
    result.ranked.reserve(candidates.member_ids.size());
    for (std::uint32_t id : candidates.member_ids)
        result.ranked.push_back(RankedMatch{id, distance(query, graph.signature(id))});
    std::sort(result.ranked.begin(), result.ranked.end(),
              [](const RankedMatch& a, const RankedMatch& b) {
                  if (a.distance != b.distance) return a.distance < b.distance;
                  return a.image_id < b.image_id;
              });
    if (result.ranked.size() > limit) result.ranked.resize(limit);
    return result;
}

QueryResult query_graph(const SignatureGraph& graph, const ImageSignature& query,
                        std::size_t limit, const SignatureDistanceFn& distance) {
    return rank_results(graph, search(graph, query, distance), query, limit, distance);
}

} // namespace rbir
