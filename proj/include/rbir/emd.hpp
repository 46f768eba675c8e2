// emd.hpp - earth mover's distance between image signatures as a
// minimum-cost transportation problem over palette colors.

#ifndef RBIR_EMD_HPP
#define RBIR_EMD_HPP

#include <cstdint>
#include <vector>

#include "rbir/signature.hpp"

namespace rbir {

// Pairwise Euclidean RGB distances between palette colors.
struct GroundDistanceMatrix {
    std::size_t n = 0;
    std::vector<double> d; // row-major n x n

    double at(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

GroundDistanceMatrix ground_distances(const ColorPalette& palette);

struct FlowMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> f; // row-major

    double at(std::size_t i, std::size_t j) const { return f[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return f[i * cols + j]; }

    double total() const {
        double t = 0.0;
        for (double v : f) t += v;
        return t;
    }
};

struct TransportSolution {
    FlowMatrix flow;
    double total_cost = 0.0;
    std::size_t pivots = 0;
};

// Exact transportation simplex (northwest-corner start, MODI pivoting,
// Bland's rule under degenerate stalling). Moves min(sum supplies,
// sum demands) units at minimum cost; unbalanced instances are balanced
// internally with a zero-cost dummy node. costs is row-major
// |supplies| x |demands|.
TransportSolution solve_transportation(const std::vector<double>& supplies,
                                       const std::vector<double>& demands,
                                       const std::vector<double>& costs);

// min Sum(d_ij f_ij) / W_m with W_m = min of the two weight totals.
double emd_between_weights(const WeightVector& supply_side, const WeightVector& demand_side,
                           const GroundDistanceMatrix& ground);

// EMD over the aggregated per-color signature weights. Both signatures must
// share the palette size and block width.
double emd_distance(const ImageSignature& a, const ImageSignature& b,
                    const ColorPalette& palette);

// Process-wide count of EMD evaluations (every transportation solve issued
// through emd_between_weights / emd_distance).
std::uint64_t emd_evaluation_count();
void reset_emd_evaluation_count();

} // namespace rbir

#endif // RBIR_EMD_HPP
