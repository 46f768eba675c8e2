// emd.cpp - transportation simplex and the EMD similarity measure.

#include "rbir/emd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace rbir {

namespace {

std::atomic<std::uint64_t> g_emd_evaluations{0};

struct BasisCell {
    int row = 0;
    int col = 0;
    double flow = 0.0;
};

// Balanced transportation simplex working state. Rows/cols here are the
// reduced problem (zero entries dropped, dummy appended when unbalanced).
class TransportationSimplex {
public:
    TransportationSimplex(std::vector<double> supplies, std::vector<double> demands,
                          std::vector<double> costs)
        : supplies_(std::move(supplies)),
          demands_(std::move(demands)),
          costs_(std::move(costs)),
          m_(static_cast<int>(supplies_.size())),
          n_(static_cast<int>(demands_.size())) {}

    std::size_t solve() {
        northwest_corner_start();
        const std::size_t max_pivots = 2000 + 20 * static_cast<std::size_t>(m_) * n_;
        // Entering threshold; costs in this artifact are O(1)..O(100).
        double cost_scale = 1.0;
        for (double c : costs_) cost_scale = std::max(cost_scale, std::abs(c));
        const double eps = 1e-13 * cost_scale;

        std::size_t pivots = 0;
        int stalled = 0;
        bool use_bland = false;
        while (pivots < max_pivots) {
            compute_duals();
            const int entering = find_entering(eps, use_bland);
            if (entering < 0) break;
            const bool degenerate = pivot(entering);
            ++pivots;
            // A run of degenerate pivots makes no progress; switch to
            // Bland's lowest-index rule until flow moves again.
            if (degenerate) {
                if (++stalled > m_ + n_) use_bland = true;
            } else {
                stalled = 0;
                use_bland = false;
            }
        }
        if (pivots >= max_pivots)
            throw InvariantError("transportation simplex failed to terminate");
        return pivots;
    }

    const std::vector<BasisCell>& basis() const { return basis_; }

private:
    double cost(int i, int j) const { return costs_[static_cast<std::size_t>(i) * n_ + j]; }

    void northwest_corner_start() {
        in_basis_.assign(static_cast<std::size_t>(m_) * n_, 0);
        std::vector<double> s = supplies_;
        std::vector<double> d = demands_;
        int i = 0;
        int j = 0;
        for (;;) {
            const double alloc = std::min(s[i], d[j]);
            basis_.push_back(BasisCell{i, j, alloc});
            in_basis_[static_cast<std::size_t>(i) * n_ + j] = 1;
            s[i] -= alloc;
            d[j] -= alloc;
            if (i == m_ - 1 && j == n_ - 1) break;
            if (i == m_ - 1)
                ++j;
            else if (j == n_ - 1)
                ++i;
            else if (s[i] <= 0.0)
                ++i;
            else
                ++j;
        }
    }

    // Solves u_i + v_j = c_ij over the basis tree with u_0 = 0.
    void compute_duals() {
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        std::vector<char> u_known(m_, 0);
        std::vector<char> v_known(n_, 0);
        row_cells_.assign(m_, {});
        col_cells_.assign(n_, {});
        for (std::size_t k = 0; k < basis_.size(); ++k) {
            row_cells_[basis_[k].row].push_back(static_cast<int>(k));
            col_cells_[basis_[k].col].push_back(static_cast<int>(k));
        }
        u_known[0] = 1;
        // Worklist of nodes whose dual just became known; rows are
        // 0..m-1, cols are m..m+n-1.
        std::vector<int> work{0};
        while (!work.empty()) {
            const int node = work.back();
            work.pop_back();
            if (node < m_) {
                for (int k : row_cells_[node]) {
                    const int col = basis_[k].col;
                    if (!v_known[col]) {
                        v_[col] = cost(node, col) - u_[node];
                        v_known[col] = 1;
                        work.push_back(m_ + col);
                    }
                }
            } else {
                const int col = node - m_;
                for (int k : col_cells_[col]) {
                    const int row = basis_[k].row;
                    if (!u_known[row]) {
                        u_[row] = cost(row, col) - v_[col];
                        u_known[row] = 1;
                        work.push_back(row);
                    }
                }
            }
        }
        for (int i = 0; i < m_; ++i)
            if (!u_known[i]) throw InvariantError("transportation basis is not a spanning tree");
        for (int j = 0; j < n_; ++j)
            if (!v_known[j]) throw InvariantError("transportation basis is not a spanning tree");
    }

    // Returns the row-major index of the entering cell, or -1 at optimality.
    int find_entering(double eps, bool use_bland) const {
        int best = -1;
        double best_rc = -eps;
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n_; ++j) {
                if (in_basis_[static_cast<std::size_t>(i) * n_ + j]) continue;
                const double rc = cost(i, j) - u_[i] - v_[j];
                if (rc < -eps) {
                    if (use_bland) return i * n_ + j;
                    if (rc < best_rc) {
                        best_rc = rc;
                        best = i * n_ + j;
                    }
                }
            }
        }
        return best;
    }

    // Pivots the entering cell into the basis. Returns true when the pivot
    // was degenerate (moved zero flow).
    bool pivot(int entering) {
        const int ei = entering / n_;
        const int ej = entering % n_;

        // Unique tree path from row node ei to col node ej; the cycle is
        // that path plus the entering cell. BFS with parent basis-cell ids.
        std::vector<int> parent_cell(static_cast<std::size_t>(m_) + n_, -1);
        std::vector<char> visited(static_cast<std::size_t>(m_) + n_, 0);
        std::vector<int> queue{ei};
        visited[ei] = 1;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const int node = queue[head];
            const bool is_row = node < m_;
            const auto& cells = is_row ? row_cells_[node] : col_cells_[node - m_];
            for (int k : cells) {
                const int other = is_row ? m_ + basis_[k].col : basis_[k].row;
                if (visited[other]) continue;
                visited[other] = 1;
                parent_cell[other] = k;
                queue.push_back(other);
            }
        }
        if (!visited[m_ + ej]) throw InvariantError("transportation basis lost connectivity");

        // Walk back from ej to ei collecting the path cells; alternate
        // signs starting with - for the cell adjacent to the entering one.
        std::vector<int> minus_cells;
        std::vector<int> plus_cells;
        int node = m_ + ej;
        bool minus = true;
        while (node != ei) {
            const int k = parent_cell[node];
            (minus ? minus_cells : plus_cells).push_back(k);
            const BasisCell& cell = basis_[k];
            node = (node < m_) ? m_ + cell.col : cell.row;
            minus = !minus;
        }

        // Leaving cell: minimum flow among minus cells, ties to the lowest
        // row-major index.
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (int k : minus_cells) {
            const double f = basis_[k].flow;
            const int rm_index = basis_[k].row * n_ + basis_[k].col;
            if (f < theta ||
                (f == theta && leaving >= 0 &&
                 rm_index < basis_[leaving].row * n_ + basis_[leaving].col)) {
                theta = f;
                leaving = k;
            }
        }
        if (leaving < 0) throw InvariantError("transportation pivot found no leaving cell");

        for (int k : minus_cells) basis_[k].flow -= theta;
        for (int k : plus_cells) basis_[k].flow += theta;
        const BasisCell& old = basis_[leaving];
        in_basis_[static_cast<std::size_t>(old.row) * n_ + old.col] = 0;
        in_basis_[static_cast<std::size_t>(ei) * n_ + ej] = 1;
        basis_[leaving] = BasisCell{ei, ej, theta};
        return theta <= 0.0;
    }

    std::vector<double> supplies_;
    std::vector<double> demands_;
    std::vector<double> costs_;
    int m_ = 0;
    int n_ = 0;
    std::vector<BasisCell> basis_;
    std::vector<char> in_basis_;
    std::vector<double> u_;
    std::vector<double> v_;
    std::vector<std::vector<int>> row_cells_;
    std::vector<std::vector<int>> col_cells_;
};

} // namespace

GroundDistanceMatrix ground_distances(const ColorPalette& palette) {
    GroundDistanceMatrix gd;
    gd.n = palette.size();
    gd.d.assign(gd.n * gd.n, 0.0);
    for (std::size_t i = 0; i < gd.n; ++i) {
        for (std::size_t j = i + 1; j < gd.n; ++j) {
            const Rgb& a = palette.colors[i];
            const Rgb& b = palette.colors[j];
            const double dr = a.r - b.r;
            const double dg = a.g - b.g;
            const double db = a.b - b.b;
            const double dist = std::sqrt(dr * dr + dg * dg + db * db);
            gd.d[i * gd.n + j] = dist;
            gd.d[j * gd.n + i] = dist;
        }
    }
    return gd;
}

TransportSolution solve_transportation(const std::vector<double>& supplies,
                                       const std::vector<double>& demands,
                                       const std::vector<double>& costs) {
    const std::size_t m = supplies.size();
    const std::size_t n = demands.size();
    if (m == 0 || n == 0) throw DataError("transportation: empty supplies or demands");
    if (costs.size() != m * n) throw DataError("transportation: cost matrix has wrong shape");
    double supply_total = 0.0;
    double demand_total = 0.0;
    for (double s : supplies) {
        if (s < 0.0 || !std::isfinite(s)) throw DataError("transportation: invalid supply");
        supply_total += s;
    }
    for (double d : demands) {
        if (d < 0.0 || !std::isfinite(d)) throw DataError("transportation: invalid demand");
        demand_total += d;
    }
    for (double c : costs)
        if (c < 0.0 || !std::isfinite(c)) throw DataError("transportation: invalid cost");
    if (supply_total <= 0.0) throw DataError("transportation: all supplies are zero");
    if (demand_total <= 0.0) throw DataError("transportation: all demands are zero");

    // Zero rows/columns are dropped here and reinserted as zero flows.
    std::vector<int> row_map;
    std::vector<int> col_map;
    for (std::size_t i = 0; i < m; ++i)
        if (supplies[i] > 0.0) row_map.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < n; ++j)
        if (demands[j] > 0.0) col_map.push_back(static_cast<int>(j));

    std::vector<double> s_red;
    std::vector<double> d_red;
    s_red.reserve(row_map.size() + 1);
    d_red.reserve(col_map.size() + 1);
    for (int i : row_map) s_red.push_back(supplies[i]);
    for (int j : col_map) d_red.push_back(demands[j]);

    // Balance with a zero-cost dummy on the short side.
    const double diff = supply_total - demand_total;
    const bool dummy_col = diff > 0.0;
    const bool dummy_row = diff < 0.0;
    const std::size_t mr = s_red.size() + (dummy_row ? 1 : 0);
    const std::size_t nr = d_red.size() + (dummy_col ? 1 : 0);
    if (dummy_col) d_red.push_back(diff);
    if (dummy_row) s_red.push_back(-diff);

    std::vector<double> c_red(mr * nr, 0.0);
    for (std::size_t i = 0; i < row_map.size(); ++i)
        for (std::size_t j = 0; j < col_map.size(); ++j)
            c_red[i * nr + j] = costs[static_cast<std::size_t>(row_map[i]) * n + col_map[j]];

    TransportationSimplex simplex(std::move(s_red), std::move(d_red), std::move(c_red));
    const std::size_t pivots = simplex.solve();

    TransportSolution result;
    result.flow.rows = m;
    result.flow.cols = n;
    result.flow.f.assign(m * n, 0.0);
    result.pivots = pivots;
    for (const BasisCell& cell : simplex.basis()) {
        if (dummy_row && cell.row == static_cast<int>(mr - 1)) continue;
        if (dummy_col && cell.col == static_cast<int>(nr - 1)) continue;
        const int i = row_map[cell.row];
        const int j = col_map[cell.col];
        const double f = std::max(cell.flow, 0.0);
        result.flow.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = f;
        result.total_cost += f * costs[static_cast<std::size_t>(i) * n + j];
    }
    return result;
}

double emd_between_weights(const WeightVector& supply_side, const WeightVector& demand_side,
                           const GroundDistanceMatrix& ground) {
    if (supply_side.weights.size() != ground.n || demand_side.weights.size() != ground.n)
        throw DataError("emd: weight vector size does not match ground distance matrix");
    const double total_a = supply_side.total();
    const double total_b = demand_side.total();
    if (total_a <= 0.0 || total_b <= 0.0)
        throw DataError("emd: zero total weight");
    g_emd_evaluations.fetch_add(1, std::memory_order_relaxed);
    const TransportSolution sol =
        solve_transportation(supply_side.weights, demand_side.weights, ground.d);
    const double w_min = std::min(total_a, total_b);
    return sol.total_cost / w_min;
}

double emd_distance(const ImageSignature& a, const ImageSignature& b,
                    const ColorPalette& palette) {
    if (a.palette_size() != b.palette_size() || a.block_width() != b.block_width())
        throw DataError("emd_distance: signatures built with different palette or block width");
    if (a.palette_size() != palette.size())
        throw DataError("emd_distance: palette does not match signature palette size");
    const GroundDistanceMatrix gd = ground_distances(palette);
    return emd_between_weights(signature_weights(a), signature_weights(b), gd);
}

std::uint64_t emd_evaluation_count() { return g_emd_evaluations.load(std::memory_order_relaxed); }

void reset_emd_evaluation_count() { g_emd_evaluations.store(0, std::memory_order_relaxed); }

} // namespace rbir
