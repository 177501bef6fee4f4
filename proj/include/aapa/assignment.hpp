// Detection-to-anchor assignment: weighted pairwise costs with a hard cap,
// and a Munkres-style optimal matcher over rectangular matrices with
// forbidden entries.
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aapa/geometry.hpp"

namespace aapa {

/// Matching parameters. `tau` caps the pairwise cost: any pair at or above it
/// is excluded from matching outright. The class penalty defaults to tau so a
/// class mismatch alone is disqualifying.
struct AlignmentConfig {
    double tau;
    double position_weight = 1.0;
    double size_weight = 1.0;
    double class_mismatch_penalty;

    explicit AlignmentConfig(double tau_value)
        : tau(tau_value), class_mismatch_penalty(tau_value) {
        if (!(tau_value > 0.0)) throw std::invalid_argument("tau must be positive");
    }
};

/// Squared center distance plus squared size difference plus the class
/// mismatch penalty.
inline double pairwise_cost(const ObjectClass& anchor_class, const BoundingBox& anchor_box,
                            const Detection& det, const AlignmentConfig& cfg) {
    const Vec2 d = anchor_box.center() - det.box.center();
    double cost = cfg.position_weight * (d.x * d.x + d.y * d.y) +
                  cfg.size_weight * ((anchor_box.w - det.box.w) * (anchor_box.w - det.box.w) +
                                     (anchor_box.h - det.box.h) * (anchor_box.h - det.box.h));
    if (anchor_class != det.object_class) cost += cfg.class_mismatch_penalty;
    return cost;
}

/// Dense rows x cols cost matrix; entries at infinity are forbidden and can
/// never be matched.
class CostMatrix {
  public:
    static constexpr double forbidden = std::numeric_limits<double>::infinity();

    CostMatrix(int rows, int cols)
        : rows_(rows), cols_(cols),
          cells_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), forbidden) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
    }

    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }

    [[nodiscard]] double at(int i, int j) const {
        return cells_[static_cast<std::size_t>(i) * cols_ + j];
    }
    void set(int i, int j, double value) {
        cells_[static_cast<std::size_t>(i) * cols_ + j] = value;
    }
    [[nodiscard]] bool allowed(int i, int j) const { return at(i, j) != forbidden; }

  private:
    int rows_;
    int cols_;
    std::vector<double> cells_;
};

/// One row per anchor, one column per detection; any pairwise cost >= tau
/// becomes forbidden (the boundary itself is out of reach).
struct TrackedBox {
    ObjectClass object_class;
    BoundingBox box;
};

inline CostMatrix build_cost_matrix(const std::vector<TrackedBox>& anchors,
                                    const std::vector<Detection>& detections,
                                    const AlignmentConfig& cfg) {
    if (!(cfg.tau > 0.0)) throw std::invalid_argument("tau must be positive");
    CostMatrix m(static_cast<int>(anchors.size()), static_cast<int>(detections.size()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            const double cost =
                pairwise_cost(anchors[i].object_class, anchors[i].box, detections[j], cfg);
            if (cost < cfg.tau) m.set(i, j, cost);
        }
    return m;
}

/// Matched (row, column) pairs in ascending row order, plus their cost sum.
struct AssignmentSolution {
    std::vector<std::pair<int, int>> pairs;
    double total = 0.0;
};

namespace detail {

// Square-matrix shortest-augmenting-path core with row/column potentials.
// Returns the matched column of each row.
inline std::vector<int> solve_square(const std::vector<double>& a, int n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_to(n + 1, inf);
    std::vector<int> row_of(n + 1, 0), prev_col(n + 1, 0);
    std::vector<char> used(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        row_of[0] = i;
        int j0 = 0;
        std::fill(min_to.begin(), min_to.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = row_of[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double reduced = a[(i0 - 1) * static_cast<std::size_t>(n) + (j - 1)] -
                                       u[i0] - v[j];
                if (reduced < min_to[j]) {
                    min_to[j] = reduced;
                    prev_col[j] = j0;
                }
                if (min_to[j] < delta) {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of[j0] != 0);
        do {
            const int j1 = prev_col[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= n; ++j)
        if (row_of[j] >= 1) col_of_row[row_of[j] - 1] = j - 1;
    return col_of_row;
}

// Sums matched real entries in the given (row-ascending) pair order so every
// caller accumulates in the same sequence.
inline double pairs_total(const CostMatrix& m, const std::vector<std::pair<int, int>>& pairs) {
    double total = 0.0;
    for (const auto& [i, j] : pairs) total += m.at(i, j);
    return total;
}

// Solves the rectangular problem by padding to a square and pricing padding
// and forbidden cells just above any achievable real total, which makes the
// optimum match as many real pairs as possible and only then minimize cost.
inline std::vector<std::pair<int, int>> solve_max_real(const CostMatrix& m) {
    const int rows = m.rows(), cols = m.cols();
    if (rows == 0 || cols == 0) return {};
    const int n = std::max(rows, cols);
    double max_finite = 0.0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (m.allowed(i, j)) max_finite = std::max(max_finite, m.at(i, j));
    const double big = (max_finite + 1.0) * (n + 1);
    std::vector<double> square(static_cast<std::size_t>(n) * n, big);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (m.allowed(i, j)) square[i * static_cast<std::size_t>(n) + j] = m.at(i, j);
    const std::vector<int> col_of_row = solve_square(square, n);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < rows; ++i) {
        const int j = col_of_row[i];
        if (j >= 0 && j < cols && m.allowed(i, j)) pairs.emplace_back(i, j);
    }
    return pairs;
}

// Cost matrix restricted to rows > pivot_row and to unused columns.
inline CostMatrix submatrix_after(const CostMatrix& m, int pivot_row,
                                  const std::vector<char>& col_used,
                                  std::vector<int>& col_index_map) {
    col_index_map.clear();
    for (int j = 0; j < m.cols(); ++j)
        if (!col_used[j]) col_index_map.push_back(j);
    CostMatrix sub(m.rows() - pivot_row - 1, static_cast<int>(col_index_map.size()));
    for (int i = pivot_row + 1; i < m.rows(); ++i)
        for (int jj = 0; jj < sub.cols(); ++jj)
            sub.set(i - pivot_row - 1, jj, m.at(i, col_index_map[jj]));
    return sub;
}

}  // namespace detail

/// Minimum-cost matching among all matchings of maximum achievable size,
/// given the forbidden entries. Ties between equal-cost optima resolve to the
/// lexicographically smallest (row, column) pair sequence, which keeps runs
/// reproducible no matter how the optimum is reached internally.
inline AssignmentSolution solve_assignment(const CostMatrix& m) {
    std::vector<std::pair<int, int>> incumbent = detail::solve_max_real(m);
    const std::size_t cardinality = incumbent.size();
    const double best_total = detail::pairs_total(m, incumbent);

    // Row by row, adopt the smallest column that still completes to an
    // optimal matching; the incumbent supplies the completion when no smaller
    // column works.
    std::vector<std::pair<int, int>> decided;
    std::vector<char> col_used(static_cast<std::size_t>(m.cols()), 0);
    std::vector<int> incumbent_col(static_cast<std::size_t>(m.rows()), -1);
    for (const auto& [i, j] : incumbent) incumbent_col[i] = j;

    for (int i = 0; i < m.rows(); ++i) {
        const int bound = incumbent_col[i];
        for (int j = 0; j < m.cols(); ++j) {
            if (bound >= 0 && j >= bound) break;
            if (col_used[j] || !m.allowed(i, j)) continue;
            std::vector<char> col_used_next = col_used;
            col_used_next[j] = 1;
            std::vector<int> col_map;
            const CostMatrix sub = detail::submatrix_after(m, i, col_used_next, col_map);
            const auto completion = detail::solve_max_real(sub);
            if (decided.size() + 1 + completion.size() != cardinality) continue;
            std::vector<std::pair<int, int>> candidate = decided;
            candidate.emplace_back(i, j);
            for (const auto& [si, sj] : completion)
                candidate.emplace_back(si + i + 1, col_map[sj]);
            if (detail::pairs_total(m, candidate) != best_total) continue;
            // Feasible and smaller: adopt the whole completion as the new
            // incumbent for the remaining rows.
            std::fill(incumbent_col.begin() + i, incumbent_col.end(), -1);
            incumbent_col[i] = j;
            for (const auto& [si, sj] : completion) incumbent_col[si + i + 1] = col_map[sj];
            break;
        }
        if (incumbent_col[i] >= 0) {
            decided.emplace_back(i, incumbent_col[i]);
            col_used[incumbent_col[i]] = 1;
        }
    }
    return {decided, detail::pairs_total(m, decided)};
}

/// Outcome of one alignment round, all indices into the call's inputs.
struct AlignmentResult {
    std::vector<std::pair<std::size_t, std::size_t>> matched;  // (anchor, detection)
    std::vector<std::size_t> lost_anchors;
    std::vector<std::size_t> unmatched_detections;
    double total_cost = 0.0;
};

/// Cost-capped optimal assignment of detections to tracked boxes.
inline AlignmentResult align(const std::vector<TrackedBox>& anchors,
                             const std::vector<Detection>& detections,
                             const AlignmentConfig& cfg) {
    const CostMatrix m = build_cost_matrix(anchors, detections, cfg);
    const AssignmentSolution sol = solve_assignment(m);
    AlignmentResult result;
    result.total_cost = sol.total;
    std::vector<char> anchor_matched(anchors.size(), 0), det_matched(detections.size(), 0);
    for (const auto& [i, j] : sol.pairs) {
        result.matched.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        anchor_matched[static_cast<std::size_t>(i)] = 1;
        det_matched[static_cast<std::size_t>(j)] = 1;
    }
    for (std::size_t i = 0; i < anchors.size(); ++i)
        if (!anchor_matched[i]) result.lost_anchors.push_back(i);
    for (std::size_t j = 0; j < detections.size(); ++j)
        if (!det_matched[j]) result.unmatched_detections.push_back(j);
    return result;
}

}  // namespace aapa
