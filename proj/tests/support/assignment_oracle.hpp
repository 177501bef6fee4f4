// Exhaustive assignment oracle: enumerates every partial matching of the
// matrix and keeps the best under (max size, then min cost, then smallest
// pair sequence). Exponential, only for small matrices in tests.
#pragma once

#include <utility>
#include <vector>

#include "aapa/assignment.hpp"

namespace test_support {

struct ExhaustiveBest {
    std::size_t cardinality = 0;
    double total = 0.0;
    std::vector<std::pair<int, int>> pairs;
    bool initialized = false;
};

inline void exhaustive_step(const aapa::CostMatrix& m, int row, std::vector<char>& used,
                            std::vector<std::pair<int, int>>& chosen, double sum,
                            ExhaustiveBest& best) {
    if (row == m.rows()) {
        bool better;
        if (!best.initialized)
            better = true;
        else if (chosen.size() != best.cardinality)
            better = chosen.size() > best.cardinality;
        else if (sum != best.total)
            better = sum < best.total;
        else
            better = chosen < best.pairs;
        if (better) best = ExhaustiveBest{chosen.size(), sum, chosen, true};
        return;
    }
    exhaustive_step(m, row + 1, used, chosen, sum, best);  // row left unmatched
    for (int j = 0; j < m.cols(); ++j) {
        if (used[j] || !m.allowed(row, j)) continue;
        used[j] = 1;
        chosen.emplace_back(row, j);
        exhaustive_step(m, row + 1, used, chosen, sum + m.at(row, j), best);
        chosen.pop_back();
        used[j] = 0;
    }
}

inline ExhaustiveBest exhaustive_assignment(const aapa::CostMatrix& m) {
    ExhaustiveBest best;
    std::vector<char> used(static_cast<std::size_t>(m.cols()), 0);
    std::vector<std::pair<int, int>> chosen;
    exhaustive_step(m, 0, used, chosen, 0.0, best);
    return best;
}

}  // namespace test_support
