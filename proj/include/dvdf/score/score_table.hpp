#pragma once

#include <vector>

#include "dvdf/env/dataset.hpp"
#include "dvdf/score/scorer.hpp"

namespace dvdf {

/// Per-record scores of one dataset, raw and min-max normalized.
struct ScoreTable {
    std::vector<double> values;
    std::vector<double> normalized;
};

/// Scores every record; records are independent, so the loop runs in parallel.
ScoreTable score_dataset(const TransitionScorer& scorer, const Dataset& data);

namespace kernels {
namespace serial {
void score_records(const TransitionScorer& scorer, const Dataset& data, std::vector<double>& out);
}
namespace parallel {
void score_records(const TransitionScorer& scorer, const Dataset& data, std::vector<double>& out);
}
} // namespace kernels

} // namespace dvdf
