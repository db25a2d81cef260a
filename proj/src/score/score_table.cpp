#include "dvdf/score/score_table.hpp"

#include "dvdf/core/errors.hpp"
#include "dvdf/score/stats.hpp"

namespace dvdf {

namespace kernels {

namespace serial {
void score_records(const TransitionScorer& scorer, const Dataset& data, std::vector<double>& out) {
    out.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& rec = data.records[i];
        out[i] = scorer.score(rec.s, rec.a, rec.s_next);
    }
}
} // namespace serial

namespace parallel {
void score_records(const TransitionScorer& scorer, const Dataset& data, std::vector<double>& out) {
    out.resize(data.size());
    const auto n = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for schedule(static) if (n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& rec = data.records[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = scorer.score(rec.s, rec.a, rec.s_next);
    }
}
} // namespace parallel

} // namespace kernels

ScoreTable score_dataset(const TransitionScorer& scorer, const Dataset& data) {
    if (scorer.n_states() != data.n_states || scorer.n_actions() != data.n_actions)
        throw InvalidInput("score_dataset: scorer does not fit the dataset");
    // range errors must surface here, not inside the parallel region
    for (const auto& rec : data.records)
        if (rec.s >= data.n_states || rec.a >= data.n_actions || rec.s_next >= data.n_states)
            throw InvalidInput("score_dataset: record out of range");
    ScoreTable table;
    kernels::parallel::score_records(scorer, data, table.values);
    table.normalized = minmax_normalize(table.values);
    return table;
}

} // namespace dvdf
