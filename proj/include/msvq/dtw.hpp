#ifndef MSVQ_DTW_HPP
#define MSVQ_DTW_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msvq/error.hpp"
#include "msvq/matrix.hpp"
#include "msvq/signal.hpp"

namespace msvq {

enum class TemplateCombiner { min, mean, median };

inline std::string_view to_string(TemplateCombiner c) {
    switch (c) {
    case TemplateCombiner::min: return "min";
    case TemplateCombiner::mean: return "mean";
    case TemplateCombiner::median: return "median";
    }
    return "min";
}

inline TemplateCombiner parse_template_combiner(std::string_view s) {
    if (s == "min") return TemplateCombiner::min;
    if (s == "mean") return TemplateCombiner::mean;
    if (s == "median") return TemplateCombiner::median;
    throw InvalidConfig("unknown template combiner '" + std::string(s) + "'");
}

struct DtwConfig {
    // Endpoint relaxation in samples; unset means max(1, round(0.02 * J)).
    std::optional<std::size_t> epsilon;
    bool use_parallelogram = true;
    TemplateCombiner combiner = TemplateCombiner::min;

    std::size_t epsilon_for(std::size_t reference_length) const {
        if (epsilon) {
            if (*epsilon < 1) throw InvalidConfig("DTW epsilon must be at least 1");
            return *epsilon;
        }
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.02 * static_cast<double>(reference_length))));
    }

    friend bool operator==(const DtwConfig&, const DtwConfig&) = default;
};

struct DtwResult {
    double cost = std::numeric_limits<double>::infinity();
    std::size_t local_distance_evals = 0;
    bool feasible = false;
    std::string diagnostic;
};

namespace detail {

// Slope-1/2..2 parallelogram anchored at the relaxed start cells (row 0 or
// column 0, index < eps) and the relaxed end cells (last row or column,
// within eps of the corner). All indices 0-based.
struct Parallelogram {
    double rows_last, cols_last, eps;

    bool contains(std::size_t i, std::size_t j) const {
        const double di = static_cast<double>(i);
        const double dj = static_cast<double>(j);
        const double ri = rows_last - di;
        const double rj = cols_last - dj;
        return dj <= 2.0 * di + (eps - 1.0) && 2.0 * dj >= di - (eps - 1.0) && rj <= 2.0 * ri + eps &&
               2.0 * rj >= ri - eps;
    }
};

} // namespace detail

// Asymmetric DTW: every step advances one row of `a`, moving 0, 1 or 2 columns
// of `b` (predecessors (i-1,j), (i-1,j-1), (i-1,j-2)). Paths may start in the
// first eps cells of row 0 or column 0 and end within eps of the far corner
// along the last row or column. The cost is the accumulated Euclidean distance
// divided by the length of `a`. Only two rows of accumulated cost are kept.
inline DtwResult dtw_align(RowBlock a, RowBlock b, const DtwConfig& cfg) {
    if (a.empty() || b.empty()) throw InvalidInput("DTW needs two non-empty sequences");
    if (a.cols() != b.cols())
        throw InvalidInput("DTW dimension mismatch: " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
    const std::size_t rows = a.rows();
    const std::size_t cols = b.rows();
    const std::size_t eps = cfg.epsilon_for(cols);
    constexpr double inf = std::numeric_limits<double>::infinity();

    const detail::Parallelogram region{static_cast<double>(rows - 1), static_cast<double>(cols - 1),
                                       static_cast<double>(eps)};
    auto inside = [&](std::size_t i, std::size_t j) { return !cfg.use_parallelogram || region.contains(i, j); };

    DtwResult res;
    std::vector<double> prev(cols, inf), cur(cols, inf);
    const std::size_t end_col_from = cols - 1 >= eps ? cols - 1 - eps : 0;
    const std::size_t end_row_from = rows - 1 >= eps ? rows - 1 - eps : 0;
    double best = inf;

    for (std::size_t i = 0; i < rows; ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < cols; ++j) {
            if (!inside(i, j)) {
                cur[j] = inf;
                continue;
            }
            const bool start = (i == 0 && j < eps) || (j == 0 && i < eps);
            double from = start ? 0.0 : inf;
            if (i > 0) {
                from = std::min(from, prev[j]);
                if (j >= 1) from = std::min(from, prev[j - 1]);
                if (j >= 2) from = std::min(from, prev[j - 2]);
            }
            if (from == inf) {
                cur[j] = inf;
                continue;
            }
            ++res.local_distance_evals;
            cur[j] = from + euclidean(ai, b.row(j));
        }
        if (i == rows - 1)
            for (std::size_t j = end_col_from; j < cols; ++j) best = std::min(best, cur[j]);
        if (i >= end_row_from) best = std::min(best, cur[cols - 1]);
        std::swap(prev, cur);
    }

    if (best == inf) {
        res.diagnostic = "no feasible warping path for lengths " + std::to_string(rows) + " and " +
                         std::to_string(cols) + " (epsilon " + std::to_string(eps) + ")";
        return res;
    }
    res.feasible = true;
    res.cost = best / static_cast<double>(rows);
    return res;
}

inline double dtw_distance(RowBlock a, RowBlock b, const DtwConfig& cfg) { return dtw_align(a, b, cfg).cost; }

inline double combine_templates(std::vector<double> d, TemplateCombiner c) {
    if (d.empty()) throw InvalidInput("no template distances to combine");
    switch (c) {
    case TemplateCombiner::min: return *std::min_element(d.begin(), d.end());
    case TemplateCombiner::mean: {
        double s = 0.0;
        for (double v : d) s += v;
        return s / static_cast<double>(d.size());
    }
    case TemplateCombiner::median: {
        std::sort(d.begin(), d.end());
        const std::size_t n = d.size();
        return n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
    }
    }
    return d.front();
}

// Test against K reference templates, combined per cfg.combiner.
inline double multi_template_score(RowBlock test, std::span<const FeatureMatrix> refs, const DtwConfig& cfg,
                                   std::size_t* distance_evals = nullptr) {
    if (refs.empty()) throw InvalidInput("DTW scoring needs at least one reference template");
    std::vector<double> d;
    d.reserve(refs.size());
    for (const auto& r : refs) {
        const DtwResult res = dtw_align(test, r, cfg);
        if (distance_evals) *distance_evals += res.local_distance_evals;
        d.push_back(res.cost);
    }
    return combine_templates(std::move(d), cfg.combiner);
}

} // namespace msvq

#endif
