#ifndef MSVQ_FUSION_HPP
#define MSVQ_FUSION_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msvq/error.hpp"

namespace msvq {

// Rules for merging S per-section distortions into one match score.
enum class FusionStrategy { min, max, sum, product, sev, wsd, wshm, wslm, wsre, wsse, wsue, wsut };

inline constexpr FusionStrategy all_fusion_strategies[] = {
    FusionStrategy::min,  FusionStrategy::max,  FusionStrategy::sum,  FusionStrategy::product,
    FusionStrategy::sev,  FusionStrategy::wsd,  FusionStrategy::wshm, FusionStrategy::wslm,
    FusionStrategy::wsre, FusionStrategy::wsse, FusionStrategy::wsue, FusionStrategy::wsut};

inline bool is_weighted(FusionStrategy s) noexcept {
    switch (s) {
    case FusionStrategy::wsd:
    case FusionStrategy::wshm:
    case FusionStrategy::wslm:
    case FusionStrategy::wsre:
    case FusionStrategy::wsse:
    case FusionStrategy::wsue:
    case FusionStrategy::wsut: return true;
    default: return false;
    }
}

// Weights that differ per enrolled user and therefore live in the model file.
inline bool is_user_dependent(FusionStrategy s) noexcept {
    return s == FusionStrategy::wsd || s == FusionStrategy::wshm || s == FusionStrategy::wslm ||
           s == FusionStrategy::wsue || s == FusionStrategy::wsut;
}

inline std::string_view to_string(FusionStrategy s) {
    switch (s) {
    case FusionStrategy::min: return "min";
    case FusionStrategy::max: return "max";
    case FusionStrategy::sum: return "sum";
    case FusionStrategy::product: return "product";
    case FusionStrategy::sev: return "sev";
    case FusionStrategy::wsd: return "wsd";
    case FusionStrategy::wshm: return "wshm";
    case FusionStrategy::wslm: return "wslm";
    case FusionStrategy::wsre: return "wsre";
    case FusionStrategy::wsse: return "wsse";
    case FusionStrategy::wsue: return "wsue";
    case FusionStrategy::wsut: return "wsut";
    }
    return "sum";
}

inline FusionStrategy parse_fusion_strategy(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (FusionStrategy f : all_fusion_strategies)
        if (to_string(f) == lower) return f;
    throw InvalidConfig("unknown fusion strategy '" + std::string(s) + "'");
}

inline constexpr double weight_sum_tolerance = 1e-9;

// Floor inside the log of the product rule; zero distortions are reachable.
inline constexpr double product_log_floor = 1e-12;

struct FusionSpec {
    FusionStrategy strategy = FusionStrategy::sum;
    // Required for weighted strategies unless the model carries its own weights.
    std::vector<double> weights;

    // Checks the weight vector against S sections.
    void validate(std::size_t sections) const {
        if (!is_weighted(strategy)) return;
        if (weights.size() != sections)
            throw InvalidConfig("fusion " + std::string(to_string(strategy)) + " needs " + std::to_string(sections) +
                                " weights, got " + std::to_string(weights.size()));
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidConfig("fusion weights must be finite and non-negative");
            total += w;
        }
        if (std::abs(total - 1.0) > weight_sum_tolerance) throw InvalidConfig("fusion weights must sum to 1");
    }
};

inline double combine(std::span<const double> d, const FusionSpec& spec) {
    if (d.empty()) throw InvalidInput("no section distortions to combine");
    for (double v : d)
        if (!(v >= 0.0)) throw InvalidInput("section distortions must be non-negative");
    if (is_weighted(spec.strategy)) spec.validate(d.size());

    switch (spec.strategy) {
    case FusionStrategy::min: return *std::min_element(d.begin(), d.end());
    case FusionStrategy::max: return *std::max_element(d.begin(), d.end());
    case FusionStrategy::sum: {
        double s = 0.0;
        for (double v : d) s += v;
        return s;
    }
    case FusionStrategy::product: {
        double s = 0.0;
        for (double v : d) s += std::log(v + product_log_floor);
        return s;
    }
    case FusionStrategy::sev:
        // A single section is both extremes; it is counted once.
        if (d.size() == 1) return d.front();
        return *std::min_element(d.begin(), d.end()) + *std::max_element(d.begin(), d.end());
    default: {
        double s = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) s += spec.weights[i] * d[i];
        return s;
    }
    }
}

// Per-section mean and population deviation of the training-signature distortions.
struct SectionStats {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::size_t samples = 0;

    friend bool operator==(const SectionStats&, const SectionStats&) = default;
};

// distances[j][i]: section i of training signature j.
inline SectionStats stats_from_distances(const std::vector<std::vector<double>>& distances) {
    if (distances.empty()) throw InvalidInput("section statistics need at least one training signature");
    const std::size_t sections = distances.front().size();
    SectionStats st;
    st.samples = distances.size();
    st.mu.assign(sections, 0.0);
    st.sigma.assign(sections, 0.0);
    for (const auto& row : distances) {
        if (row.size() != sections) throw InvalidInput("ragged section distance table");
        for (std::size_t i = 0; i < sections; ++i) st.mu[i] += row[i];
    }
    const double t = static_cast<double>(st.samples);
    for (double& m : st.mu) m /= t;
    for (const auto& row : distances)
        for (std::size_t i = 0; i < sections; ++i) st.sigma[i] += (row[i] - st.mu[i]) * (row[i] - st.mu[i]);
    for (double& s : st.sigma) s = std::sqrt(s / t);
    return st;
}

namespace detail {

// c_i = (1/v_i) / sum_k (1/v_k). Zero entries take the whole mass, split evenly.
inline std::vector<double> inverse_proportional(std::span<const double> v) {
    std::vector<double> w(v.size(), 0.0);
    const auto zeros = static_cast<std::size_t>(std::count(v.begin(), v.end(), 0.0));
    if (zeros > 0) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] == 0.0) w[i] = 1.0 / static_cast<double>(zeros);
        return w;
    }
    double total = 0.0;
    for (double e : v) total += 1.0 / e;
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = (1.0 / v[i]) / total;
    return w;
}

// c_i = v_i / sum_k v_k; uniform when every entry is zero.
inline std::vector<double> proportional(std::span<const double> v) {
    double total = 0.0;
    for (double e : v) total += e;
    std::vector<double> w(v.size(), 1.0 / static_cast<double>(v.size()));
    if (total == 0.0) return w;
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] / total;
    return w;
}

} // namespace detail

// Section weights for a weighted strategy. `inputs` is sigma (wsd), mu (wshm, wslm),
// per-section EER (wsre, wsse, wsue) or per-section EER threshold (wsut).
// When `sections` is given the input length must match it.
inline std::vector<double> compute_weights(FusionStrategy strategy, std::span<const double> inputs,
                                           std::optional<std::size_t> sections = std::nullopt) {
    if (!is_weighted(strategy))
        throw InvalidConfig("strategy " + std::string(to_string(strategy)) + " has no weights");
    if (inputs.empty()) throw InvalidConfig("weight estimation needs at least one section");
    if (sections && *sections != inputs.size())
        throw InvalidConfig("weight input length " + std::to_string(inputs.size()) + " does not match " +
                            std::to_string(*sections) + " sections");
    for (double v : inputs)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("weight inputs must be finite and non-negative");
    if (strategy == FusionStrategy::wshm) return detail::proportional(inputs);
    return detail::inverse_proportional(inputs);
}

inline std::vector<double> compute_weights(FusionStrategy strategy, const SectionStats& stats) {
    if (stats.mu.size() != stats.sigma.size()) throw InvalidConfig("section statistics have mismatched lengths");
    switch (strategy) {
    case FusionStrategy::wsd: return compute_weights(strategy, stats.sigma);
    case FusionStrategy::wshm:
    case FusionStrategy::wslm: return compute_weights(strategy, stats.mu);
    default:
        throw InvalidConfig("strategy " + std::string(to_string(strategy)) +
                            " is not estimated from training statistics");
    }
}

} // namespace msvq

#endif
