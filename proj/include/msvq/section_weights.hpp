#ifndef MSVQ_SECTION_WEIGHTS_HPP
#define MSVQ_SECTION_WEIGHTS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msvq/error.hpp"
#include "msvq/eval.hpp"
#include "msvq/fusion.hpp"
#include "msvq/vq.hpp"

namespace msvq {

// Per-section distortions of every training signature against its own model,
// summarized as mean and population deviation.
inline SectionStats train_section_stats(const SectionedModel& model, std::span<const FeatureMatrix> train) {
    if (train.empty()) throw InvalidInput("section statistics need at least one training signature");
    std::vector<std::vector<double>> d;
    d.reserve(train.size());
    for (const auto& sig : train) d.push_back(section_scores(sig, model).section_distortions);
    return stats_from_distances(d);
}

// Per-section EER and EER threshold from per-section genuine/impostor scores
// (outer index: section).
struct SectionErrors {
    std::vector<double> eer;
    std::vector<double> threshold;
};

inline SectionErrors section_errors(const std::vector<std::vector<double>>& genuine,
                                    const std::vector<std::vector<double>>& impostor) {
    if (genuine.size() != impostor.size()) throw InvalidConfig("section counts differ between score sides");
    SectionErrors out;
    for (std::size_t s = 0; s < genuine.size(); ++s) {
        const EerResult r = eer(far_frr(genuine[s], impostor[s]));
        out.eer.push_back(r.eer);
        out.threshold.push_back(r.threshold);
    }
    return out;
}

// User-dependent error weights. Targets are the user's own training signatures;
// impostors are other users' training signatures scored against this model.
// wsue weighs by per-section EER, wsut by the per-section EER threshold.
inline std::vector<double> user_error_weights(FusionStrategy strategy, const SectionedModel& model,
                                              std::span<const FeatureMatrix> own_train,
                                              std::span<const FeatureMatrix> impostors) {
    if (strategy != FusionStrategy::wsue && strategy != FusionStrategy::wsut)
        throw InvalidConfig("user error weights are defined for wsue and wsut only");
    if (own_train.empty() || impostors.empty())
        throw InvalidInput("user error weights need target and impostor signatures");
    const std::size_t sections = model.section_count();
    std::vector<std::vector<double>> gen(sections), imp(sections);
    for (const auto& sig : own_train) {
        const auto d = section_scores(sig, model).section_distortions;
        for (std::size_t s = 0; s < sections; ++s) gen[s].push_back(d[s]);
    }
    for (const auto& sig : impostors) {
        const auto d = section_scores(sig, model).section_distortions;
        for (std::size_t s = 0; s < sections; ++s) imp[s].push_back(d[s]);
    }
    const SectionErrors e = section_errors(gen, imp);
    return compute_weights(strategy, strategy == FusionStrategy::wsue ? e.eer : e.threshold, sections);
}

} // namespace msvq

#endif
