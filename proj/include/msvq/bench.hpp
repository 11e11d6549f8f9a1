#ifndef MSVQ_BENCH_HPP
#define MSVQ_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "msvq/dtw.hpp"
#include "msvq/eval.hpp"
#include "msvq/signal.hpp"
#include "msvq/synthetic.hpp"
#include "msvq/vq.hpp"

namespace msvq {

struct BenchConfig {
    std::size_t K = 5;
    std::size_t J = 454;
    // Test length; 0 means I = J.
    std::size_t I = 0;
    std::size_t L = 16;
    std::size_t S = 1;
    std::uint64_t seed = 2011;
    FeatureSetId feature_set = FeatureSetId::FS6;
    DtwConfig dtw;

    std::size_t test_length() const { return I ? I : J; }
};

struct BenchReport {
    BenchmarkCounts analytic;
    std::size_t measured_dtw_evals = 0;
    std::size_t measured_vq_evals = 0;
    std::size_t stored_vectors = 0;

    double dtw_ratio() const { return static_cast<double>(measured_dtw_evals) / analytic.dtw_distance_evals; }
    double vq_ratio() const { return static_cast<double>(measured_vq_evals) / analytic.vq_distance_evals; }
    double measured_speedup() const {
        return static_cast<double>(measured_dtw_evals) / static_cast<double>(measured_vq_evals);
    }
};

namespace detail {

// Synthetic genuine signatures of exactly `length` samples from one writer.
inline std::vector<FeatureMatrix> bench_signatures(std::size_t count, std::size_t length, std::uint64_t seed,
                                                   FeatureSetId fs) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.n_users = 1;
    spec.genuine_per_user = count;
    spec.skilled_per_user = 0;
    spec.min_length = length;
    spec.max_length = length;
    spec.genuine_jitter = 0.0;
    const auto corpus = generate_synthetic_corpus(spec);
    std::vector<FeatureMatrix> out;
    for (const auto& s : corpus.users.front().genuine) out.push_back(preprocess(s, fs));
    return out;
}

} // namespace detail

// Analytic DTW/VQ cost model plus instrumented counts on synthetic data of the
// same dimensions: K references of length J, one test of length I.
inline BenchReport run_benchmark(const BenchConfig& cfg) {
    BenchReport rep;
    const std::size_t test_len = cfg.test_length();
    rep.analytic = benchmark_counts(static_cast<double>(cfg.K), static_cast<double>(test_len),
                                    static_cast<double>(cfg.J), static_cast<double>(cfg.L), static_cast<double>(cfg.S));

    auto refs = detail::bench_signatures(cfg.K + 1, cfg.J, cfg.seed, cfg.feature_set);
    FeatureMatrix test = refs.back();
    refs.pop_back();
    if (test_len != cfg.J) test = detail::bench_signatures(1, test_len, cfg.seed + 1, cfg.feature_set).front();

    multi_template_score(test, refs, cfg.dtw, &rep.measured_dtw_evals);

    ModelConfig mc;
    mc.sections = cfg.S;
    mc.codebook_size = cfg.L;
    mc.feature_set = cfg.feature_set;
    const SectionedModel model = train_user_model("bench", refs, mc);
    rep.stored_vectors = model.stored_vectors();
    DistanceCounter counter;
    section_scores(test, model, &counter);
    rep.measured_vq_evals = counter.evaluations;
    return rep;
}

inline nlohmann::ordered_json bench_to_json(const BenchConfig& cfg, const BenchReport& r) {
    nlohmann::ordered_json j;
    j["config"] = {{"K", cfg.K},
                   {"J", cfg.J},
                   {"I", cfg.test_length()},
                   {"L", cfg.L},
                   {"S", cfg.S},
                   {"seed", cfg.seed},
                   {"feature_set", to_string(cfg.feature_set)},
                   {"dtw_epsilon", cfg.dtw.epsilon_for(cfg.J)},
                   {"dtw_parallelogram", cfg.dtw.use_parallelogram}};
    j["analytic"] = {{"dtw_distance_evals", r.analytic.dtw_distance_evals},
                     {"vq_distance_evals", r.analytic.vq_distance_evals},
                     {"speedup_ratio", r.analytic.speedup_ratio},
                     {"storage_dtw", r.analytic.storage_dtw},
                     {"storage_vq", r.analytic.storage_vq},
                     {"storage_msvq", r.analytic.storage_msvq},
                     {"data_reduction", r.analytic.data_reduction}};
    j["measured"] = {{"dtw_distance_evals", r.measured_dtw_evals},
                     {"vq_distance_evals", r.measured_vq_evals},
                     {"dtw_measured_over_analytic", r.dtw_ratio()},
                     {"vq_measured_over_analytic", r.vq_ratio()},
                     {"speedup_ratio", r.measured_speedup()},
                     {"stored_vectors", r.stored_vectors}};
    return j;
}

} // namespace msvq

#endif
