#ifndef MSVQ_VQ_HPP
#define MSVQ_VQ_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msvq/error.hpp"
#include "msvq/fusion.hpp"
#include "msvq/matrix.hpp"
#include "msvq/signal.hpp"

namespace msvq {

struct Codebook {
    Matrix centroids;

    std::size_t size() const noexcept { return centroids.rows(); }
    std::size_t dim() const noexcept { return centroids.cols(); }

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct ModelConfig {
    std::size_t sections = 1;
    std::size_t codebook_size = 128;
    FeatureSetId feature_set = FeatureSetId::FS6;
    std::size_t lloyd_max_iters = 50;
    double lloyd_rel_tol = 1e-4;

    void validate() const {
        if (sections < 1) throw InvalidConfig("section count must be at least 1");
        if (codebook_size < 1) throw InvalidConfig("codebook size must be at least 1");
        if (!(lloyd_rel_tol >= 0.0)) throw InvalidConfig("Lloyd tolerance must be non-negative");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// One user's enrolled template: one codebook per temporal section.
struct SectionedModel {
    std::string user_id;
    std::vector<Codebook> sections;
    ModelConfig config;
    std::optional<SectionStats> train_stats;
    // User-dependent fusion weights and the strategy that produced them.
    std::optional<FusionStrategy> weight_strategy;
    std::vector<double> user_weights;

    std::size_t section_count() const noexcept { return sections.size(); }
    std::size_t dim() const noexcept { return sections.empty() ? 0 : sections.front().dim(); }

    std::size_t stored_vectors() const noexcept {
        std::size_t n = 0;
        for (const auto& cb : sections) n += cb.size();
        return n;
    }

    friend bool operator==(const SectionedModel&, const SectionedModel&) = default;
};

// Contiguous, equal-length partition of [0, rows): boundary s sits at floor(s*rows/S).
inline std::vector<RowRange> split_sections(std::size_t rows, std::size_t sections) {
    if (sections < 1) throw InvalidConfig("section count must be at least 1");
    if (sections > rows)
        throw InvalidConfig("cannot split " + std::to_string(rows) + " vectors into " + std::to_string(sections) +
                            " sections");
    std::vector<RowRange> out;
    out.reserve(sections);
    std::size_t prev = 0;
    for (std::size_t s = 1; s <= sections; ++s) {
        const std::size_t bound = s * rows / sections;
        out.push_back({prev, bound});
        prev = bound;
    }
    return out;
}

struct DistanceCounter {
    std::size_t evaluations = 0;
};

// Index of the nearest centroid; ties go to the lowest index.
inline std::size_t nearest_centroid(std::span<const double> v, const Matrix& centroids, double* sq_dist = nullptr) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
        const double d = squared_euclidean(v, centroids.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    if (sq_dist) *sq_dist = best_d;
    return best;
}

// Distortion history of one Lloyd run: entry 0 is the segment initialization,
// entry k the squared-error total after iteration k.
struct LloydTrace {
    std::vector<double> distortions;
    std::size_t requested_size = 0;
    std::size_t effective_size = 0;
    std::vector<std::string> warnings;
};

// Segment-average initialization followed by Lloyd refinement. Lloyd minimizes
// the squared-error total; the nearest-neighbor cells are the same as under the
// plain Euclidean metric used for scoring.
inline Codebook train_codebook(RowBlock vectors, std::size_t size, std::size_t max_iters = 50, double rel_tol = 1e-4,
                               LloydTrace* trace = nullptr) {
    if (vectors.empty()) throw InvalidInput("codebook training needs at least one vector");
    if (size < 1) throw InvalidConfig("codebook size must be at least 1");
    const std::size_t n = vectors.rows();
    const std::size_t dim = vectors.cols();

    LloydTrace local;
    LloydTrace& tr = trace ? *trace : local;
    tr = LloydTrace{};
    tr.requested_size = size;
    if (size > n) {
        tr.warnings.push_back("codebook size " + std::to_string(size) + " clamped to " + std::to_string(n) +
                              " training vectors");
        size = n;
    }
    tr.effective_size = size;

    Matrix centroids(size, dim);
    const auto segments = split_sections(n, size);
    for (std::size_t c = 0; c < size; ++c) {
        auto dst = centroids.row(c);
        for (std::size_t i = segments[c].begin; i < segments[c].end; ++i) {
            const auto v = vectors.row(i);
            for (std::size_t k = 0; k < dim; ++k) dst[k] += v[k];
        }
        for (double& e : dst) e /= static_cast<double>(segments[c].size());
    }

    std::vector<std::size_t> cell(n);
    auto assign = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = 0.0;
            cell[i] = nearest_centroid(vectors.row(i), centroids, &d);
            total += d;
        }
        return total;
    };

    double distortion = assign();
    tr.distortions.push_back(distortion);

    std::vector<double> sums(size * dim);
    std::vector<std::size_t> counts(size);
    for (std::size_t iter = 0; iter < max_iters && distortion > 0.0; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = vectors.row(i);
            for (std::size_t k = 0; k < dim; ++k) sums[cell[i] * dim + k] += v[k];
            ++counts[cell[i]];
        }
        for (std::size_t c = 0; c < size; ++c) {
            if (counts[c] == 0) continue; // empty cell keeps its centroid
            for (std::size_t k = 0; k < dim; ++k)
                centroids(c, k) = sums[c * dim + k] / static_cast<double>(counts[c]);
        }
        const double next = assign();
        tr.distortions.push_back(next);
        const double improvement = distortion - next;
        distortion = next;
        if (improvement <= rel_tol * (distortion + improvement)) break;
    }
    return Codebook{std::move(centroids)};
}

// Trains S codebooks; section s of every training signature feeds codebook s,
// concatenated in signature order. Traces (one per section) are optional.
inline SectionedModel train_user_model(std::string user_id, std::span<const FeatureMatrix> train,
                                       const ModelConfig& cfg, std::vector<LloydTrace>* traces = nullptr) {
    cfg.validate();
    if (train.empty()) throw InvalidInput("user " + user_id + ": no training signatures");
    for (const auto& m : train) {
        if (m.feature_set != train.front().feature_set)
            throw InvalidInput("user " + user_id + ": training signatures mix feature sets");
        if (m.dim() != train.front().dim()) throw InvalidInput("user " + user_id + ": training dimensions differ");
    }
    if (train.front().feature_set != cfg.feature_set)
        throw InvalidInput("user " + user_id + ": training features are " + to_string(train.front().feature_set) +
                           ", model expects " + to_string(cfg.feature_set));

    SectionedModel model;
    model.user_id = std::move(user_id);
    model.config = cfg;
    std::vector<Matrix> pooled(cfg.sections, Matrix(0, train.front().dim()));
    for (const auto& m : train) {
        const auto ranges = split_sections(m.rows(), cfg.sections);
        for (std::size_t s = 0; s < cfg.sections; ++s) pooled[s].append_rows(m.values.block(ranges[s]));
    }
    if (traces) traces->assign(cfg.sections, {});
    for (std::size_t s = 0; s < cfg.sections; ++s)
        model.sections.push_back(train_codebook(pooled[s], cfg.codebook_size, cfg.lloyd_max_iters, cfg.lloyd_rel_tol,
                                                traces ? &(*traces)[s] : nullptr));
    return model;
}

struct Quantization {
    double distortion = 0.0;
    std::size_t count = 0;
};

// Sum over vectors of the Euclidean distance to the nearest centroid.
inline Quantization nner_distortion(RowBlock vectors, const Codebook& cb, DistanceCounter* counter = nullptr) {
    if (vectors.empty()) throw InvalidInput("no vectors to quantize");
    if (cb.size() == 0) throw InvalidInput("empty codebook");
    if (vectors.cols() != cb.dim())
        throw InvalidInput("vector dimension " + std::to_string(vectors.cols()) + " does not match codebook dimension " +
                           std::to_string(cb.dim()));
    Quantization q;
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        const auto x = vectors.row(i);
        double best = euclidean(x, cb.centroids.row(0));
        for (std::size_t j = 1; j < cb.size(); ++j) {
            const double d = euclidean(x, cb.centroids.row(j));
            if (d < best) best = d;
        }
        q.distortion += best;
        ++q.count;
    }
    if (counter) counter->evaluations += vectors.rows() * cb.size();
    return q;
}

struct ModelScore {
    double score = 0.0;
    // Per-vector (length-normalized) section distortions d_s.
    std::vector<double> section_distortions;
    // Raw NNER sums and vector counts behind each d_s.
    std::vector<double> raw_distortions;
    std::vector<std::size_t> counts;
};

// Per-section normalized distortions of a signature against a model.
inline ModelScore section_scores(const FeatureMatrix& test, const SectionedModel& model,
                                 DistanceCounter* counter = nullptr) {
    if (model.sections.empty()) throw InvalidConfig("model has no sections");
    if (test.feature_set != model.config.feature_set)
        throw InvalidInput("test features are " + to_string(test.feature_set) + ", model " + model.user_id + " uses " +
                           to_string(model.config.feature_set));
    const auto ranges = split_sections(test.rows(), model.section_count());
    ModelScore out;
    for (std::size_t s = 0; s < ranges.size(); ++s) {
        const auto q = nner_distortion(test.values.block(ranges[s]), model.sections[s], counter);
        out.raw_distortions.push_back(q.distortion);
        out.counts.push_back(q.count);
        out.section_distortions.push_back(q.distortion / static_cast<double>(q.count));
    }
    return out;
}

// Fusion spec actually applied to `model`: weighted strategies fall back to the
// model's own user-dependent weights when the fusion request carries none.
inline FusionSpec resolve_fusion(const SectionedModel& model, const FusionSpec& fusion) {
    if (!is_weighted(fusion.strategy) || !fusion.weights.empty()) return fusion;
    if (model.user_weights.empty())
        throw InvalidConfig("fusion " + std::string(to_string(fusion.strategy)) + " needs weights; model " +
                            model.user_id + " carries none");
    return FusionSpec{fusion.strategy, model.user_weights};
}

// Lower score means more likely genuine.
inline ModelScore model_score(const FeatureMatrix& test, const SectionedModel& model, const FusionSpec& fusion,
                              DistanceCounter* counter = nullptr) {
    const FusionSpec applied = resolve_fusion(model, fusion);
    if (is_weighted(applied.strategy)) applied.validate(model.section_count());
    ModelScore out = section_scores(test, model, counter);
    out.score = combine(out.section_distortions, applied);
    return out;
}

} // namespace msvq

#endif
