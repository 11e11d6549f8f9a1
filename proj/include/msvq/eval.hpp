#ifndef MSVQ_EVAL_HPP
#define MSVQ_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msvq/error.hpp"
#include "msvq/fusion.hpp"
#include "msvq/signal.hpp"
#include "msvq/vq.hpp"

namespace msvq {

enum class ForgeryKind { random, skilled };

inline std::string_view to_string(ForgeryKind k) { return k == ForgeryKind::random ? "random" : "skilled"; }

struct GenuineScore {
    std::string user_id;
    double score = 0.0;
};

struct ImpostorScore {
    std::string user_id;
    double score = 0.0;
    ForgeryKind kind = ForgeryKind::random;
};

// Lower scores are more likely genuine.
struct ScoreSet {
    std::vector<GenuineScore> genuine;
    std::vector<ImpostorScore> impostor;
};

enum class ForgeryFilter { all, random, skilled };

inline bool passes(ForgeryFilter f, ForgeryKind k) {
    return f == ForgeryFilter::all || (f == ForgeryFilter::random) == (k == ForgeryKind::random);
}

struct DetPoint {
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
};

struct DetCurve {
    std::vector<DetPoint> points;
};

// Sweep every distinct score as a threshold; a trial is accepted iff score <= threshold.
inline DetCurve far_frr(std::vector<double> genuine, std::vector<double> impostor) {
    if (genuine.empty() || impostor.empty()) throw InvalidInput("FAR/FRR needs genuine and impostor scores");
    for (double v : genuine)
        if (!std::isfinite(v)) throw InvalidInput("non-finite genuine score");
    for (double v : impostor)
        if (!std::isfinite(v)) throw InvalidInput("non-finite impostor score");
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());

    std::vector<double> thresholds;
    thresholds.reserve(genuine.size() + impostor.size());
    std::merge(genuine.begin(), genuine.end(), impostor.begin(), impostor.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    DetCurve curve;
    curve.points.reserve(thresholds.size());
    const double ng = static_cast<double>(genuine.size());
    const double ni = static_cast<double>(impostor.size());
    std::size_t g = 0, im = 0;
    for (double t : thresholds) {
        while (g < genuine.size() && genuine[g] <= t) ++g;
        while (im < impostor.size() && impostor[im] <= t) ++im;
        curve.points.push_back({t, static_cast<double>(im) / ni, static_cast<double>(genuine.size() - g) / ng});
    }
    return curve;
}

inline DetCurve far_frr(const ScoreSet& scores, ForgeryFilter filter) {
    std::vector<double> gen, imp;
    for (const auto& s : scores.genuine) gen.push_back(s.score);
    for (const auto& s : scores.impostor)
        if (passes(filter, s.kind)) imp.push_back(s.score);
    return far_frr(std::move(gen), std::move(imp));
}

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

// FAR/FRR crossing, linearly interpolated between adjacent sweep points. When the
// rates coincide, they stay equal from the first such threshold up to the next
// sweep point past the run; the midpoint of that interval is reported.
inline EerResult eer(const DetCurve& curve) {
    const auto& pts = curve.points;
    if (pts.empty()) throw InvalidInput("empty DET curve");
    auto gap = [&](std::size_t k) { return pts[k].frr - pts[k].far; };

    std::size_t k = 0;
    while (k < pts.size() && gap(k) > 0.0) ++k;
    if (k == pts.size()) {
        // FRR stays above FAR; the last point is the closest approach.
        const auto& p = pts.back();
        return {0.5 * (p.far + p.frr), p.threshold};
    }
    if (gap(k) == 0.0) {
        std::size_t m = k;
        while (m + 1 < pts.size() && gap(m + 1) == 0.0) ++m;
        const double e = 0.25 * (pts[k].far + pts[k].frr + pts[m].far + pts[m].frr);
        const double upper = m + 1 < pts.size() ? pts[m + 1].threshold : pts[m].threshold;
        return {e, 0.5 * (pts[k].threshold + upper)};
    }
    // gap(k) < 0; interpolate from the previous point (or from FAR=0, FRR=1 at the first threshold).
    const DetPoint prev = k > 0 ? pts[k - 1] : DetPoint{pts[0].threshold, 0.0, 1.0};
    const DetPoint& cur = pts[k];
    const double g0 = prev.frr - prev.far;
    const double g1 = cur.frr - cur.far;
    const double a = g0 / (g0 - g1);
    return {prev.far + a * (cur.far - prev.far), prev.threshold + a * (cur.threshold - prev.threshold)};
}

inline EerResult eer_general(const ScoreSet& scores, ForgeryFilter filter) { return eer(far_frr(scores, filter)); }

struct IndividualEer {
    double eer = 0.0;
    std::vector<std::pair<std::string, EerResult>> per_user;
    std::vector<std::string> warnings;
};

// One threshold per user; the result is the unweighted mean of the per-user EERs.
// Users lacking genuine or (filtered) impostor scores are skipped with a warning.
inline IndividualEer eer_individual(const ScoreSet& scores, ForgeryFilter filter = ForgeryFilter::all) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_user;
    for (const auto& s : scores.genuine) by_user[s.user_id].first.push_back(s.score);
    for (const auto& s : scores.impostor)
        if (passes(filter, s.kind)) by_user[s.user_id].second.push_back(s.score);

    IndividualEer out;
    double total = 0.0;
    for (auto& [user, sides] : by_user) {
        if (sides.first.empty() || sides.second.empty()) {
            out.warnings.push_back("user " + user + " excluded: missing " +
                                   (sides.first.empty() ? "genuine" : "impostor") + " scores");
            continue;
        }
        const EerResult r = eer(far_frr(std::move(sides.first), std::move(sides.second)));
        total += r.eer;
        out.per_user.emplace_back(user, r);
    }
    if (out.per_user.empty()) throw InvalidInput("no user has both genuine and impostor scores");
    out.eer = total / static_cast<double>(out.per_user.size());
    return out;
}

struct Ranked {
    std::string user_id;
    double score = 0.0;
};

// Models ordered by ascending score; ties by user id.
inline std::vector<Ranked> rank_models(const FeatureMatrix& test, std::span<const SectionedModel> models,
                                       const FusionSpec& fusion) {
    std::vector<Ranked> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back({m.user_id, model_score(test, m, fusion).score});
    std::stable_sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.user_id < b.user_id;
    });
    return out;
}

inline std::string identify(const FeatureMatrix& test, std::span<const SectionedModel> models,
                            const FusionSpec& fusion) {
    if (models.empty()) throw InvalidInput("identification needs at least one enrolled model");
    return rank_models(test, models, fusion).front().user_id;
}

struct SignificanceQuery {
    double alpha = 0.05;
    double beta = 0.2;
    double p_hat = 0.01;
};

struct TestSize {
    std::size_t exact = 0;
    std::size_t simplified = 0;
};

namespace detail {
inline std::size_t ceil_count(double v) {
    // Guard against representation noise like 1000.0000000000001.
    return static_cast<std::size_t>(std::ceil(v - 1e-9 * std::max(1.0, std::abs(v))));
}
} // namespace detail

// Minimum test-set size: N = -ln(alpha) / (beta^2 P), and the 100/P shorthand.
inline TestSize required_test_size(const SignificanceQuery& q) {
    for (double v : {q.alpha, q.beta, q.p_hat})
        if (!(v > 0.0 && v <= 1.0)) throw InvalidInput("alpha, beta and p_hat must lie in (0, 1]");
    return {detail::ceil_count(-std::log(q.alpha) / (q.beta * q.beta * q.p_hat)), detail::ceil_count(100.0 / q.p_hat)};
}

// Analytic computation and storage model of DTW against (multi-section) VQ.
struct BenchmarkCounts {
    double dtw_distance_evals = 0.0;
    double vq_distance_evals = 0.0;
    double speedup_ratio = 0.0;
    double storage_dtw = 0.0;
    double storage_vq = 0.0;
    double storage_msvq = 0.0;
    double data_reduction = 0.0;
};

inline BenchmarkCounts benchmark_counts(double K, double I, double J, double L, double S) {
    for (double v : {K, I, J, L, S})
        if (!(v > 0.0)) throw InvalidInput("benchmark parameters must be positive");
    BenchmarkCounts b;
    b.dtw_distance_evals = K * I * J / 3.0;
    b.vq_distance_evals = I * L;
    b.speedup_ratio = K * J / (3.0 * L);
    b.storage_dtw = K * J;
    b.storage_vq = L;
    b.storage_msvq = S * L;
    b.data_reduction = K * J / L;
    return b;
}

} // namespace msvq

#endif
