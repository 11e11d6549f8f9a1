#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace msvq;
using testing_support::oracle_rates;

namespace {

ScoreSet single_user(const std::vector<double>& gen, const std::vector<double>& imp, const std::string& user = "a",
                     ForgeryKind kind = ForgeryKind::random) {
    ScoreSet s;
    for (double v : gen) s.genuine.push_back({user, v});
    for (double v : imp) s.impostor.push_back({user, v, kind});
    return s;
}

void append(ScoreSet& to, const ScoreSet& from) {
    to.genuine.insert(to.genuine.end(), from.genuine.begin(), from.genuine.end());
    to.impostor.insert(to.impostor.end(), from.impostor.begin(), from.impostor.end());
}

// EER by dense threshold scan: the smallest max(FAR, FRR) bracketing the crossing.
double scan_bracket(const std::vector<double>& gen, const std::vector<double>& imp, double& lo, double& hi) {
    std::vector<double> ts(gen);
    ts.insert(ts.end(), imp.begin(), imp.end());
    std::sort(ts.begin(), ts.end());
    ts.insert(ts.begin(), ts.front() - 1.0);
    lo = 1.0;
    hi = 0.0;
    double best = 1.0;
    for (double t : ts) {
        const auto [far, frr] = oracle_rates(gen, imp, t);
        best = std::min(best, std::max(far, frr));
        lo = std::min(lo, std::min(far, frr));
    }
    hi = best;
    return best;
}

} // namespace

TEST(FarFrr, SeparableSet) {
    const auto c = far_frr(std::vector<double>{1, 2}, std::vector<double>{3, 4});
    ASSERT_EQ(c.points.size(), 4u);
    EXPECT_EQ(c.points[1].threshold, 2.0);
    EXPECT_EQ(c.points[1].far, 0.0);
    EXPECT_EQ(c.points[1].frr, 0.0);
    const auto [far, frr] = oracle_rates({1, 2}, {3, 4}, 2.5);
    EXPECT_EQ(far, 0.0);
    EXPECT_EQ(frr, 0.0);
}

TEST(FarFrr, MatchesSweepOracle) {
    const std::vector<double> gen{1, 2, 3, 10}, imp{4, 5, 6, 7};
    const auto c = far_frr(gen, imp);
    for (const auto& p : c.points) {
        const auto [far, frr] = oracle_rates(gen, imp, p.threshold);
        EXPECT_EQ(p.far, far);
        EXPECT_EQ(p.frr, frr);
    }
    const auto at4 = std::find_if(c.points.begin(), c.points.end(), [](const DetPoint& p) { return p.threshold == 4; });
    ASSERT_NE(at4, c.points.end());
    EXPECT_EQ(at4->far, 0.25);
    EXPECT_EQ(at4->frr, 0.25);
}

TEST(FarFrr, MonotoneOnRandomSets) {
    std::mt19937_64 g(1);
    std::uniform_int_distribution<int> u(0, 30);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> gen(1 + rep % 13), imp(1 + rep % 7);
        for (auto& v : gen) v = u(g);
        for (auto& v : imp) v = u(g) + 5;
        const auto c = far_frr(gen, imp);
        for (std::size_t k = 1; k < c.points.size(); ++k) {
            EXPECT_LT(c.points[k - 1].threshold, c.points[k].threshold);
            EXPECT_LE(c.points[k - 1].far, c.points[k].far);
            EXPECT_GE(c.points[k - 1].frr, c.points[k].frr);
        }
        for (const auto& p : c.points) {
            EXPECT_GE(p.far, 0.0);
            EXPECT_LE(p.frr, 1.0);
        }
    }
}

TEST(FarFrr, EmptySideRejected) {
    EXPECT_THROW(far_frr(std::vector<double>{}, std::vector<double>{1}), InvalidInput);
    EXPECT_THROW(far_frr(single_user({1}, {2}, "a", ForgeryKind::random), ForgeryFilter::skilled), InvalidInput);
}

TEST(Eer, Examples) {
    EXPECT_EQ(eer(far_frr(std::vector<double>{1, 2}, std::vector<double>{3, 4})).eer, 0.0);
    const auto r = eer(far_frr(std::vector<double>{1, 2, 3, 10}, std::vector<double>{4, 5, 6, 7}));
    EXPECT_DOUBLE_EQ(r.eer, 0.25);
    EXPECT_GE(r.threshold, 4.0);
    EXPECT_LT(r.threshold, 10.0);
    EXPECT_DOUBLE_EQ(eer(far_frr(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1})).eer, 0.5);
}

TEST(Eer, FlatRunReportsMidpointThreshold) {
    // FAR = FRR = 0 for every threshold in [2, 3].
    const auto r = eer(far_frr(std::vector<double>{1, 2}, std::vector<double>{3, 4}));
    EXPECT_EQ(r.eer, 0.0);
    EXPECT_EQ(r.threshold, 2.5);
}

TEST(Eer, LiesWithinSweepBracket) {
    std::mt19937_64 g(2);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> gen(2 + rep % 20), imp(2 + rep % 11);
        for (auto& v : gen) v = n(g);
        for (auto& v : imp) v = n(g) + 1.0;
        double lo, hi;
        scan_bracket(gen, imp, lo, hi);
        const double e = eer(far_frr(gen, imp)).eer;
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, hi + 1e-12);
        EXPECT_GE(e, std::min(lo, hi) - 1e-12);
    }
}

TEST(EerIndividual, OneUserEqualsGeneral) {
    const auto s = single_user({1, 2, 3, 10}, {4, 5, 6, 7});
    EXPECT_EQ(eer_individual(s).eer, eer_general(s, ForgeryFilter::all).eer);
}

TEST(EerIndividual, SeparableUsersOverlapWhenPooled) {
    ScoreSet s = single_user({1, 2}, {3, 4}, "a");
    append(s, single_user({5, 6}, {7, 8}, "b"));
    EXPECT_EQ(eer_individual(s).eer, 0.0);
    EXPECT_GT(eer_general(s, ForgeryFilter::all).eer, 0.0);
}

TEST(EerIndividual, CanExceedGeneralWhenCurvesInterleave) {
    // Per-user interpolated EER is not bounded by the pooled one in general.
    ScoreSet s = single_user({0.0, 1.1}, {1.0, 5.0}, "a");
    append(s, single_user({0.5, 1.2}, {1.15, 3.0}, "b"));
    const double ind = eer_individual(s).eer;
    const double gen = eer_general(s, ForgeryFilter::all).eer;
    EXPECT_DOUBLE_EQ(ind, 0.5);
    EXPECT_DOUBLE_EQ(gen, 0.25);
}

TEST(EerIndividual, SkipsUsersMissingAClass) {
    ScoreSet s = single_user({1, 2}, {3, 4}, "a");
    s.genuine.push_back({"b", 1.0});
    const auto r = eer_individual(s);
    EXPECT_EQ(r.per_user.size(), 1u);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("b"), std::string::npos);
    EXPECT_THROW(eer_individual(single_user({1}, {2}), ForgeryFilter::skilled), InvalidInput);
}

TEST(EerIndividual, FilterSelectsForgeryKind) {
    ScoreSet s = single_user({1, 2}, {3, 4}, "a", ForgeryKind::random);
    append(s, single_user({}, {0.5, 1.5}, "a", ForgeryKind::skilled));
    EXPECT_EQ(eer_individual(s, ForgeryFilter::random).eer, 0.0);
    EXPECT_GT(eer_individual(s, ForgeryFilter::skilled).eer, 0.0);
}

TEST(RequiredTestSize, Values) {
    const auto large = required_test_size({0.05, 0.2, 0.0089});
    EXPECT_EQ(large.simplified, 11236u);
    EXPECT_LE(std::abs(11236.0 - 11250.0) / 11250.0, 0.01);
    EXPECT_EQ(required_test_size({0.05, 0.2, 1.0}).exact, 75u);
    EXPECT_EQ(required_test_size({0.05, 0.2, 0.10}).simplified, 1000u);
    for (double p : {0.001, 0.0089, 0.05, 0.1, 0.5, 1.0}) {
        const auto n = required_test_size({0.05, 0.2, p});
        EXPECT_LE(n.exact, n.simplified);
        EXPECT_EQ(n.exact, static_cast<std::size_t>(std::ceil(-std::log(0.05) / (0.04 * p) - 1e-9)));
    }
    EXPECT_THROW(required_test_size({0.0, 0.2, 0.1}), InvalidInput);
}

TEST(BenchmarkCountsTest, AnalyticModel) {
    const auto b = benchmark_counts(5, 454, 454, 16, 1);
    EXPECT_NEAR(b.speedup_ratio, 47.3, 0.1);
    EXPECT_EQ(b.dtw_distance_evals, 5.0 * 454 * 454 / 3.0);
    EXPECT_EQ(b.vq_distance_evals, 454.0 * 16);
    EXPECT_EQ(b.storage_dtw, 2270.0);
    const auto big = benchmark_counts(5, 454, 454, 128, 3);
    EXPECT_NEAR(big.data_reduction, 17.7, 0.05);
    EXPECT_EQ(big.storage_msvq, 384.0);
    EXPECT_EQ(big.storage_vq, 128.0);
    EXPECT_DOUBLE_EQ(benchmark_counts(5, 100, 454, 5.0 * 454 / 3.0, 1).speedup_ratio, 1.0);
    EXPECT_THROW(benchmark_counts(0, 1, 1, 1, 1), InvalidInput);
}

TEST(Identify, PicksArgminAndBreaksTiesById) {
    SectionedModel a, b;
    a.user_id = "b-user";
    b.user_id = "a-user";
    a.sections = {Codebook{Matrix(1, 1, std::vector<double>{0.0})}};
    b.sections = {Codebook{Matrix(1, 1, std::vector<double>{0.0})}};
    const std::vector<SectionedModel> models{a, b};
    const FeatureMatrix test{Matrix(2, 1, std::vector<double>{0.0, 0.0}), FeatureSetId::FS6, ""};
    EXPECT_EQ(identify(test, models, FusionSpec{}), "a-user");
    const std::vector<SectionedModel> one{a};
    EXPECT_EQ(identify(FeatureMatrix{Matrix(1, 1, std::vector<double>{9.0}), FeatureSetId::FS6, ""}, one, FusionSpec{}),
              "b-user");
    EXPECT_THROW(identify(test, std::span<const SectionedModel>{}, FusionSpec{}), InvalidInput);
}

TEST(Identify, MatchesRecomputedArgminOnSyntheticUsers) {
    SyntheticSpec spec;
    spec.n_users = 6;
    spec.genuine_per_user = 8;
    spec.skilled_per_user = 2;
    spec.seed = 99;
    const auto corpus = generate_synthetic_corpus(spec);
    ModelConfig cfg;
    cfg.codebook_size = 16;
    cfg.sections = 2;
    std::vector<SectionedModel> models;
    for (const auto& u : corpus.users) {
        std::vector<FeatureMatrix> train;
        for (std::size_t k = 0; k < 5; ++k) train.push_back(preprocess(u.genuine[k], cfg.feature_set));
        models.push_back(train_user_model(u.user_id, train, cfg));
    }
    for (const auto& u : corpus.users)
        for (std::size_t k = 5; k < 8; ++k) {
            const auto test = preprocess(u.genuine[k], cfg.feature_set);
            std::string best;
            double best_score = std::numeric_limits<double>::infinity();
            for (const auto& m : models) {
                const auto ranges = split_sections(test.rows(), 2);
                double s = 0;
                for (std::size_t sec = 0; sec < 2; ++sec) {
                    Matrix part;
                    part.append_rows(test.values.block(ranges[sec]));
                    s += testing_support::oracle_nner(part, m.sections[sec].centroids) /
                         static_cast<double>(part.rows());
                }
                if (s < best_score) {
                    best_score = s;
                    best = m.user_id;
                }
            }
            EXPECT_EQ(identify(test, models, FusionSpec{}), best);
        }
}

TEST(Identify, InvariantUnderCommonRescaling) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const std::vector<double> weights{0.2, 0.3, 0.5};
    for (int rep = 0; rep < 100; ++rep) {
        const double c = 0.1 + 10 * u(g);
        for (auto st : {FusionStrategy::sum, FusionStrategy::min, FusionStrategy::max, FusionStrategy::sev,
                        FusionStrategy::wsre}) {
            const FusionSpec f{st, is_weighted(st) ? weights : std::vector<double>{}};
            std::size_t arg = 0, arg_scaled = 0;
            double best = 1e300, best_scaled = 1e300;
            for (std::size_t m = 0; m < 8; ++m) {
                std::vector<double> d{u(g), u(g), u(g)}, ds(d);
                for (auto& x : ds) x *= c;
                const double s = combine(d, f), ss = combine(ds, f);
                if (s < best) best = s, arg = m;
                if (ss < best_scaled) best_scaled = ss, arg_scaled = m;
            }
            EXPECT_EQ(arg, arg_scaled);
        }
    }
}
