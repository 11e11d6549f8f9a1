#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace msvq;
using testing_support::oracle_nner;
using testing_support::random_grid_matrix;
using testing_support::random_matrix;

namespace {

FeatureMatrix as_features(Matrix m, FeatureSetId fs = FeatureSetId::FS6) { return {std::move(m), fs, "test"}; }

Codebook codebook(std::size_t rows, std::size_t cols, std::vector<double> v) { return {Matrix(rows, cols, std::move(v))}; }

} // namespace

TEST(SplitSections, Examples) {
    EXPECT_EQ(split_sections(9, 1), (std::vector<RowRange>{{0, 9}}));
    EXPECT_EQ(split_sections(7, 3), (std::vector<RowRange>{{0, 2}, {2, 4}, {4, 7}}));
    const auto r = split_sections(6, 3);
    for (const auto& x : r) EXPECT_EQ(x.size(), 2u);
    EXPECT_THROW(split_sections(2, 3), InvalidConfig);
    EXPECT_THROW(split_sections(5, 0), InvalidConfig);
}

TEST(SplitSections, AlwaysAPartitionWithBalancedSizes) {
    for (std::size_t I = 1; I <= 60; ++I) {
        for (std::size_t S = 1; S <= I; ++S) {
            const auto r = split_sections(I, S);
            ASSERT_EQ(r.size(), S);
            EXPECT_EQ(r.front().begin, 0u);
            EXPECT_EQ(r.back().end, I);
            std::size_t lo = I, hi = 0;
            for (std::size_t s = 0; s < S; ++s) {
                if (s) {
                    EXPECT_EQ(r[s].begin, r[s - 1].end);
                }
                EXPECT_EQ(r[s].end, (s + 1) * I / S);
                lo = std::min(lo, r[s].size());
                hi = std::max(hi, r[s].size());
            }
            EXPECT_LE(hi - lo, 1u);
            EXPECT_GE(lo, 1u);
        }
    }
}

TEST(TrainCodebook, IdenticalVectorsSingleCentroid) {
    const Matrix v(4, 3, std::vector<double>{1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3});
    LloydTrace tr;
    const auto cb = train_codebook(v, 1, 50, 1e-4, &tr);
    EXPECT_EQ(cb.centroids, Matrix(1, 3, std::vector<double>{1, 2, 3}));
    EXPECT_EQ(nner_distortion(v, cb).distortion, 0.0);
    EXPECT_EQ(tr.distortions.back(), 0.0);
}

TEST(TrainCodebook, MatchesExhaustiveTwoPartition) {
    const Matrix v(4, 2, std::vector<double>{0, 0, 0, 1, 10, 0, 10, 1});
    const auto cb = train_codebook(v, 2);
    const auto best = testing_support::oracle_two_partition(v);
    std::vector<std::vector<double>> got{{cb.centroids(0, 0), cb.centroids(0, 1)}, {cb.centroids(1, 0), cb.centroids(1, 1)}};
    auto want = best.centroids;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want);
    EXPECT_EQ(want, (std::vector<std::vector<double>>{{0, 0.5}, {10, 0.5}}));
}

TEST(TrainCodebook, ReachesTwoPartitionOptimumOnSeparatedClusters) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 50; ++rep) {
        // Time-ordered: first half near the origin, second half far away.
        Matrix v(6, 2);
        for (std::size_t i = 0; i < 6; ++i) {
            v(i, 0) = u(g) + (i >= 3 ? 100.0 : 0.0);
            v(i, 1) = u(g);
        }
        const auto cb = train_codebook(v, 2);
        const auto best = testing_support::oracle_two_partition(v);
        double sse = 0;
        for (std::size_t i = 0; i < 6; ++i) {
            double d2 = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < 2; ++j) d2 = std::min(d2, squared_euclidean(v.row(i), cb.centroids.row(j)));
            sse += d2;
        }
        EXPECT_NEAR(sse, best.sse, 1e-9);
    }
}

TEST(TrainCodebook, OneCentroidPerDistinctSegmentGivesZeroDistortion) {
    // Three equal segments, each holding one repeated vector.
    Matrix v(9, 2);
    const double pts[3][2] = {{0, 0}, {5, 1}, {-2, 7}};
    for (std::size_t i = 0; i < 9; ++i) {
        v(i, 0) = pts[i / 3][0];
        v(i, 1) = pts[i / 3][1];
    }
    const auto cb = train_codebook(v, 3);
    EXPECT_EQ(nner_distortion(v, cb).distortion, 0.0);
}

TEST(TrainCodebook, ClampsSizeWithWarning) {
    const Matrix v(3, 2, std::vector<double>{0, 0, 1, 1, 2, 2});
    LloydTrace tr;
    const auto cb = train_codebook(v, 8, 50, 1e-4, &tr);
    EXPECT_EQ(cb.size(), 3u);
    EXPECT_EQ(tr.requested_size, 8u);
    EXPECT_EQ(tr.effective_size, 3u);
    ASSERT_EQ(tr.warnings.size(), 1u);
    EXPECT_NE(tr.warnings[0].find("clamped"), std::string::npos);
}

TEST(TrainCodebook, SegmentAverageInitialization) {
    const Matrix v(5, 1, std::vector<double>{0, 2, 10, 12, 14});
    const auto cb = train_codebook(v, 2, 0);
    // Boundaries floor(5/2)=2: segments {0,2} and {10,12,14}.
    EXPECT_EQ(cb.centroids, Matrix(2, 1, std::vector<double>{1, 12}));
}

TEST(TrainCodebook, LloydDistortionNonIncreasing) {
    std::mt19937_64 g(41);
    for (int rep = 0; rep < 100; ++rep) {
        const auto v = random_matrix(g, 20 + rep, 3);
        LloydTrace tr;
        train_codebook(v, 1 + rep % 9, 50, 0.0, &tr);
        ASSERT_GE(tr.distortions.size(), 1u);
        for (std::size_t k = 1; k < tr.distortions.size(); ++k)
            EXPECT_LE(tr.distortions[k], tr.distortions[k - 1] + 1e-9);
    }
}

TEST(TrainCodebook, RejectsEmptyInput) {
    EXPECT_THROW(train_codebook(Matrix(0, 2), 1), InvalidInput);
    EXPECT_THROW(train_codebook(Matrix(3, 2), 0), InvalidConfig);
}

TEST(NnerDistortion, Examples) {
    const auto cb = codebook(2, 2, {0, 0, 1, 1});
    const Matrix v(2, 2, std::vector<double>{0, 0.2, 0.9, 1});
    const auto q = nner_distortion(v, cb);
    EXPECT_NEAR(q.distortion, 0.3, 1e-12);
    EXPECT_EQ(q.count, 2u);
    EXPECT_EQ(nner_distortion(cb.centroids, cb).distortion, 0.0);
}

TEST(NnerDistortion, DimensionMismatch) {
    EXPECT_THROW(nner_distortion(Matrix(2, 3), codebook(1, 2, {0, 0})), InvalidInput);
    EXPECT_THROW(nner_distortion(Matrix(0, 2), codebook(1, 2, {0, 0})), InvalidInput);
}

TEST(NnerDistortion, TiesGoToLowestIndex) {
    const Matrix c(3, 1, std::vector<double>{-1, 1, 1});
    const std::vector<double> x{0.0};
    EXPECT_EQ(nearest_centroid(x, c), 0u);
    const std::vector<double> y{1.0};
    EXPECT_EQ(nearest_centroid(y, c), 1u);
}

TEST(NnerDistortion, EqualsBruteForce) {
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t D = 1 + rep % 3;
        const auto x = rep % 2 ? random_grid_matrix(g, 1 + rep % 8, D) : random_matrix(g, 1 + rep % 8, D);
        const auto c = rep % 2 ? random_grid_matrix(g, 1 + rep % 4, D) : random_matrix(g, 1 + rep % 4, D);
        DistanceCounter counter;
        const auto q = nner_distortion(x, Codebook{c}, &counter);
        EXPECT_EQ(q.distortion, oracle_nner(x, c));
        EXPECT_EQ(counter.evaluations, x.rows() * c.rows());
    }
}

TEST(NnerDistortion, AddingCentroidsNeverHurts) {
    std::mt19937_64 g(8);
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_matrix(g, 10, 2);
        const auto c = random_matrix(g, 3, 2);
        Matrix bigger = c;
        bigger.append_rows(random_matrix(g, 2, 2));
        EXPECT_LE(nner_distortion(x, Codebook{bigger}).distortion, nner_distortion(x, Codebook{c}).distortion);
    }
}

TEST(TrainUserModel, SingleSectionEqualsPooledCodebook) {
    std::mt19937_64 g(9);
    std::vector<FeatureMatrix> train;
    Matrix pooled;
    for (int k = 0; k < 5; ++k) {
        train.push_back(as_features(random_matrix(g, 30 + k, 6)));
        pooled.append_rows(train.back().values);
    }
    ModelConfig cfg;
    cfg.codebook_size = 16;
    const auto model = train_user_model("u", train, cfg);
    ASSERT_EQ(model.section_count(), 1u);
    EXPECT_EQ(model.sections[0], train_codebook(pooled, 16));
}

TEST(TrainUserModel, SectionsPoolSameIndexParts) {
    std::mt19937_64 g(10);
    std::vector<FeatureMatrix> train;
    for (int k = 0; k < 5; ++k) train.push_back(as_features(random_matrix(g, 20 + k, 6)));
    ModelConfig cfg;
    cfg.sections = 3;
    cfg.codebook_size = 4;
    std::vector<LloydTrace> traces;
    const auto model = train_user_model("u", train, cfg, &traces);
    ASSERT_EQ(model.section_count(), 3u);
    ASSERT_EQ(traces.size(), 3u);
    for (std::size_t s = 0; s < 3; ++s) {
        Matrix part;
        for (const auto& m : train) part.append_rows(m.values.block(split_sections(m.rows(), 3)[s]));
        EXPECT_EQ(model.sections[s], train_codebook(part, 4));
    }
    EXPECT_EQ(model.stored_vectors(), 12u);
}

TEST(TrainUserModel, CentroidsStayInsideOwnHull) {
    std::mt19937_64 g(12);
    std::uniform_real_distribution<double> u(0, 1);
    for (double shift : {0.0, 50.0}) {
        std::vector<FeatureMatrix> train;
        for (int k = 0; k < 3; ++k) {
            Matrix m(25, 6);
            for (std::size_t i = 0; i < 25; ++i)
                for (std::size_t j = 0; j < 6; ++j) m(i, j) = shift + u(g);
            train.push_back(as_features(m));
        }
        ModelConfig cfg;
        cfg.sections = 2;
        cfg.codebook_size = 8;
        const auto model = train_user_model("u", train, cfg);
        // The hull of points in [shift, shift+1]^6 lies inside that box.
        for (const auto& cb : model.sections)
            for (double v : cb.centroids.data()) {
                EXPECT_GE(v, shift);
                EXPECT_LE(v, shift + 1.0);
            }
    }
}

TEST(TrainUserModel, RejectsMixedFeatureSets) {
    std::mt19937_64 g(13);
    std::vector<FeatureMatrix> train{as_features(random_matrix(g, 10, 6), FeatureSetId::FS6),
                                     as_features(random_matrix(g, 10, 6), FeatureSetId::FS3)};
    EXPECT_THROW(train_user_model("u", train, ModelConfig{}), InvalidInput);
    EXPECT_THROW(train_user_model("u", std::span<const FeatureMatrix>{}, ModelConfig{}), InvalidInput);
}

TEST(ModelScore, SectionFusionArithmetic) {
    SectionedModel m;
    m.user_id = "u";
    m.config.sections = 2;
    m.sections = {codebook(1, 1, {0.0}), codebook(1, 1, {0.0})};
    // Two rows per section: per-vector distortions 0.4 and 0.6.
    const FeatureMatrix test = as_features(Matrix(4, 1, std::vector<double>{0.4, 0.4, 0.6, 0.6}));
    const auto s = [&](FusionStrategy st) { return model_score(test, m, FusionSpec{st, {}}).score; };
    EXPECT_NEAR(s(FusionStrategy::sum), 1.0, 1e-12);
    EXPECT_NEAR(s(FusionStrategy::min), 0.4, 1e-12);
    EXPECT_NEAR(s(FusionStrategy::max), 0.6, 1e-12);
    const auto full = model_score(test, m, FusionSpec{});
    EXPECT_NEAR(full.raw_distortions[0], 0.8, 1e-12);
    EXPECT_EQ(full.counts, (std::vector<std::size_t>{2, 2}));
}

TEST(ModelScore, TestOnCentroidsScoresZero) {
    std::mt19937_64 g(14);
    std::vector<FeatureMatrix> train{as_features(random_matrix(g, 40, 6))};
    ModelConfig cfg;
    cfg.codebook_size = 8;
    const auto model = train_user_model("u", train, cfg);
    const FeatureMatrix test = as_features(model.sections[0].centroids);
    for (auto st : {FusionStrategy::min, FusionStrategy::max, FusionStrategy::sum})
        EXPECT_EQ(model_score(test, model, FusionSpec{st, {}}).score, 0.0);
}

TEST(ModelScore, SingleSectionIgnoresFusion) {
    std::mt19937_64 g(15);
    std::vector<FeatureMatrix> train{as_features(random_matrix(g, 50, 6))};
    ModelConfig cfg;
    cfg.codebook_size = 8;
    const auto model = train_user_model("u", train, cfg);
    const FeatureMatrix test = as_features(random_matrix(g, 33, 6));
    const double plain = nner_distortion(test.values, model.sections[0]).distortion / 33.0;
    for (auto st : all_fusion_strategies) {
        if (st == FusionStrategy::product) continue;
        FusionSpec f{st, is_weighted(st) ? std::vector<double>{1.0} : std::vector<double>{}};
        EXPECT_EQ(model_score(test, model, f).score, plain) << to_string(st);
    }
}

TEST(ModelScore, Errors) {
    std::mt19937_64 g(16);
    std::vector<FeatureMatrix> train{as_features(random_matrix(g, 30, 6))};
    ModelConfig cfg;
    cfg.sections = 2;
    cfg.codebook_size = 4;
    const auto model = train_user_model("u", train, cfg);
    const FeatureMatrix test = as_features(random_matrix(g, 10, 6));
    EXPECT_THROW(model_score(test, model, FusionSpec{FusionStrategy::wsd, {1.0}}), InvalidConfig);
    EXPECT_THROW(model_score(test, model, FusionSpec{FusionStrategy::wsd, {}}), InvalidConfig);
    EXPECT_THROW(model_score(as_features(random_matrix(g, 10, 6), FeatureSetId::FS3), model, FusionSpec{}), InvalidInput);
}
