#ifndef MSVQ_EXPERIMENT_HPP
#define MSVQ_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "msvq/config.hpp"
#include "msvq/corpus.hpp"
#include "msvq/dtw.hpp"
#include "msvq/eval.hpp"
#include "msvq/fusion.hpp"
#include "msvq/section_weights.hpp"
#include "msvq/signal.hpp"
#include "msvq/synthetic.hpp"
#include "msvq/vq.hpp"

namespace msvq {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is handled
// exactly once; callers write results into slot i, so output order never depends
// on scheduling. The first exception is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct LoadedCorpus {
    CorpusManifest manifest;
    std::vector<std::vector<RawSignature>> genuine;
    std::vector<std::vector<RawSignature>> skilled;
};

inline LoadedCorpus load_corpus(const CorpusManifest& m) {
    LoadedCorpus c;
    c.manifest = m;
    for (const auto& u : m.users) {
        auto& g = c.genuine.emplace_back();
        auto& s = c.skilled.emplace_back();
        for (std::size_t k = 0; k < u.genuine.size(); ++k) {
            RawSignature sig = parse_signature_file(m.resolve(u.genuine[k]));
            sig.user_id = u.user_id;
            sig.kind = SignatureKind::genuine;
            sig.index = static_cast<int>(k);
            g.push_back(std::move(sig));
        }
        for (std::size_t k = 0; k < u.skilled.size(); ++k) {
            RawSignature sig = parse_signature_file(m.resolve(u.skilled[k]));
            sig.user_id = u.user_id;
            sig.kind = SignatureKind::skilled_forgery;
            sig.index = static_cast<int>(k);
            s.push_back(std::move(sig));
        }
    }
    return c;
}

inline LoadedCorpus corpus_from_synthetic(const SyntheticCorpus& syn) {
    LoadedCorpus c;
    c.manifest.source = "synthetic seed=" + std::to_string(syn.spec.seed);
    for (const auto& u : syn.users) {
        ManifestUser e;
        e.user_id = u.user_id;
        for (std::size_t k = 0; k < u.genuine.size(); ++k) e.genuine.push_back(u.user_id + "/g" + std::to_string(k));
        for (std::size_t k = 0; k < u.skilled.size(); ++k) e.skilled.push_back(u.user_id + "/s" + std::to_string(k));
        c.manifest.users.push_back(std::move(e));
        c.genuine.push_back(u.genuine);
        c.skilled.push_back(u.skilled);
    }
    return c;
}

struct FeatureCorpus {
    FeatureSetId feature_set = FeatureSetId::FS6;
    std::vector<std::vector<FeatureMatrix>> genuine;
    std::vector<std::vector<FeatureMatrix>> skilled;

    const FeatureMatrix& at(const SignatureRef& r) const {
        return r.kind == SignatureKind::skilled_forgery ? skilled.at(r.user).at(r.index) : genuine.at(r.user).at(r.index);
    }
};

inline FeatureCorpus extract_features(const LoadedCorpus& c, FeatureSetId fs, std::size_t workers = 1) {
    FeatureCorpus f;
    f.feature_set = fs;
    f.genuine.resize(c.genuine.size());
    f.skilled.resize(c.skilled.size());
    parallel_for(c.genuine.size(), workers, [&](std::size_t u) {
        for (const auto& s : c.genuine[u]) f.genuine[u].push_back(preprocess(s, fs));
        for (const auto& s : c.skilled[u]) f.skilled[u].push_back(preprocess(s, fs));
    });
    return f;
}

inline std::vector<FeatureMatrix> training_set(const FeatureCorpus& f, std::size_t user, const ExperimentProtocol& p) {
    std::vector<FeatureMatrix> out;
    for (std::size_t k : p.train_indices) out.push_back(f.genuine.at(user).at(k));
    return out;
}

// Trains one model per listed user, with section statistics and, for
// user-dependent strategies, the user's fusion weights. Impostors for wsue/wsut
// are the training signatures of the other users in `users`.
inline std::vector<SectionedModel> enroll_users(const LoadedCorpus& corpus, const FeatureCorpus& f,
                                                const std::vector<std::size_t>& users, const ExperimentProtocol& p,
                                                const ModelConfig& cfg, FusionStrategy strategy,
                                                std::size_t workers = 1) {
    std::vector<SectionedModel> models(users.size());
    parallel_for(users.size(), workers, [&](std::size_t k) {
        const std::size_t u = users[k];
        const auto train = training_set(f, u, p);
        SectionedModel m = train_user_model(corpus.manifest.users.at(u).user_id, train, cfg);
        m.train_stats = train_section_stats(m, train);
        models[k] = std::move(m);
    });
    if (!is_user_dependent(strategy)) return models;

    parallel_for(users.size(), workers, [&](std::size_t k) {
        SectionedModel& m = models[k];
        m.weight_strategy = strategy;
        if (strategy == FusionStrategy::wsue || strategy == FusionStrategy::wsut) {
            std::vector<FeatureMatrix> impostors;
            for (std::size_t other : users)
                if (other != users[k])
                    for (auto& sig : training_set(f, other, p)) impostors.push_back(std::move(sig));
            if (impostors.empty()) throw InvalidConfig("wsue/wsut need at least two enrolled users");
            m.user_weights = user_error_weights(strategy, m, training_set(f, users[k], p), impostors);
        } else {
            m.user_weights = compute_weights(strategy, *m.train_stats);
        }
    });
    return models;
}

// Global weights for wsre (random forgeries) or wsse (skilled forgeries) from the
// development users' per-section EERs.
inline std::vector<double> development_weights(const LoadedCorpus& corpus, const FeatureCorpus& f,
                                               const ExperimentProtocol& p, const ModelConfig& cfg,
                                               FusionStrategy strategy, std::size_t workers = 1) {
    if (strategy != FusionStrategy::wsre && strategy != FusionStrategy::wsse)
        throw InvalidConfig("development weights apply to wsre and wsse only");
    TrialList dev;
    for (std::size_t u = 0; u < p.development_users && u < corpus.manifest.users.size(); ++u)
        dev.development_users.push_back(u);
    if (dev.development_users.size() < 2)
        throw InvalidConfig("fusion " + std::string(to_string(strategy)) +
                            " needs protocol.development_users >= 2 or explicit fusion.weights");
    append_trials(corpus.manifest, p, dev.development_users, dev);
    const auto models = enroll_users(corpus, f, dev.development_users, p, cfg, FusionStrategy::sum, workers);

    const TrialLabel wanted = strategy == FusionStrategy::wsre ? TrialLabel::random : TrialLabel::skilled;
    std::vector<std::vector<double>> per_trial(dev.trials.size());
    parallel_for(dev.trials.size(), workers, [&](std::size_t i) {
        const Trial& t = dev.trials[i];
        if (t.label != TrialLabel::genuine && t.label != wanted) return;
        per_trial[i] = section_scores(f.at(t.test), models[t.model_user]).section_distortions;
    });
    std::vector<std::vector<double>> gen(cfg.sections), imp(cfg.sections);
    for (std::size_t i = 0; i < dev.trials.size(); ++i) {
        if (per_trial[i].empty()) continue;
        auto& side = dev.trials[i].label == TrialLabel::genuine ? gen : imp;
        for (std::size_t s = 0; s < cfg.sections; ++s) side[s].push_back(per_trial[i][s]);
    }
    if (imp.front().empty())
        throw InvalidConfig("development set has no " + std::string(to_string(wanted)) + " forgeries");
    return compute_weights(strategy, section_errors(gen, imp).eer, cfg.sections);
}

struct TrialScore {
    Trial trial;
    double score = 0.0;
};

struct EerPair {
    double individual = 0.0;
    double general = 0.0;
};

struct EvalResult {
    std::size_t test_users = 0;
    std::size_t genuine_trials = 0;
    std::size_t skilled_trials = 0;
    std::size_t random_trials = 0;
    std::vector<TrialScore> trial_scores;
    ScoreSet scores;
    EerPair random;
    std::optional<EerPair> skilled;
    std::size_t identification_correct = 0;
    std::size_t identification_total = 0;
    DetCurve det_random;
    std::optional<DetCurve> det_skilled;
    std::vector<double> global_weights;
    std::vector<std::string> warnings;

    double identification_rate() const {
        return identification_total ? static_cast<double>(identification_correct) / identification_total : 0.0;
    }
};

inline EvalResult run_evaluation(const LoadedCorpus& corpus, const RunConfig& cfg, std::size_t workers = 1) {
    cfg.validate();
    const TrialList trials = build_protocol(corpus.manifest, cfg.protocol);
    const FeatureCorpus f = extract_features(corpus, cfg.model.feature_set, workers);

    EvalResult res;
    res.test_users = trials.test_users.size();
    res.genuine_trials = trials.genuine_count;
    res.skilled_trials = trials.skilled_count;
    res.random_trials = trials.random_count;

    FusionSpec fusion = cfg.fusion;
    std::vector<SectionedModel> models;
    std::vector<std::vector<FeatureMatrix>> templates;
    // Test users are enrolled in trial-list order; map manifest index to slot.
    std::vector<std::size_t> slot(corpus.manifest.users.size(), 0);
    for (std::size_t k = 0; k < trials.test_users.size(); ++k) slot[trials.test_users[k]] = k;

    if (cfg.matcher == Matcher::vq) {
        if ((fusion.strategy == FusionStrategy::wsre || fusion.strategy == FusionStrategy::wsse) &&
            fusion.weights.empty())
            fusion.weights = development_weights(corpus, f, cfg.protocol, cfg.model, fusion.strategy, workers);
        res.global_weights = fusion.weights;
        models = enroll_users(corpus, f, trials.test_users, cfg.protocol, cfg.model, fusion.strategy, workers);
    } else {
        for (std::size_t u : trials.test_users) templates.push_back(training_set(f, u, cfg.protocol));
    }

    auto score_against = [&](const FeatureMatrix& test, std::size_t model_slot) {
        if (cfg.matcher == Matcher::vq) return model_score(test, models[model_slot], fusion).score;
        return multi_template_score(test, templates[model_slot], cfg.dtw);
    };

    res.trial_scores.resize(trials.trials.size());
    parallel_for(trials.trials.size(), workers, [&](std::size_t i) {
        const Trial& t = trials.trials[i];
        res.trial_scores[i] = {t, score_against(f.at(t.test), slot[t.model_user])};
    });

    for (const auto& ts : res.trial_scores) {
        const std::string& user = corpus.manifest.users[ts.trial.model_user].user_id;
        if (!std::isfinite(ts.score)) {
            res.warnings.push_back("non-finite score for user " + user + " dropped");
            continue;
        }
        if (ts.trial.label == TrialLabel::genuine)
            res.scores.genuine.push_back({user, ts.score});
        else
            res.scores.impostor.push_back(
                {user, ts.score, ts.trial.label == TrialLabel::random ? ForgeryKind::random : ForgeryKind::skilled});
    }

    auto eer_pair = [&](ForgeryFilter filter) {
        IndividualEer ind = eer_individual(res.scores, filter);
        for (auto& w : ind.warnings) res.warnings.push_back(std::move(w));
        return EerPair{ind.eer, eer_general(res.scores, filter).eer};
    };
    res.random = eer_pair(ForgeryFilter::random);
    res.det_random = far_frr(res.scores, ForgeryFilter::random);
    if (trials.skilled_count > 0) {
        res.skilled = eer_pair(ForgeryFilter::skilled);
        res.det_skilled = far_frr(res.scores, ForgeryFilter::skilled);
    }

    std::vector<char> correct(trials.identification.size(), 0);
    parallel_for(trials.identification.size(), workers, [&](std::size_t i) {
        const SignatureRef& probe = trials.identification[i];
        const FeatureMatrix& test = f.at(probe);
        std::size_t best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < trials.test_users.size(); ++k) {
            const double s = score_against(test, k);
            const auto& id = corpus.manifest.users[trials.test_users[k]].user_id;
            const auto& best_id = corpus.manifest.users[trials.test_users[best]].user_id;
            if (s < best_score || (s == best_score && id < best_id)) {
                best_score = s;
                best = k;
            }
        }
        correct[i] = trials.test_users[best] == probe.user;
    });
    res.identification_total = correct.size();
    res.identification_correct = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), 1));
    return res;
}

// ---------------------------------------------------------------------------
// Result files. Every file carries the effective configuration.

inline ojson eval_to_json(const EvalResult& r, const RunConfig& cfg) {
    ojson j;
    j["config"] = to_json(cfg);
    j["counts"] = {{"test_users", r.test_users},
                   {"genuine_trials", r.genuine_trials},
                   {"skilled_trials", r.skilled_trials},
                   {"random_trials", r.random_trials},
                   {"identification_probes", r.identification_total}};
    j["eer"]["random"] = {{"individual", r.random.individual}, {"general", r.random.general}};
    if (r.skilled) j["eer"]["skilled"] = {{"individual", r.skilled->individual}, {"general", r.skilled->general}};
    j["identification_rate"] = r.identification_rate();
    j["global_weights"] = r.global_weights;
    j["warnings"] = r.warnings;
    return j;
}

inline std::string config_comment(const RunConfig& cfg) { return "# config: " + to_json(cfg).dump() + "\n"; }

inline std::string format_percent(double fraction) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << 100.0 * fraction << " %";
    return os.str();
}

// Random/Skilled x Individual/General threshold table plus identification rate.
inline std::string format_eval_table(const EvalResult& r, const RunConfig& cfg) {
    std::ostringstream os;
    std::string conf;
    if (cfg.matcher == Matcher::dtw) {
        conf = "DTW (" + std::string(to_string(cfg.dtw.combiner)) + ")";
    } else {
        conf = std::to_string(cfg.model.sections) + (cfg.model.sections == 1 ? " Section" : " S. (" +
               std::string(to_string(cfg.fusion.strategy)) + ")");
    }
    const std::string cb = cfg.matcher == Matcher::vq ? std::to_string(cfg.model.codebook_size) : "-";
    auto cell = [](std::optional<double> v) { return v ? format_percent(*v) : std::string("n/a"); };
    os << config_comment(cfg);
    os << "EER (%) on " << r.test_users << " users, features " << to_string(cfg.model.feature_set) << "\n";
    os << "VQ Conf.\tCB Size\tRandom Ind. Thres.\tRandom Gen. Thres.\tSkilled Ind. Thres.\tSkilled Gen. Thres.\n";
    os << conf << '\t' << cb << '\t' << cell(r.random.individual) << '\t' << cell(r.random.general) << '\t'
       << cell(r.skilled ? std::optional(r.skilled->individual) : std::nullopt) << '\t'
       << cell(r.skilled ? std::optional(r.skilled->general) : std::nullopt) << '\n';
    os << "Identification: " << format_percent(r.identification_rate()) << " (" << r.identification_correct << "/"
       << r.identification_total << ")\n";
    return os.str();
}

inline std::string format_det(const DetCurve& c, const RunConfig& cfg) {
    std::ostringstream os;
    os << config_comment(cfg) << "# threshold\tfar\tfrr\n";
    for (const auto& p : c.points)
        os << detail::format_double(p.threshold) << '\t' << detail::format_double(p.far) << '\t'
           << detail::format_double(p.frr) << '\n';
    return os.str();
}

inline std::string format_scores(const EvalResult& r, const LoadedCorpus& corpus, const RunConfig& cfg) {
    std::ostringstream os;
    os << config_comment(cfg) << "# model_user\ttest_user\ttest_kind\ttest_index\tlabel\tscore\n";
    for (const auto& ts : r.trial_scores) {
        const auto& t = ts.trial;
        os << corpus.manifest.users[t.model_user].user_id << '\t' << corpus.manifest.users[t.test.user].user_id << '\t'
           << to_string(t.test.kind) << '\t' << t.test.index << '\t' << to_string(t.label) << '\t'
           << detail::format_double(ts.score) << '\n';
    }
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = detail::open_output(path);
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline void write_eval_outputs(const EvalResult& r, const LoadedCorpus& corpus, const RunConfig& cfg,
                               const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "results.json", eval_to_json(r, cfg).dump(2) + "\n");
    write_text(dir / "table.txt", format_eval_table(r, cfg));
    write_text(dir / "scores.tsv", format_scores(r, corpus, cfg));
    write_text(dir / "det_random.tsv", format_det(r.det_random, cfg));
    if (r.det_skilled) write_text(dir / "det_skilled.tsv", format_det(*r.det_skilled, cfg));
}

} // namespace msvq

#endif
