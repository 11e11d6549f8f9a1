#ifndef MSVQ_CLI_HPP
#define MSVQ_CLI_HPP

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "msvq/bench.hpp"
#include "msvq/config.hpp"
#include "msvq/corpus.hpp"
#include "msvq/eval.hpp"
#include "msvq/experiment.hpp"
#include "msvq/synthetic.hpp"
#include "msvq/vq.hpp"

namespace msvq::cli {

namespace fs = std::filesystem;

// Optional overrides shared by the commands that build a RunConfig.
struct Overrides {
    std::string config_path;
    std::optional<std::string> manifest;
    std::optional<std::size_t> sections, codebook_size, lloyd_iters;
    std::optional<std::string> feature_set, fusion, matcher, combiner;
    std::vector<double> weights;
    std::optional<std::size_t> epsilon, dev_users, random_per_user, train_count;
    std::optional<bool> parallelogram;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> users, genuine, skilled, min_length, max_length;
    std::optional<double> jitter, forgery_distortion;

    void add_model(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file (a results.json is accepted too)");
        app->add_option("--sections,-S", sections, "sections per signature");
        app->add_option("--codebook-size,-L", codebook_size, "codebook size per section");
        app->add_option("--feature-set", feature_set, "FS1..FS6");
        app->add_option("--lloyd-iters", lloyd_iters, "maximum Lloyd iterations");
        app->add_option("--fusion", fusion, "min|max|sum|product|sev|wsd|wshm|wslm|wsre|wsse|wsue|wsut");
        app->add_option("--weights", weights, "explicit global section weights");
        app->add_option("--train-count", train_count, "use the first N genuine signatures for training");
    }

    void add_eval(CLI::App* app) {
        add_model(app);
        app->add_option("--manifest", manifest, "corpus manifest.json");
        app->add_option("--matcher", matcher, "vq|dtw");
        app->add_option("--dtw-epsilon", epsilon, "DTW endpoint relaxation");
        app->add_option("--dtw-parallelogram", parallelogram, "restrict DTW to the slope 1/2..2 region");
        app->add_option("--dtw-combiner", combiner, "min|mean|median over reference templates");
        app->add_option("--dev-users", dev_users, "first N users form the development set");
        app->add_option("--random-per-user", random_per_user, "random forgeries taken from each other user");
        add_synth(app);
    }

    void add_synth(CLI::App* app) {
        app->add_option("--seed", seed, "synthetic corpus seed");
        app->add_option("--users", users, "synthetic users");
        app->add_option("--genuine", genuine, "genuine signatures per user");
        app->add_option("--skilled", skilled, "skilled forgeries per user");
        app->add_option("--min-length", min_length, "shortest synthetic signature");
        app->add_option("--max-length", max_length, "longest synthetic signature");
        app->add_option("--jitter", jitter, "genuine repetition jitter");
        app->add_option("--forgery-distortion", forgery_distortion, "skilled forgery dynamic distortion");
    }

    RunConfig resolve() const {
        RunConfig c;
        // Defaults: FS6, one section, L = 128.
        c.model.codebook_size = 128;
        if (!config_path.empty()) c = load_config(config_path, c);
        if (manifest) c.manifest = *manifest;
        if (sections) c.model.sections = *sections;
        if (codebook_size) c.model.codebook_size = *codebook_size;
        if (lloyd_iters) c.model.lloyd_max_iters = *lloyd_iters;
        if (feature_set) c.model.feature_set = parse_feature_set(*feature_set);
        if (fusion) c.fusion.strategy = parse_fusion_strategy(*fusion);
        if (!weights.empty()) c.fusion.weights = weights;
        if (matcher) c.matcher = parse_matcher(*matcher);
        if (epsilon) c.dtw.epsilon = *epsilon;
        if (parallelogram) c.dtw.use_parallelogram = *parallelogram;
        if (combiner) c.dtw.combiner = parse_template_combiner(*combiner);
        if (dev_users) c.protocol.development_users = *dev_users;
        if (random_per_user) c.protocol.random_per_other_user = *random_per_user;
        if (train_count) {
            c.protocol.train_indices.clear();
            for (std::size_t k = 0; k < *train_count; ++k) c.protocol.train_indices.push_back(k);
        }
        if (seed) c.synthetic.seed = *seed;
        if (users) c.synthetic.n_users = *users;
        if (genuine) c.synthetic.genuine_per_user = *genuine;
        if (skilled) c.synthetic.skilled_per_user = *skilled;
        if (min_length) c.synthetic.min_length = *min_length;
        if (max_length) c.synthetic.max_length = *max_length;
        if (jitter) c.synthetic.genuine_jitter = *jitter;
        if (forgery_distortion) c.synthetic.forgery_dynamic_distortion = *forgery_distortion;
        c.validate();
        return c;
    }
};

inline RawSignature read_any_signature(const fs::path& path, bool svc) {
    return svc ? import_svc(path) : parse_signature_file(path);
}

inline std::vector<fs::path> model_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.path().extension() == ".msvq") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.emplace_back(in);
        }
    }
    if (out.empty()) throw InvalidInput("no model files given");
    return out;
}

// Entry point; returns the process exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-section VQ on-line signature recognition toolkit", "msvq"};
    app.require_subcommand(1);

    Overrides synth_o, enroll_o, eval_o;
    std::string synth_out, enroll_out, eval_out;
    std::size_t enroll_workers = 1, eval_workers = 1;
    bool eval_synthetic = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("--out,-o", synth_out, "output directory")->required();
    synth_o.add_synth(synth);
    synth->add_option("--config", synth_o.config_path, "JSON config file");

    auto* enroll = app.add_subcommand("enroll", "train one model per user of a manifest");
    enroll_o.add_model(enroll);
    enroll->add_option("--manifest", enroll_o.manifest, "corpus manifest.json");
    enroll->add_option("--out,-o", enroll_out, "model directory")->required();
    enroll->add_option("--workers", enroll_workers, "worker threads");

    std::string verify_model, verify_sig, verify_fusion;
    std::vector<double> verify_weights;
    std::optional<double> verify_threshold;
    bool verify_svc = false;
    auto* verify = app.add_subcommand("verify", "score one signature against one model");
    verify->add_option("--model", verify_model, "model file")->required();
    verify->add_option("--signature", verify_sig, "signature file")->required();
    verify->add_flag("--svc", verify_svc, "signature is in SVC Task-2 format");
    verify->add_option("--fusion", verify_fusion, "fusion strategy (default sum, or the model's own)");
    verify->add_option("--weights", verify_weights, "explicit section weights");
    verify->add_option("--threshold", verify_threshold, "accept iff score <= threshold");

    std::vector<std::string> id_models;
    std::string id_sig, id_fusion;
    bool id_svc = false;
    std::size_t id_top = 5;
    auto* ident = app.add_subcommand("identify", "rank enrolled models for one signature");
    ident->add_option("--models", id_models, "model files or directories")->required();
    ident->add_option("--signature", id_sig, "signature file")->required();
    ident->add_flag("--svc", id_svc, "signature is in SVC Task-2 format");
    ident->add_option("--fusion", id_fusion, "fusion strategy");
    ident->add_option("--top", id_top, "ranks to print");

    auto* ev = app.add_subcommand("eval", "run the full verification and identification protocol");
    eval_o.add_eval(ev);
    ev->add_option("--out,-o", eval_out, "result directory")->required();
    ev->add_option("--workers", eval_workers, "worker threads (results do not depend on it)");
    ev->add_flag("--synthetic", eval_synthetic, "ignore any manifest and evaluate on the synthetic corpus");

    BenchConfig bench_cfg;
    std::string bench_out;
    std::optional<std::size_t> bench_eps;
    auto* bench = app.add_subcommand("bench", "analytic and measured DTW vs VQ cost");
    bench->add_option("--K", bench_cfg.K, "reference templates per user");
    bench->add_option("--J", bench_cfg.J, "reference length");
    bench->add_option("--I", bench_cfg.I, "test length (default J)");
    bench->add_option("--L", bench_cfg.L, "codebook size");
    bench->add_option("--S", bench_cfg.S, "sections");
    bench->add_option("--seed", bench_cfg.seed, "synthetic seed");
    bench->add_option("--dtw-epsilon", bench_eps, "DTW endpoint relaxation");
    bench->add_option("--out,-o", bench_out, "write bench.json here");

    std::vector<std::string> argv_store{"msvq"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "msvq: " << e.what() << '\n';
        return 2;
    }

    try {
        if (synth->parsed()) {
            const RunConfig cfg = synth_o.resolve();
            const auto corpus = generate_synthetic_corpus(cfg.synthetic);
            const auto m = write_synthetic_corpus(corpus, synth_out);
            write_text(fs::path(synth_out) / "config.json", to_json(cfg).dump(2) + "\n");
            std::size_t files = 0;
            for (const auto& u : m.users) files += u.genuine.size() + u.skilled.size();
            out << "wrote " << m.users.size() << " users, " << files << " signatures to " << synth_out << '\n';
            return 0;
        }
        if (enroll->parsed()) {
            const RunConfig cfg = enroll_o.resolve();
            if (cfg.manifest.empty()) throw InvalidConfig("enroll needs --manifest");
            const LoadedCorpus corpus = load_corpus(load_manifest(cfg.manifest));
            const FeatureCorpus f = extract_features(corpus, cfg.model.feature_set, enroll_workers);
            std::vector<std::size_t> users(corpus.manifest.users.size());
            for (std::size_t u = 0; u < users.size(); ++u) users[u] = u;
            const auto models =
                enroll_users(corpus, f, users, cfg.protocol, cfg.model, cfg.fusion.strategy, enroll_workers);
            for (const auto& m : models) save_model(m, fs::path(enroll_out) / (m.user_id + ".msvq"));
            write_text(fs::path(enroll_out) / "enroll.json", to_json(cfg).dump(2) + "\n");
            out << "enrolled " << models.size() << " users (" << cfg.model.sections << " x " << cfg.model.codebook_size
                << " centroids, " << to_string(cfg.model.feature_set) << ") into " << enroll_out << '\n';
            return 0;
        }
        if (verify->parsed()) {
            const SectionedModel model = load_model(verify_model);
            FusionSpec fusion;
            if (!verify_fusion.empty()) fusion.strategy = parse_fusion_strategy(verify_fusion);
            else if (model.weight_strategy) fusion.strategy = *model.weight_strategy;
            fusion.weights = verify_weights;
            const FeatureMatrix test = preprocess(read_any_signature(verify_sig, verify_svc), model.config.feature_set);
            const ModelScore s = model_score(test, model, fusion);
            out << "model " << model.user_id << " fusion " << to_string(fusion.strategy) << " score "
                << detail::format_double(s.score) << '\n';
            out << "sections";
            for (double d : s.section_distortions) out << ' ' << detail::format_double(d);
            out << '\n';
            if (verify_threshold) out << (s.score <= *verify_threshold ? "accept" : "reject") << '\n';
            return 0;
        }
        if (ident->parsed()) {
            std::vector<SectionedModel> models;
            for (const auto& p : model_files(id_models)) models.push_back(load_model(p));
            FusionSpec fusion;
            if (!id_fusion.empty()) fusion.strategy = parse_fusion_strategy(id_fusion);
            const RawSignature raw = read_any_signature(id_sig, id_svc);
            // Models may use different feature sets; preprocess per model.
            std::vector<Ranked> ranked;
            for (const auto& m : models)
                ranked.push_back({m.user_id, model_score(preprocess(raw, m.config.feature_set), m, fusion).score});
            std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
                return a.score != b.score ? a.score < b.score : a.user_id < b.user_id;
            });
            out << "identified " << ranked.front().user_id << '\n';
            for (std::size_t k = 0; k < std::min(id_top, ranked.size()); ++k)
                out << k + 1 << '\t' << ranked[k].user_id << '\t' << detail::format_double(ranked[k].score) << '\n';
            return 0;
        }
        if (ev->parsed()) {
            RunConfig cfg = eval_o.resolve();
            if (eval_synthetic) cfg.manifest.clear();
            // An empty manifest selects the synthetic corpus described by the config.
            const LoadedCorpus corpus = cfg.manifest.empty()
                                            ? corpus_from_synthetic(generate_synthetic_corpus(cfg.synthetic))
                                            : load_corpus(load_manifest(cfg.manifest));
            const EvalResult r = run_evaluation(corpus, cfg, eval_workers);
            write_eval_outputs(r, corpus, cfg, eval_out);
            out << format_eval_table(r, cfg);
            for (const auto& w : r.warnings) err << "warning: " << w << '\n';
            return 0;
        }
        if (bench->parsed()) {
            if (bench_eps) bench_cfg.dtw.epsilon = *bench_eps;
            const BenchReport r = run_benchmark(bench_cfg);
            const auto j = bench_to_json(bench_cfg, r);
            if (!bench_out.empty()) write_text(fs::path(bench_out) / "bench.json", j.dump(2) + "\n");
            out << std::fixed << std::setprecision(1);
            out << "K=" << bench_cfg.K << " I=" << bench_cfg.test_length() << " J=" << bench_cfg.J
                << " L=" << bench_cfg.L << " S=" << bench_cfg.S << '\n';
            out << "analytic: DTW " << r.analytic.dtw_distance_evals << " distances, VQ "
                << r.analytic.vq_distance_evals << " distances, speedup " << r.analytic.speedup_ratio << "x\n";
            out << "measured: DTW " << r.measured_dtw_evals << " (" << std::setprecision(3) << r.dtw_ratio()
                << " of analytic), VQ " << r.measured_vq_evals << " (" << r.vq_ratio() << " of analytic), speedup "
                << std::setprecision(1) << r.measured_speedup() << "x\n";
            out << "storage: DTW " << r.analytic.storage_dtw << " vectors, VQ " << r.analytic.storage_vq
                << ", multi-section VQ " << r.analytic.storage_msvq << ", data reduction " << r.analytic.data_reduction
                << "x\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << "msvq: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace msvq::cli

#endif
