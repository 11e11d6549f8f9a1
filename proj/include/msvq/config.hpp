#ifndef MSVQ_CONFIG_HPP
#define MSVQ_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "msvq/corpus.hpp"
#include "msvq/dtw.hpp"
#include "msvq/error.hpp"
#include "msvq/fusion.hpp"
#include "msvq/synthetic.hpp"
#include "msvq/vq.hpp"

namespace msvq {

enum class Matcher { vq, dtw };

inline std::string_view to_string(Matcher m) { return m == Matcher::vq ? "vq" : "dtw"; }

inline Matcher parse_matcher(std::string_view s) {
    if (s == "vq") return Matcher::vq;
    if (s == "dtw") return Matcher::dtw;
    throw InvalidConfig("unknown matcher '" + std::string(s) + "'");
}

// Everything that determines an experiment's results. Worker count is not part
// of it: results do not depend on it.
struct RunConfig {
    ModelConfig model;
    FusionSpec fusion;
    DtwConfig dtw;
    Matcher matcher = Matcher::vq;
    ExperimentProtocol protocol;
    SyntheticSpec synthetic;
    std::string manifest;

    void validate() const {
        model.validate();
        protocol.validate();
        synthetic.validate();
        if (!fusion.weights.empty()) fusion.validate(model.sections);
        if (dtw.epsilon && *dtw.epsilon < 1) throw InvalidConfig("DTW epsilon must be at least 1");
    }
};

using ojson = nlohmann::ordered_json;

inline ojson to_json(const RunConfig& c) {
    ojson j;
    j["matcher"] = to_string(c.matcher);
    j["manifest"] = c.manifest;
    j["model"] = {{"sections", c.model.sections},
                  {"codebook_size", c.model.codebook_size},
                  {"feature_set", to_string(c.model.feature_set)},
                  {"lloyd_max_iters", c.model.lloyd_max_iters},
                  {"lloyd_rel_tol", c.model.lloyd_rel_tol}};
    j["fusion"] = {{"strategy", to_string(c.fusion.strategy)}, {"weights", c.fusion.weights}};
    j["dtw"] = {{"epsilon", c.dtw.epsilon ? ojson(*c.dtw.epsilon) : ojson(nullptr)},
                {"parallelogram", c.dtw.use_parallelogram},
                {"combiner", to_string(c.dtw.combiner)}};
    j["protocol"] = {{"train_indices", c.protocol.train_indices},
                     {"genuine_test_indices", c.protocol.genuine_test_indices},
                     {"random_per_other_user", c.protocol.random_per_other_user},
                     {"identification_per_user", c.protocol.identification_per_user},
                     {"development_users", c.protocol.development_users}};
    j["synthetic"] = {{"seed", c.synthetic.seed},
                      {"n_users", c.synthetic.n_users},
                      {"genuine_per_user", c.synthetic.genuine_per_user},
                      {"skilled_per_user", c.synthetic.skilled_per_user},
                      {"min_length", c.synthetic.min_length},
                      {"max_length", c.synthetic.max_length},
                      {"genuine_jitter", c.synthetic.genuine_jitter},
                      {"forgery_dynamic_distortion", c.synthetic.forgery_dynamic_distortion}};
    return j;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw InvalidConfig(where + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw InvalidConfig("unknown config key '" + where + (where.empty() ? "" : ".") + k + "'");
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

} // namespace detail

// Overlays `j` on `base`. Unknown keys are rejected at every level.
inline RunConfig apply_json(RunConfig c, const nlohmann::json& j) {
    using detail::read_if;
    try {
        detail::reject_unknown(j, {"matcher", "manifest", "model", "fusion", "dtw", "protocol", "synthetic"}, "");
        if (j.contains("matcher")) c.matcher = parse_matcher(j.at("matcher").get<std::string>());
        read_if(j, "manifest", c.manifest);
        if (j.contains("model")) {
            const auto& m = j.at("model");
            detail::reject_unknown(m, {"sections", "codebook_size", "feature_set", "lloyd_max_iters", "lloyd_rel_tol"},
                                   "model");
            read_if(m, "sections", c.model.sections);
            read_if(m, "codebook_size", c.model.codebook_size);
            if (m.contains("feature_set")) c.model.feature_set = parse_feature_set(m.at("feature_set").get<std::string>());
            read_if(m, "lloyd_max_iters", c.model.lloyd_max_iters);
            read_if(m, "lloyd_rel_tol", c.model.lloyd_rel_tol);
        }
        if (j.contains("fusion")) {
            const auto& f = j.at("fusion");
            detail::reject_unknown(f, {"strategy", "weights"}, "fusion");
            if (f.contains("strategy")) c.fusion.strategy = parse_fusion_strategy(f.at("strategy").get<std::string>());
            read_if(f, "weights", c.fusion.weights);
        }
        if (j.contains("dtw")) {
            const auto& d = j.at("dtw");
            detail::reject_unknown(d, {"epsilon", "parallelogram", "combiner"}, "dtw");
            if (d.contains("epsilon"))
                c.dtw.epsilon = d.at("epsilon").is_null() ? std::nullopt
                                                          : std::optional<std::size_t>(d.at("epsilon").get<std::size_t>());
            read_if(d, "parallelogram", c.dtw.use_parallelogram);
            if (d.contains("combiner")) c.dtw.combiner = parse_template_combiner(d.at("combiner").get<std::string>());
        }
        if (j.contains("protocol")) {
            const auto& p = j.at("protocol");
            detail::reject_unknown(p,
                                   {"train_indices", "genuine_test_indices", "random_per_other_user",
                                    "identification_per_user", "development_users"},
                                   "protocol");
            read_if(p, "train_indices", c.protocol.train_indices);
            read_if(p, "genuine_test_indices", c.protocol.genuine_test_indices);
            read_if(p, "random_per_other_user", c.protocol.random_per_other_user);
            read_if(p, "identification_per_user", c.protocol.identification_per_user);
            read_if(p, "development_users", c.protocol.development_users);
        }
        if (j.contains("synthetic")) {
            const auto& s = j.at("synthetic");
            detail::reject_unknown(s,
                                   {"seed", "n_users", "genuine_per_user", "skilled_per_user", "min_length",
                                    "max_length", "genuine_jitter", "forgery_dynamic_distortion"},
                                   "synthetic");
            read_if(s, "seed", c.synthetic.seed);
            read_if(s, "n_users", c.synthetic.n_users);
            read_if(s, "genuine_per_user", c.synthetic.genuine_per_user);
            read_if(s, "skilled_per_user", c.synthetic.skilled_per_user);
            read_if(s, "min_length", c.synthetic.min_length);
            read_if(s, "max_length", c.synthetic.max_length);
            read_if(s, "genuine_jitter", c.synthetic.genuine_jitter);
            read_if(s, "forgery_dynamic_distortion", c.synthetic.forgery_dynamic_distortion);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
    }
    return c;
}

// Reads a config file. A results file with an embedded "config" object is also accepted.
inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.at("config").is_object()) j = j.at("config");
    return apply_json(std::move(base), j);
}

} // namespace msvq

#endif
