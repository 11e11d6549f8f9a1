#ifndef MSVQ_CORPUS_HPP
#define MSVQ_CORPUS_HPP

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "msvq/error.hpp"
#include "msvq/fusion.hpp"
#include "msvq/signal.hpp"
#include "msvq/vq.hpp"

namespace msvq {

namespace detail {

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline double parse_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid number '" + std::string(tok) + "'");
    return v;
}

inline long long parse_int(std::string_view tok, std::size_t line) {
    long long v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid integer '" + std::string(tok) + "'");
    return v;
}

inline std::size_t parse_count(std::string_view tok, std::size_t line) {
    const long long v = parse_int(tok, line);
    if (v < 0) throw ParseError(line, "negative count");
    return static_cast<std::size_t>(v);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Canonical signature text format:
//   SIGv1 <count> <rate_hz>
//   t x y p azimuth altitude        (one line per sample)

inline void write_signature(std::ostream& out, const RawSignature& sig) {
    using detail::format_double;
    out << "SIGv1 " << sig.samples.size() << ' ' << format_double(sig.sample_rate_hz) << '\n';
    for (const Sample& s : sig.samples)
        out << format_double(s.t) << ' ' << format_double(s.x) << ' ' << format_double(s.y) << ' '
            << format_double(s.p) << ' ' << format_double(s.azimuth) << ' ' << format_double(s.altitude) << '\n';
}

inline RawSignature read_signature(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing SIGv1 header");
    const auto header = detail::split_ws(line);
    if (header.size() != 3 || header[0] != "SIGv1") throw ParseError(1, "expected 'SIGv1 <count> <rate_hz>'");
    const std::size_t count = detail::parse_count(header[1], 1);
    RawSignature sig;
    sig.sample_rate_hz = detail::parse_double(header[2], 1);
    if (!(sig.sample_rate_hz > 0.0)) throw ParseError(1, "sample rate must be positive");
    if (count == 0) throw ParseError(1, "signature has no samples");
    sig.samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t lineno = k + 2;
        if (!std::getline(in, line))
            throw ParseError(lineno, "expected " + std::to_string(count) + " samples, found " + std::to_string(k));
        const auto tok = detail::split_ws(line);
        if (tok.size() != 6) throw ParseError(lineno, "expected 6 fields, found " + std::to_string(tok.size()));
        Sample s;
        s.t = detail::parse_double(tok[0], lineno);
        s.x = detail::parse_double(tok[1], lineno);
        s.y = detail::parse_double(tok[2], lineno);
        s.p = detail::parse_double(tok[3], lineno);
        s.azimuth = detail::parse_double(tok[4], lineno);
        s.altitude = detail::parse_double(tok[5], lineno);
        sig.samples.push_back(s);
    }
    std::size_t lineno = count + 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!detail::split_ws(line).empty()) throw ParseError(lineno, "unexpected data after the last sample");
    }
    try {
        sig.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(0, e.what());
    }
    return sig;
}

inline void write_signature_file(const RawSignature& sig, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    write_signature(out, sig);
    if (!out) throw Error("write failed: " + path.string());
}

inline RawSignature parse_signature_file(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    try {
        return read_signature(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.message());
    }
}

// ---------------------------------------------------------------------------
// SVC 2004 Task 2: first line is the point count, then
//   X Y timestamp button-status azimuth altitude pressure

inline RawSignature read_svc(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "missing point count");
    const auto head = detail::split_ws(line);
    if (head.size() != 1) throw ParseError(1, "expected a single point count");
    const std::size_t count = detail::parse_count(head[0], 1);
    if (count == 0) throw InvalidInput("SVC file declares zero points");

    RawSignature sig;
    sig.sample_rate_hz = 100.0;
    sig.samples.reserve(count);
    sig.pen_status.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t lineno = k + 2;
        if (!std::getline(in, line))
            throw ParseError(lineno, "expected " + std::to_string(count) + " points, found " + std::to_string(k));
        const auto tok = detail::split_ws(line);
        if (tok.size() != 7) throw ParseError(lineno, "expected 7 columns, found " + std::to_string(tok.size()));
        Sample s;
        s.x = detail::parse_double(tok[0], lineno);
        s.y = detail::parse_double(tok[1], lineno);
        s.t = detail::parse_double(tok[2], lineno);
        sig.pen_status.push_back(static_cast<int>(detail::parse_int(tok[3], lineno)));
        s.azimuth = detail::parse_double(tok[4], lineno);
        s.altitude = detail::parse_double(tok[5], lineno);
        s.p = detail::parse_double(tok[6], lineno);
        sig.samples.push_back(s);
    }
    const double t0 = sig.samples.front().t;
    for (Sample& s : sig.samples) s.t -= t0;
    try {
        sig.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(0, e.what());
    }
    return sig;
}

inline RawSignature import_svc(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    try {
        return read_svc(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.message());
    }
}

// ---------------------------------------------------------------------------
// Corpus manifest (JSON). File paths are relative to the manifest's directory.

struct ManifestUser {
    std::string user_id;
    std::vector<std::string> genuine;
    std::vector<std::string> skilled;
};

struct CorpusManifest {
    std::vector<ManifestUser> users;
    double sample_rate_hz = 100.0;
    std::string source;
    std::filesystem::path base_dir;

    void validate() const {
        std::set<std::string> seen;
        for (const auto& u : users) {
            if (u.user_id.empty()) throw InvalidInput("manifest user with empty id");
            if (u.user_id.find_first_of(" \t\r\n") != std::string::npos)
                throw InvalidInput("user id '" + u.user_id + "' contains whitespace");
            if (!seen.insert(u.user_id).second) throw InvalidInput("duplicate user id " + u.user_id);
        }
        if (!(sample_rate_hz > 0.0)) throw InvalidInput("manifest sample rate must be positive");
    }

    std::filesystem::path resolve(const std::string& file) const {
        const std::filesystem::path p(file);
        return p.is_absolute() ? p : base_dir / p;
    }
};

inline nlohmann::ordered_json manifest_to_json(const CorpusManifest& m) {
    nlohmann::ordered_json j;
    j["format"] = "msvq-manifest-v1";
    j["source"] = m.source;
    j["sample_rate_hz"] = m.sample_rate_hz;
    auto& users = j["users"] = nlohmann::ordered_json::array();
    for (const auto& u : m.users) {
        nlohmann::ordered_json e;
        e["user_id"] = u.user_id;
        e["genuine"] = u.genuine;
        e["skilled"] = u.skilled;
        users.push_back(std::move(e));
    }
    return j;
}

inline void save_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
    m.validate();
    auto out = detail::open_output(path);
    out << manifest_to_json(m).dump(2) << '\n';
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        if (j.value("format", "") != "msvq-manifest-v1") throw InvalidInput("unsupported manifest format");
        CorpusManifest m;
        m.source = j.value("source", "");
        m.sample_rate_hz = j.value("sample_rate_hz", 100.0);
        m.base_dir = path.parent_path();
        for (const auto& e : j.at("users")) {
            ManifestUser u;
            u.user_id = e.at("user_id").get<std::string>();
            u.genuine = e.at("genuine").get<std::vector<std::string>>();
            u.skilled = e.value("skilled", std::vector<std::string>{});
            m.users.push_back(std::move(u));
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Experiment protocol and trial enumeration.

struct ExperimentProtocol {
    std::vector<std::size_t> train_indices{0, 1, 2, 3, 4};
    // Empty: every genuine signature not used for training.
    std::vector<std::size_t> genuine_test_indices;
    // Random forgeries per other user, taken from the front of that user's genuine-test list.
    std::size_t random_per_other_user = 5;
    // Identification probes: the last N genuine signatures of each user.
    std::size_t identification_per_user = 5;
    // The first N manifest users form the development set; the rest are tested.
    std::size_t development_users = 0;

    void validate() const {
        if (train_indices.empty()) throw InvalidConfig("protocol needs at least one training signature");
        const std::set<std::size_t> train(train_indices.begin(), train_indices.end());
        if (train.size() != train_indices.size()) throw InvalidConfig("duplicate training index");
        for (std::size_t i : genuine_test_indices)
            if (train.count(i)) throw InvalidConfig("index " + std::to_string(i) + " is both training and test");
    }

    friend bool operator==(const ExperimentProtocol&, const ExperimentProtocol&) = default;
};

struct SignatureRef {
    std::size_t user = 0;
    SignatureKind kind = SignatureKind::genuine;
    std::size_t index = 0;

    friend bool operator==(const SignatureRef&, const SignatureRef&) = default;
};

enum class TrialLabel { genuine, skilled, random };

inline std::string_view to_string(TrialLabel l) {
    switch (l) {
    case TrialLabel::genuine: return "genuine";
    case TrialLabel::skilled: return "skilled";
    case TrialLabel::random: return "random";
    }
    return "genuine";
}

struct Trial {
    std::size_t model_user = 0;
    SignatureRef test;
    TrialLabel label = TrialLabel::genuine;
};

struct TrialList {
    std::vector<std::size_t> development_users;
    std::vector<std::size_t> test_users;
    std::vector<Trial> trials;
    // Identification probes (true user is probe.user).
    std::vector<SignatureRef> identification;
    std::size_t genuine_count = 0;
    std::size_t skilled_count = 0;
    std::size_t random_count = 0;
};

// Genuine-test indices for a user holding `genuine` signatures.
inline std::vector<std::size_t> resolve_genuine_test(const ExperimentProtocol& p, std::size_t genuine) {
    if (!p.genuine_test_indices.empty()) return p.genuine_test_indices;
    const std::set<std::size_t> train(p.train_indices.begin(), p.train_indices.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < genuine; ++i)
        if (!train.count(i)) out.push_back(i);
    return out;
}

// Trials for users `group`: each user's genuine tests, all of their skilled
// forgeries, and random forgeries from every other user of the same group.
inline void append_trials(const CorpusManifest& m, const ExperimentProtocol& p, const std::vector<std::size_t>& group,
                          TrialList& out) {
    for (std::size_t u : group) {
        const auto& user = m.users[u];
        const std::size_t need = std::max(
            *std::max_element(p.train_indices.begin(), p.train_indices.end()) + 1,
            p.genuine_test_indices.empty()
                ? 0
                : *std::max_element(p.genuine_test_indices.begin(), p.genuine_test_indices.end()) + 1);
        if (user.genuine.size() < need)
            throw InvalidInput("user " + user.user_id + " has " + std::to_string(user.genuine.size()) +
                               " genuine signatures, protocol needs " + std::to_string(need));
        const auto tests = resolve_genuine_test(p, user.genuine.size());
        if (tests.size() < p.random_per_other_user)
            throw InvalidInput("user " + user.user_id + " has too few genuine test signatures to serve as random "
                               "forgeries");
        if (p.identification_per_user > user.genuine.size())
            throw InvalidInput("user " + user.user_id + " has too few signatures for identification probes");
        for (std::size_t k = user.genuine.size() - p.identification_per_user; k < user.genuine.size(); ++k)
            if (std::count(p.train_indices.begin(), p.train_indices.end(), k))
                throw InvalidInput("user " + user.user_id + ": identification probe " + std::to_string(k) +
                                   " is a training signature");
    }
    for (std::size_t u : group) {
        const auto& user = m.users[u];
        for (std::size_t k : resolve_genuine_test(p, user.genuine.size())) {
            out.trials.push_back({u, {u, SignatureKind::genuine, k}, TrialLabel::genuine});
            ++out.genuine_count;
        }
        for (std::size_t k = 0; k < user.skilled.size(); ++k) {
            out.trials.push_back({u, {u, SignatureKind::skilled_forgery, k}, TrialLabel::skilled});
            ++out.skilled_count;
        }
        for (std::size_t other : group) {
            if (other == u) continue;
            const auto tests = resolve_genuine_test(p, m.users[other].genuine.size());
            for (std::size_t r = 0; r < p.random_per_other_user; ++r) {
                out.trials.push_back({u, {other, SignatureKind::genuine, tests[r]}, TrialLabel::random});
                ++out.random_count;
            }
        }
        for (std::size_t k = user.genuine.size() - p.identification_per_user; k < user.genuine.size(); ++k)
            out.identification.push_back({u, SignatureKind::genuine, k});
    }
}

inline TrialList build_protocol(const CorpusManifest& m, const ExperimentProtocol& p) {
    p.validate();
    m.validate();
    if (p.development_users > m.users.size()) throw InvalidConfig("more development users than enrolled users");
    TrialList out;
    for (std::size_t u = 0; u < m.users.size(); ++u)
        (u < p.development_users ? out.development_users : out.test_users).push_back(u);
    if (out.test_users.empty()) throw InvalidConfig("protocol leaves no test users");
    append_trials(m, p, out.test_users, out);
    return out;
}

// ---------------------------------------------------------------------------
// Model persistence, text format "MSVQv1". Centroid rows are the only bulk data.

inline constexpr std::string_view model_format_version = "MSVQv1";

inline void write_model(std::ostream& out, const SectionedModel& m) {
    using detail::format_double;
    if (m.user_id.empty() || m.user_id.find_first_of(" \t\r\n") != std::string::npos)
        throw InvalidInput("model user id must be non-empty without whitespace");
    out << model_format_version << '\n';
    out << "user " << m.user_id << '\n';
    out << "feature_set " << to_string(m.config.feature_set) << '\n';
    out << "sections " << m.section_count() << '\n';
    out << "dim " << m.dim() << '\n';
    out << "codebook_size " << m.config.codebook_size << '\n';
    out << "lloyd " << m.config.lloyd_max_iters << ' ' << format_double(m.config.lloyd_rel_tol) << '\n';
    out << "lengths";
    for (const auto& cb : m.sections) out << ' ' << cb.size();
    out << '\n';
    if (m.weight_strategy) {
        out << "weights " << to_string(*m.weight_strategy);
        for (double w : m.user_weights) out << ' ' << format_double(w);
        out << '\n';
    } else {
        out << "weights none\n";
    }
    if (m.train_stats) {
        out << "stats " << m.train_stats->samples;
        for (double v : m.train_stats->mu) out << ' ' << format_double(v);
        for (double v : m.train_stats->sigma) out << ' ' << format_double(v);
        out << '\n';
    } else {
        out << "stats none\n";
    }
    out << "centroids\n";
    for (const auto& cb : m.sections)
        for (std::size_t r = 0; r < cb.size(); ++r) {
            const auto row = cb.centroids.row(r);
            for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << format_double(row[k]);
            out << '\n';
        }
    out << "end\n";
}

inline SectionedModel read_model(std::istream& in) {
    std::size_t lineno = 0;
    std::string line;
    auto next = [&](std::string_view key) {
        if (!std::getline(in, line)) throw LoadError("model file truncated before '" + std::string(key) + "'");
        ++lineno;
        auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0] != key)
            throw LoadError("line " + std::to_string(lineno) + ": expected '" + std::string(key) + "'");
        return std::vector<std::string>(tok.begin() + 1, tok.end());
    };
    try {
        if (!std::getline(in, line)) throw LoadError("empty model file");
        ++lineno;
        const auto magic = detail::split_ws(line);
        if (magic.size() != 1 || magic[0] != model_format_version)
            throw LoadError("unsupported model format '" + line + "', expected " + std::string(model_format_version));

        SectionedModel m;
        auto user = next("user");
        if (user.size() != 1) throw LoadError("malformed user line");
        m.user_id = user[0];
        auto fs = next("feature_set");
        if (fs.size() != 1) throw LoadError("malformed feature_set line");
        m.config.feature_set = parse_feature_set(fs[0]);
        auto sec = next("sections");
        if (sec.size() != 1) throw LoadError("malformed sections line");
        m.config.sections = detail::parse_count(sec[0], lineno);
        auto dim_line = next("dim");
        if (dim_line.size() != 1) throw LoadError("malformed dim line");
        const std::size_t dim = detail::parse_count(dim_line[0], lineno);
        auto cbs = next("codebook_size");
        if (cbs.size() != 1) throw LoadError("malformed codebook_size line");
        m.config.codebook_size = detail::parse_count(cbs[0], lineno);
        auto lloyd = next("lloyd");
        if (lloyd.size() != 2) throw LoadError("malformed lloyd line");
        m.config.lloyd_max_iters = detail::parse_count(lloyd[0], lineno);
        m.config.lloyd_rel_tol = detail::parse_double(lloyd[1], lineno);
        auto lengths = next("lengths");
        if (lengths.size() != m.config.sections || lengths.empty()) throw LoadError("lengths do not match sections");
        auto weights = next("weights");
        if (weights.empty()) throw LoadError("malformed weights line");
        if (weights[0] != "none") {
            m.weight_strategy = parse_fusion_strategy(weights[0]);
            for (std::size_t k = 1; k < weights.size(); ++k)
                m.user_weights.push_back(detail::parse_double(weights[k], lineno));
            if (m.user_weights.size() != m.config.sections) throw LoadError("weight count does not match sections");
        }
        auto stats = next("stats");
        if (stats.empty()) throw LoadError("malformed stats line");
        if (stats[0] != "none") {
            if (stats.size() != 1 + 2 * m.config.sections) throw LoadError("stats length does not match sections");
            SectionStats st;
            st.samples = detail::parse_count(stats[0], lineno);
            for (std::size_t s = 0; s < m.config.sections; ++s) {
                st.mu.push_back(detail::parse_double(stats[1 + s], lineno));
                st.sigma.push_back(detail::parse_double(stats[1 + m.config.sections + s], lineno));
            }
            m.train_stats = std::move(st);
        }
        next("centroids");
        for (const auto& len_tok : lengths) {
            const std::size_t len = detail::parse_count(len_tok, lineno);
            if (len == 0) throw LoadError("empty codebook in model file");
            Matrix c(len, dim);
            for (std::size_t r = 0; r < len; ++r) {
                if (!std::getline(in, line)) throw LoadError("model file truncated inside centroid rows");
                ++lineno;
                const auto tok = detail::split_ws(line);
                if (tok.size() != dim)
                    throw LoadError("line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                                    " centroid components");
                for (std::size_t k = 0; k < dim; ++k) c(r, k) = detail::parse_double(tok[k], lineno);
            }
            m.sections.push_back(Codebook{std::move(c)});
        }
        next("end");
        return m;
    } catch (const ParseError& e) {
        throw LoadError(e.what());
    } catch (const InvalidConfig& e) {
        throw LoadError(e.what());
    }
}

inline void save_model(const SectionedModel& m, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    write_model(out, m);
    if (!out) throw Error("write failed: " + path.string());
}

inline SectionedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path.string());
    try {
        return read_model(in);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

} // namespace msvq

#endif
