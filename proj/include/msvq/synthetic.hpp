#ifndef MSVQ_SYNTHETIC_HPP
#define MSVQ_SYNTHETIC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "msvq/corpus.hpp"
#include "msvq/error.hpp"
#include "msvq/rng.hpp"
#include "msvq/signal.hpp"

namespace msvq {

// Desk-scale stand-in for a licensed signature corpus.
struct SyntheticSpec {
    std::uint64_t seed = 2011;
    std::size_t n_users = 40;
    std::size_t genuine_per_user = 20;
    std::size_t skilled_per_user = 20;
    std::size_t min_length = 300;
    std::size_t max_length = 600;
    // Relative variability between two genuine repetitions.
    double genuine_jitter = 0.04;
    // How far a forger's dynamics (speed profile, pressure, duration) drift from the target's.
    double forgery_dynamic_distortion = 0.5;

    void validate() const {
        if (n_users < 1) throw InvalidConfig("synthetic corpus needs at least one user");
        if (genuine_per_user < 1) throw InvalidConfig("synthetic corpus needs genuine signatures");
        if (min_length < 8 || max_length < min_length) throw InvalidConfig("invalid synthetic length range");
        if (!(genuine_jitter >= 0.0) || !(forgery_dynamic_distortion > genuine_jitter))
            throw InvalidConfig("genuine jitter must be non-negative and below the forgery distortion");
        if (forgery_dynamic_distortion > 1.0) throw InvalidConfig("forgery distortion must not exceed 1");
    }

    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

namespace synth_detail {

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct Wave {
    double amplitude, frequency, phase;
};

inline double eval_waves(const std::vector<Wave>& w, double u) {
    double s = 0.0;
    for (const auto& c : w) s += c.amplitude * std::sin(2.0 * std::numbers::pi * c.frequency * u + c.phase);
    return s;
}

inline std::vector<Wave> draw_waves(Rng& rng, double amp_lo, double amp_hi, double f_lo, double f_hi) {
    const auto n = static_cast<std::size_t>(rng.integer(3, 6));
    std::vector<Wave> w;
    for (std::size_t k = 0; k < n; ++k)
        w.push_back({rng.uniform(amp_lo, amp_hi), rng.uniform(f_lo, f_hi), rng.uniform(0.0, 2.0 * std::numbers::pi)});
    return w;
}

// Speed profile: maps normalized time tau to path position u with fixed endpoints,
// u = tau + sum_m b_m sin(pi m tau) / (pi m). Monotone while sum |b_m| < 1.
using SpeedProfile = std::array<double, 3>;

inline double warp(const SpeedProfile& b, double tau) {
    double u = tau;
    for (std::size_t m = 0; m < b.size(); ++m) {
        const double k = std::numbers::pi * static_cast<double>(m + 1);
        u += b[m] * std::sin(k * tau) / k;
    }
    return u;
}

inline SpeedProfile clamp_profile(SpeedProfile b) {
    double total = 0.0;
    for (double v : b) total += std::abs(v);
    if (total > 0.9)
        for (double& v : b) v *= 0.9 / total;
    return b;
}

// Hidden per-writer model.
struct Writer {
    double width = 0.0;
    std::vector<Wave> x, y, pressure;
    double pressure_level = 0.0;
    SpeedProfile speed{};
    double length = 0.0;
    double azimuth = 0.0, altitude = 0.0;
};

inline Writer draw_writer(Rng& rng, const SyntheticSpec& spec) {
    Writer w;
    w.width = rng.uniform(3000.0, 8000.0);
    w.x = draw_waves(rng, 300.0, 1500.0, 0.5, 6.0);
    w.y = draw_waves(rng, 300.0, 1500.0, 0.5, 6.0);
    w.pressure = draw_waves(rng, 0.05, 0.2, 0.5, 4.0);
    w.pressure_level = rng.uniform(400.0, 900.0);
    for (double& b : w.speed) b = rng.uniform(-0.3, 0.3);
    w.speed = clamp_profile(w.speed);
    w.length = rng.uniform(static_cast<double>(spec.min_length), static_cast<double>(spec.max_length));
    w.azimuth = rng.uniform(500.0, 3000.0);
    w.altitude = rng.uniform(400.0, 800.0);
    return w;
}

inline double pressure_at(const Writer& w, double u) {
    return w.pressure_level * std::max(0.15, 0.7 + eval_waves(w.pressure, u));
}

// How one rendering deviates from the target writer's prototype.
struct Rendering {
    double length = 0.0;
    SpeedProfile speed{};
    double scale_x = 1.0, scale_y = 1.0;
    double offset_x = 0.0, offset_y = 0.0;
    double noise = 0.0;
    // Pressure: blend between target and rendering writer.
    const Writer* pressure_writer = nullptr;
    double pressure_blend = 0.0;
    double pressure_gain = 1.0;
    // Spatial imitation error (forgeries).
    std::vector<Wave> shape_error_x, shape_error_y;
    // Pen-angle writer and per-rendering drift.
    const Writer* angle_writer = nullptr;
    std::vector<Wave> angle_drift_az, angle_drift_alt;
};

inline RawSignature render(const Writer& target, const Rendering& r, Rng& rng) {
    const auto n = static_cast<std::size_t>(std::max(8.0, std::round(r.length)));
    RawSignature sig;
    sig.sample_rate_hz = 100.0;
    sig.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = static_cast<double>(i) / static_cast<double>(n - 1);
        const double u = warp(r.speed, tau);
        Sample s;
        s.t = static_cast<double>(i);
        const double bx = target.width * u + eval_waves(target.x, u) + eval_waves(r.shape_error_x, u);
        const double by = eval_waves(target.y, u) + eval_waves(r.shape_error_y, u);
        s.x = std::round(r.offset_x + r.scale_x * bx + r.noise * rng.normal());
        s.y = std::round(r.offset_y + r.scale_y * by + r.noise * rng.normal());
        const double pt = pressure_at(target, u);
        const double pw = r.pressure_writer ? pressure_at(*r.pressure_writer, u) : pt;
        s.p = std::clamp(std::round(r.pressure_gain * ((1.0 - r.pressure_blend) * pt + r.pressure_blend * pw) +
                                    0.01 * target.pressure_level * rng.normal()),
                         1.0, 1024.0);
        const Writer& aw = r.angle_writer ? *r.angle_writer : target;
        s.azimuth = std::clamp(std::round(aw.azimuth + eval_waves(r.angle_drift_az, tau)), 0.0, 3600.0);
        s.altitude = std::clamp(std::round(aw.altitude + eval_waves(r.angle_drift_alt, tau)), 300.0, 900.0);
        sig.samples.push_back(s);
    }
    return sig;
}

inline SpeedProfile perturb(const SpeedProfile& b, double sd, Rng& rng) {
    SpeedProfile out = b;
    for (double& v : out) v += sd * rng.normal();
    return clamp_profile(out);
}

} // namespace synth_detail

struct SyntheticUser {
    std::string user_id;
    std::vector<RawSignature> genuine;
    std::vector<RawSignature> skilled;
    // Noise-free rendering with the writer's own dynamics.
    RawSignature prototype;
};

struct SyntheticCorpus {
    SyntheticSpec spec;
    std::vector<SyntheticUser> users;
};

inline std::string synthetic_user_id(std::size_t u) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "u%03zu", u + 1);
    return buf;
}

// Each user is a hidden writer: sinusoidal x/y trajectories, a smooth pressure
// envelope and a speed profile. Genuine repetitions jitter duration, speed,
// scale and pressure slightly. Skilled forgeries are rendered by one of the five
// following writers: same spatial shape up to a small imitation error, but with
// the forger's speed profile, duration and pressure mixed in by
// forgery_dynamic_distortion. Fully determined by spec.seed.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
    using namespace synth_detail;
    spec.validate();
    std::vector<Writer> writers;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        Rng rng(splitmix(spec.seed ^ splitmix(u + 1)));
        writers.push_back(draw_writer(rng, spec));
    }

    const double jit = spec.genuine_jitter;
    const double dist = spec.forgery_dynamic_distortion;
    auto angle_drift = [](Rng& rng, double amp) { return draw_waves(rng, 0.2 * amp, amp, 0.3, 3.0); };

    SyntheticCorpus corpus;
    corpus.spec = spec;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        const Writer& w = writers[u];
        Rng rng(splitmix(spec.seed ^ splitmix(0x5157ull + 977 * (u + 1))));
        SyntheticUser user;
        user.user_id = synthetic_user_id(u);

        Rendering proto;
        proto.length = w.length;
        proto.speed = w.speed;
        user.prototype = render(w, proto, rng);

        for (std::size_t k = 0; k < spec.genuine_per_user; ++k) {
            Rendering r;
            r.length = w.length * (1.0 + jit * rng.normal());
            r.speed = perturb(w.speed, jit, rng);
            r.scale_x = 1.0 + 0.5 * jit * rng.normal();
            r.scale_y = 1.0 + 0.5 * jit * rng.normal();
            r.offset_x = rng.uniform(2000.0, 4000.0);
            r.offset_y = rng.uniform(3000.0, 6000.0);
            r.noise = 10.0;
            r.pressure_gain = 1.0 + jit * rng.normal();
            r.angle_drift_az = angle_drift(rng, 150.0);
            r.angle_drift_alt = angle_drift(rng, 60.0);
            RawSignature sig = render(w, r, rng);
            sig.user_id = user.user_id;
            sig.kind = SignatureKind::genuine;
            sig.index = static_cast<int>(k);
            sig.session = static_cast<int>(k / 5);
            user.genuine.push_back(std::move(sig));
        }

        const std::size_t per_forger = std::max<std::size_t>(1, (spec.skilled_per_user + 4) / 5);
        for (std::size_t k = 0; k < spec.skilled_per_user; ++k) {
            const std::size_t forger_idx = spec.n_users > 1 ? (u + 1 + (k / per_forger) % 5) % spec.n_users : u;
            const Writer& f = writers[forger_idx];
            Rendering r;
            r.length = ((1.0 - dist) * w.length + dist * f.length) * (1.0 + jit * rng.normal());
            SpeedProfile mixed;
            for (std::size_t m = 0; m < mixed.size(); ++m) mixed[m] = (1.0 - dist) * w.speed[m] + dist * f.speed[m];
            r.speed = perturb(clamp_profile(mixed), dist * 0.15, rng);
            r.scale_x = 1.0 + 0.5 * jit * rng.normal();
            r.scale_y = 1.0 + 0.5 * jit * rng.normal();
            r.offset_x = rng.uniform(2000.0, 4000.0);
            r.offset_y = rng.uniform(3000.0, 6000.0);
            r.noise = 10.0;
            r.pressure_writer = &f;
            r.pressure_blend = dist;
            r.pressure_gain = 1.0 + jit * rng.normal();
            r.shape_error_x = draw_waves(rng, 10.0 * dist, 60.0 * dist, 0.5, 3.0);
            r.shape_error_y = draw_waves(rng, 10.0 * dist, 60.0 * dist, 0.5, 3.0);
            r.angle_writer = &f;
            r.angle_drift_az = angle_drift(rng, 150.0);
            r.angle_drift_alt = angle_drift(rng, 60.0);
            RawSignature sig = render(w, r, rng);
            sig.user_id = user.user_id;
            sig.kind = SignatureKind::skilled_forgery;
            sig.index = static_cast<int>(k);
            sig.session = static_cast<int>(forger_idx);
            user.skilled.push_back(std::move(sig));
        }
        corpus.users.push_back(std::move(user));
    }
    return corpus;
}

// Writes <dir>/manifest.json and one SIGv1 file per signature.
inline CorpusManifest write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
    CorpusManifest m;
    m.source = "synthetic seed=" + std::to_string(corpus.spec.seed);
    m.sample_rate_hz = 100.0;
    m.base_dir = dir;
    char name[32];
    for (const auto& u : corpus.users) {
        ManifestUser e;
        e.user_id = u.user_id;
        for (std::size_t k = 0; k < u.genuine.size(); ++k) {
            std::snprintf(name, sizeof name, "g%02zu.sig", k);
            e.genuine.push_back(u.user_id + "/" + name);
            write_signature_file(u.genuine[k], dir / e.genuine.back());
        }
        for (std::size_t k = 0; k < u.skilled.size(); ++k) {
            std::snprintf(name, sizeof name, "s%02zu.sig", k);
            e.skilled.push_back(u.user_id + "/" + name);
            write_signature_file(u.skilled[k], dir / e.skilled.back());
        }
        m.users.push_back(std::move(e));
    }
    save_manifest(m, dir / "manifest.json");
    return m;
}

} // namespace msvq

#endif
