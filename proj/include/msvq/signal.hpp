#ifndef MSVQ_SIGNAL_HPP
#define MSVQ_SIGNAL_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msvq/error.hpp"
#include "msvq/matrix.hpp"

namespace msvq {

// One tablet sample. t is in sample-index units for the canonical format,
// re-based milliseconds for SVC imports.
struct Sample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double p = 0.0;
    double azimuth = 0.0;
    double altitude = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class SignatureKind { genuine, skilled_forgery, random_forgery };

inline std::string_view to_string(SignatureKind k) {
    switch (k) {
    case SignatureKind::genuine: return "genuine";
    case SignatureKind::skilled_forgery: return "skilled_forgery";
    case SignatureKind::random_forgery: return "random_forgery";
    }
    return "genuine";
}

struct RawSignature {
    std::vector<Sample> samples;
    double sample_rate_hz = 100.0;
    std::string user_id;
    SignatureKind kind = SignatureKind::genuine;
    int session = 0;
    int index = 0;
    // Per-sample pen button status (SVC imports only; empty otherwise).
    std::vector<int> pen_status;

    std::size_t size() const noexcept { return samples.size(); }

    void validate() const {
        if (samples.empty()) throw InvalidInput("signature has no samples");
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
            throw InvalidInput("sample rate must be positive");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Sample& s = samples[i];
            for (double v : {s.t, s.x, s.y, s.p, s.azimuth, s.altitude})
                if (!std::isfinite(v))
                    throw InvalidInput("non-finite value in sample " + std::to_string(i));
            if (i > 0 && !(s.t > samples[i - 1].t))
                throw InvalidInput("timestamps not strictly increasing at sample " + std::to_string(i));
        }
        if (!pen_status.empty() && pen_status.size() != samples.size())
            throw InvalidInput("pen status length does not match sample count");
    }

    friend bool operator==(const RawSignature&, const RawSignature&) = default;
};

enum class FeatureSetId { FS1 = 1, FS2, FS3, FS4, FS5, FS6 };

enum class Channel { x, y, p, azimuth, altitude, dx, dy, dp, t };

inline std::span<const Channel> feature_components(FeatureSetId fs) {
    using C = Channel;
    static constexpr std::array fs1{C::x, C::y, C::p, C::azimuth, C::altitude};
    static constexpr std::array fs2{C::x, C::y, C::dx, C::dy};
    static constexpr std::array fs3{C::x, C::y, C::p, C::dx, C::dy, C::dp};
    static constexpr std::array fs4{C::x, C::y, C::p, C::dx, C::dy};
    static constexpr std::array fs5{C::x, C::y, C::dx, C::dy, C::dp};
    static constexpr std::array fs6{C::x, C::y, C::dx, C::dy, C::dp, C::t};
    switch (fs) {
    case FeatureSetId::FS1: return fs1;
    case FeatureSetId::FS2: return fs2;
    case FeatureSetId::FS3: return fs3;
    case FeatureSetId::FS4: return fs4;
    case FeatureSetId::FS5: return fs5;
    case FeatureSetId::FS6: return fs6;
    }
    throw InvalidConfig("unknown feature set");
}

inline std::size_t feature_dimension(FeatureSetId fs) { return feature_components(fs).size(); }

inline std::string to_string(FeatureSetId fs) { return "FS" + std::to_string(static_cast<int>(fs)); }

// Accepts "FS6", "fs6" or "6".
inline FeatureSetId parse_feature_set(std::string_view s) {
    if (s.size() == 3 && (s[0] == 'F' || s[0] == 'f') && (s[1] == 'S' || s[1] == 's')) s.remove_prefix(2);
    if (s.size() == 1 && s[0] >= '1' && s[0] <= '6') return static_cast<FeatureSetId>(s[0] - '0');
    throw InvalidConfig("unknown feature set '" + std::string(s) + "'");
}

// Population z-norm; a zero-variance series maps to all zeros.
inline std::vector<double> znorm(std::span<const double> series) {
    if (series.empty()) throw InvalidInput("znorm of an empty series");
    const double n = static_cast<double>(series.size());
    double mean = 0.0;
    for (double v : series) {
        if (!std::isfinite(v)) throw InvalidInput("znorm of a non-finite value");
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);

    std::vector<double> out(series.size(), 0.0);
    if (sd == 0.0) return out;
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - mean) / sd;
    return out;
}

struct FeatureMatrix {
    Matrix values;
    FeatureSetId feature_set = FeatureSetId::FS6;
    std::string source;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t dim() const noexcept { return values.cols(); }
    operator RowBlock() const { return values.view(); }
};

namespace detail {

// Backward first difference, first element 0.
inline std::vector<double> backward_difference(const std::vector<double>& v) {
    std::vector<double> d(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) d[i] = v[i] - v[i - 1];
    return d;
}

// Positions relative to the first sample, then to the center of mass. Anchoring
// on the first sample first keeps integer tablet data exactly translation-invariant.
inline std::vector<double> center(std::vector<double> v) {
    const double anchor = v.front();
    for (double& e : v) e -= anchor;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& e : v) e -= mean;
    return v;
}

} // namespace detail

// Center-of-mass translation, backward differences, feature assembly, per-column z-norm.
inline FeatureMatrix preprocess(const RawSignature& sig, FeatureSetId fs) {
    sig.validate();
    const auto components = feature_components(fs);
    const std::size_t n = sig.size();

    std::vector<double> x(n), y(n), p(n), az(n), alt(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = sig.samples[i];
        x[i] = s.x;
        y[i] = s.y;
        p[i] = s.p;
        az[i] = s.azimuth;
        alt[i] = s.altitude;
        t[i] = static_cast<double>(i);
    }
    x = detail::center(std::move(x));
    y = detail::center(std::move(y));

    auto channel = [&](Channel c) -> std::vector<double> {
        switch (c) {
        case Channel::x: return x;
        case Channel::y: return y;
        case Channel::p: return p;
        case Channel::azimuth: return az;
        case Channel::altitude: return alt;
        case Channel::dx: return detail::backward_difference(x);
        case Channel::dy: return detail::backward_difference(y);
        case Channel::dp: return detail::backward_difference(p);
        case Channel::t: return t;
        }
        return {};
    };

    FeatureMatrix out;
    out.feature_set = fs;
    out.source = sig.user_id;
    out.values = Matrix(n, components.size());
    for (std::size_t j = 0; j < components.size(); ++j) {
        const auto col = znorm(channel(components[j]));
        for (std::size_t i = 0; i < n; ++i) out.values(i, j) = col[i];
    }
    return out;
}

} // namespace msvq

#endif
