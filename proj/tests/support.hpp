#ifndef MSVQ_TEST_SUPPORT_HPP
#define MSVQ_TEST_SUPPORT_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "msvq.hpp"

namespace testing_support {

using msvq::Matrix;

inline Matrix random_matrix(std::mt19937_64& g, std::size_t rows, std::size_t cols, double lo = -3.0, double hi = 3.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(g);
    return m;
}

// Small-integer grid values make ties and duplicates common.
inline Matrix random_grid_matrix(std::mt19937_64& g, std::size_t rows, std::size_t cols, int lo = -2, int hi = 2) {
    std::uniform_int_distribution<int> u(lo, hi);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(g);
    return m;
}

inline double oracle_distance(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double d = a(i, k) - b(j, k);
        s += d * d;
    }
    return std::sqrt(s);
}

// Exhaustive nearest-neighbour scan.
inline double oracle_nner(const Matrix& x, const Matrix& cb) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cb.rows(); ++j) best = std::min(best, oracle_distance(x, i, cb, j));
        total += best;
    }
    return total;
}

// Enumerates every warping path under the (i-1,j), (i-1,j-1), (i-1,j-2) rule
// without any region constraint; start and end cells use relaxation eps.
inline double oracle_dtw(const Matrix& a, const Matrix& b, std::size_t eps) {
    const std::size_t I = a.rows(), J = b.rows();
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
        const bool end = (i == I - 1 && j + 1 + eps >= J) || (j == J - 1 && i + 1 + eps >= I);
        if (end) best = std::min(best, acc);
        if (i + 1 >= I) return;
        for (std::size_t step = 0; step <= 2; ++step)
            if (j + step < J) walk(i + 1, j + step, acc + oracle_distance(a, i + 1, b, j + step));
    };
    for (std::size_t j = 0; j < J && j < eps; ++j) walk(0, j, oracle_distance(a, 0, b, j));
    for (std::size_t i = 1; i < I && i < eps; ++i) walk(i, 0, oracle_distance(a, i, b, 0));
    return best / static_cast<double>(I);
}

// FAR and FRR at one threshold, accept iff score <= t.
inline std::pair<double, double> oracle_rates(const std::vector<double>& gen, const std::vector<double>& imp, double t) {
    double fa = 0, fr = 0;
    for (double s : imp) fa += s <= t;
    for (double s : gen) fr += s > t;
    return {fa / static_cast<double>(imp.size()), fr / static_cast<double>(gen.size())};
}

// Sum of squared errors of the best split of `x` into two non-empty groups.
struct TwoPartition {
    double sse = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> centroids;
};

inline TwoPartition oracle_two_partition(const Matrix& x) {
    TwoPartition best;
    const std::size_t n = x.rows(), d = x.cols();
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<std::vector<double>> c(2, std::vector<double>(d, 0.0));
        std::size_t cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1u;
            ++cnt[g];
            for (std::size_t k = 0; k < d; ++k) c[g][k] += x(i, k);
        }
        for (int g = 0; g < 2; ++g)
            for (auto& v : c[g]) v /= static_cast<double>(cnt[g]);
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int g = (mask >> i) & 1u;
            for (std::size_t k = 0; k < d; ++k) sse += (x(i, k) - c[g][k]) * (x(i, k) - c[g][k]);
        }
        if (sse < best.sse) best = {sse, c};
    }
    return best;
}

inline msvq::RawSignature make_signature(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::vector<double>& p) {
    msvq::RawSignature s;
    for (std::size_t i = 0; i < x.size(); ++i)
        s.samples.push_back({static_cast<double>(i), x[i], y[i], p.empty() ? 0.0 : p[i], 900.0, 500.0});
    return s;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("msvq-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Every regular file under `root`, keyed by relative path, with contents.
inline std::vector<std::pair<std::string, std::string>> tree_contents(const std::filesystem::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.emplace_back(std::filesystem::relative(e.path(), root).string(), slurp(e.path()));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace testing_support

#endif
