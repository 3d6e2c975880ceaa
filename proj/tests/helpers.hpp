#ifndef MLSIF_TEST_HELPERS_HPP
#define MLSIF_TEST_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mlsif/series.hpp"

namespace testutil {

// Pattern chars: 'o' observed, 'm' missing, '1'..'9' imputed at that stage.
// Values at missing positions are ignored.
inline mlsif::TimeSeries series_from_pattern(const std::string& pattern,
                                             std::vector<double> values) {
    std::vector<mlsif::PointStatus> status;
    status.reserve(pattern.size());
    for (char c : pattern) {
        if (c == 'o')
            status.push_back(mlsif::PointStatus::observed());
        else if (c == 'm')
            status.push_back(mlsif::PointStatus::missing());
        else if (c >= '1' && c <= '9')
            status.push_back(mlsif::PointStatus::imputed(static_cast<std::uint32_t>(c - '0')));
        else
            throw std::runtime_error("bad pattern char");
    }
    return mlsif::TimeSeries(std::move(values), std::move(status));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline double gauss(std::mt19937_64& rng) {
    const double u1 = std::max(static_cast<double>(rng() >> 11) * 0x1.0p-53, 1e-300);
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::vector<double> random_multiset(std::mt19937_64& rng, std::size_t n,
                                           double lo = -10.0, double hi = 10.0) {
    std::vector<double> out(n);
    for (double& v : out) v = uniform(rng, lo, hi);
    return out;
}

// Independent statistics oracle: naive loops in extended precision, written
// straight from the defining formulas.
struct OracleIndexes {
    long double mu, sigma, skew_root, kurt_root;
};

inline OracleIndexes oracle_indexes(const std::vector<double>& x) {
    const auto n = static_cast<long double>(x.size());
    long double mu = 0;
    for (double v : x) mu += v;
    mu /= n;
    long double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const long double d = static_cast<long double>(v) - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const long double sigma = std::sqrt(m2);
    OracleIndexes out{mu, sigma, 0.0L, 0.0L};
    if (sigma >= 1e-12L) {
        const long double g3 = m3 / (sigma * sigma * sigma);
        const long double g4 = m4 / (m2 * m2);
        out.skew_root = std::cbrt(g3);
        out.kurt_root = std::pow(g4, 0.25L);
    }
    return out;
}

inline long double oracle_siv(const std::vector<double>& a, const std::vector<double>& b) {
    const OracleIndexes ia = oracle_indexes(a), ib = oracle_indexes(b);
    const long double d1 = ia.mu - ib.mu, d2 = ia.sigma - ib.sigma,
                      d3 = ia.skew_root - ib.skew_root, d4 = ia.kurt_root - ib.kurt_root;
    return d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4;
}

inline double rel_err(double got, long double want) {
    const long double denom = std::max<long double>(std::abs(want), 1e-30L);
    return static_cast<double>(std::abs(static_cast<long double>(got) - want) / denom);
}

// Central finite differences of a scalar function of a vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Worst relative disagreement between two gradients, guarding tiny entries
// with an absolute floor.
inline double grad_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                           double floor = 1e-7) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

inline double spearman_rank_correlation(const std::vector<double>& x,
                                        const std::vector<double>& y) {
    const std::size_t n = x.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

} // namespace testutil

#endif
