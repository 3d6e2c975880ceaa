#ifndef MLSIF_STATS_HPP
#define MLSIF_STATS_HPP

#include <cmath>
#include <span>
#include <vector>

#include "mlsif/errors.hpp"

namespace mlsif {

// Below this spread a value multiset is treated as constant: the standardized
// moments are 0/0 and both rooted moments are defined as 0.
inline constexpr double kDegenerateSigma = 1e-12;

// The four indexes of a value multiset. Skewness and kurtosis are stored as
// the signed cube root / fourth root of the standardized moments, so all four
// share the dimension of the data.
struct StatIndexes {
    double mu = 0.0;
    double sigma = 0.0;
    double skew_root = 0.0; // sign-preserving cbrt of (1/n) sum z^3
    double kurt_root = 0.0; // fourth root of (1/n) sum z^4
};

// Two-pass population moments; accuracy matters more than speed at these sizes.
inline StatIndexes compute_indexes(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("compute_indexes: empty multiset");
    const std::size_t n = values.size();
    double sum = 0;
    for (double v : values) sum += v;
    const double mu = sum / static_cast<double>(n);

    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : values) {
        const double d = v - mu;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);

    StatIndexes out;
    out.mu = mu;
    out.sigma = std::sqrt(m2);
    if (out.sigma < kDegenerateSigma) {
        out.skew_root = 0.0;
        out.kurt_root = 0.0;
        return out;
    }
    out.skew_root = std::cbrt(m3 / (m2 * out.sigma));
    out.kurt_root = std::pow(m4 / (m2 * m2), 0.25);
    return out;
}

inline StatIndexes compute_indexes(const std::vector<double>& values) {
    return compute_indexes(std::span<const double>(values));
}

// Statistical indexes variation: the squared gap in each of the four indexes.
// The two multisets may have different sizes.
inline double siv(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidInput("siv: empty multiset");
    const StatIndexes ia = compute_indexes(a);
    const StatIndexes ib = compute_indexes(b);
    const double dmu = ia.mu - ib.mu;
    const double dsg = ia.sigma - ib.sigma;
    const double dsk = ia.skew_root - ib.skew_root;
    const double dku = ia.kurt_root - ib.kurt_root;
    return dmu * dmu + dsg * dsg + dsk * dsk + dku * dku;
}

inline double siv(const std::vector<double>& a, const std::vector<double>& b) {
    return siv(std::span<const double>(a), std::span<const double>(b));
}

// SIV between the values known before imputation and the completed sequence.
inline double siv_imputation(std::span<const double> observed,
                             std::span<const double> completed) {
    return siv(observed, completed);
}

inline double siv_imputation(const std::vector<double>& observed,
                             const std::vector<double>& completed) {
    return siv(std::span<const double>(observed), std::span<const double>(completed));
}

} // namespace mlsif

#endif
