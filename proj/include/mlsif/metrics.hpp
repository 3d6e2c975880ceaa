#ifndef MLSIF_METRICS_HPP
#define MLSIF_METRICS_HPP

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlsif/errors.hpp"
#include "mlsif/series.hpp"
#include "mlsif/stats.hpp"

namespace mlsif {

// Removed ground truth O paired with the imputations P written at the same
// positions.
struct PairedEval {
    std::vector<double> truth;     // O
    std::vector<double> predicted; // P

    void validate() const {
        if (truth.size() != predicted.size())
            throw InvalidInput("paired eval: length mismatch");
        if (truth.empty()) throw InvalidInput("paired eval: empty input");
    }
    std::size_t size() const { return truth.size(); }
};

inline double mse(const PairedEval& e) {
    e.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = e.predicted[i] - e.truth[i];
        s += d * d;
    }
    return s / static_cast<double>(e.size());
}

inline double mae(const PairedEval& e) {
    e.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        s += std::abs(e.predicted[i] - e.truth[i]);
    return s / static_cast<double>(e.size());
}

inline double rmse(const PairedEval& e) { return std::sqrt(mse(e)); }
inline double rmae(const PairedEval& e) { return std::sqrt(mae(e)); }

// Index of agreement: 1 - sum (p-o)^2 / sum (|p-obar| + |o-obar|)^2.
inline double d2(const PairedEval& e) {
    e.validate();
    double obar = 0.0;
    for (double o : e.truth) obar += o;
    obar /= static_cast<double>(e.size());

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = e.predicted[i] - e.truth[i];
        num += d * d;
        const double spread = std::abs(e.predicted[i] - obar) + std::abs(e.truth[i] - obar);
        den += spread * spread;
    }
    if (den <= 0.0)
        throw UndefinedMetric("d2: zero spread denominator (constant truth, P at its mean)");
    return 1.0 - num / den;
}

// Squared Pearson correlation with population standard deviations.
inline double r2(const PairedEval& e) {
    e.validate();
    const std::size_t n = e.size();
    if (n < 2) throw UndefinedMetric("r2 needs at least 2 pairs");
    double pbar = 0.0, obar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pbar += e.predicted[i];
        obar += e.truth[i];
    }
    pbar /= static_cast<double>(n);
    obar /= static_cast<double>(n);

    double cov = 0.0, vp = 0.0, vo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dp = e.predicted[i] - pbar;
        const double dof = e.truth[i] - obar;
        cov += dp * dof;
        vp += dp * dp;
        vo += dof * dof;
    }
    cov /= static_cast<double>(n);
    vp /= static_cast<double>(n);
    vo /= static_cast<double>(n);
    if (vp <= 0.0 || vo <= 0.0)
        throw UndefinedMetric("r2: zero standard deviation in one sequence");
    const double rho = cov / (std::sqrt(vp) * std::sqrt(vo));
    return rho * rho;
}

// SIV between the observed values of the pre-imputation series and all known
// values of the completed series. Points already imputed in the before-series
// count toward its value multiset only when trust_imputed is set.
inline double global_siv(const TimeSeries& before, const TimeSeries& after,
                         bool trust_imputed = false) {
    if (before.size() != after.size())
        throw InvalidInput("global_siv: series lengths differ");
    std::vector<double> obs =
        trust_imputed ? before.known_values() : before.observed_values();
    if (obs.empty()) throw InvalidInput("global_siv: no observed points in before-series");
    std::vector<double> completed = after.known_values();
    if (completed.empty()) throw InvalidInput("global_siv: after-series has no known points");
    return siv(obs, completed);
}

// Per-window SIV between pre- and post-imputation values, summed over windows.
// Windows with no observed point before imputation are skipped.
inline double local_siv(const TimeSeries& before, const TimeSeries& after,
                        std::size_t eval_window, bool trust_imputed = false) {
    if (before.size() != after.size())
        throw InvalidInput("local_siv: series lengths differ");
    if (eval_window < 1 || eval_window > before.size())
        throw InvalidInput("local_siv: eval window out of range");
    const auto before_segs = split(before, eval_window);
    const auto after_segs = split(after, eval_window);
    double total = 0.0;
    for (std::size_t s = 0; s < before_segs.size(); ++s) {
        std::vector<double> obs;
        for (std::size_t i = 0; i < before_segs[s].length(); ++i) {
            const auto& st = before_segs[s].status(i);
            if (st.is_observed() || (trust_imputed && st.is_known()))
                obs.push_back(before_segs[s].value(i));
        }
        if (obs.empty()) continue;
        std::vector<double> completed = after_segs[s].known_values();
        if (completed.empty()) continue;
        total += siv_imputation(obs, completed);
    }
    return total;
}

// One row of evaluation results; a metric is absent when its preconditions
// fail on the given data.
struct MetricReport {
    std::optional<double> mse, mae, rmse, rmae, r2, d2;
    std::optional<double> global_siv, local_siv;

    static constexpr const char* kCsvHeader = "mse,mae,rmse,rmae,r2,d2,global_siv,local_siv";
};

// Paired metrics only; SIV fields are left empty for the caller.
inline MetricReport paired_metrics(const PairedEval& e) {
    MetricReport r;
    r.mse = mse(e);
    r.mae = mae(e);
    r.rmse = std::sqrt(*r.mse);
    r.rmae = std::sqrt(*r.mae);
    try {
        r.d2 = d2(e);
    } catch (const UndefinedMetric&) {
    }
    try {
        r.r2 = r2(e);
    } catch (const UndefinedMetric&) {
    }
    return r;
}

} // namespace mlsif

#endif
